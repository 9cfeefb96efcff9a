"""Interaction-frame Hamiltonians and propagators.

Everything is written with hbar = 1, so Hamiltonians carry angular
frequency units and U = exp(-i integral H dt).

The interaction frame rotates at the qubit splitting and at each mode
frequency. A laser at detuning Delta from the carrier driving ion i
with Rabi frequency Omega and phase phi contributes

    H_i(t) = (Omega/2) sigma_plus_i e^{i(phi - Delta t)}
             prod_m exp[i eta_im (a_m e^{-i w_m t} + a_m^dag e^{i w_m t})]
             + h.c.

By default the mode exponential is truncated at first order per mode
(Lamb-Dicke); ld_exact=True keeps the full displacement exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .hilbert import (HilbertLayout, SIGMA_PLUS, SIGMA_Z, destroy, embed)

TAU = 2.0 * math.pi


@dataclass
class Drive:
    """One laser tone on one ion. detuning is laser minus carrier, angular.
    envelope, if set, multiplies the Rabi frequency: Omega(t) = Omega * envelope(t).
    """

    ion: int
    rabi: float
    detuning: float = 0.0
    phase: float = 0.0
    envelope: object = None


@dataclass
class EngineSpec:
    """Trap context for the time-domain engine: mode frequencies (angular)
    and the ion-by-mode Lamb-Dicke matrix eta[i, m]."""

    layout: HilbertLayout
    mode_freqs: tuple
    etas: np.ndarray
    ld_exact: bool = False

    def __post_init__(self):
        self.mode_freqs = tuple(float(w) for w in self.mode_freqs)
        if len(self.mode_freqs) != self.layout.n_modes:
            raise ValueError("one frequency per mode required")
        self.etas = np.asarray(self.etas, dtype=float)
        if self.etas.shape != (self.layout.n_ions, self.layout.n_modes):
            raise ValueError("etas must be (n_ions, n_modes)")
        # cache embedded ladder operators per mode
        lay = self.layout
        self._a_ops = [embed(lay, destroy(lay.cutoffs[m]), [lay.mode_axis(m)])
                       for m in range(lay.n_modes)]
        self._sp_ops = [embed(lay, SIGMA_PLUS, [i]) for i in range(lay.n_ions)]


def hamiltonian_at(spec: EngineSpec, drives, t: float) -> np.ndarray:
    """Interaction-frame Hamiltonian at time t for the listed drives."""
    lay = spec.layout
    h = np.zeros((lay.dim, lay.dim), dtype=complex)
    for d in drives:
        amp = d.rabi
        if d.envelope is not None:
            amp = amp * d.envelope(t)
        if amp == 0.0:
            continue
        # motional factor, product over modes
        kick = np.eye(lay.dim, dtype=complex)
        for m in range(lay.n_modes):
            eta = spec.etas[d.ion, m]
            if eta == 0.0:
                continue
            a = spec._a_ops[m]
            quad = a * np.exp(-1j * spec.mode_freqs[m] * t)
            quad = quad + quad.conj().T
            if spec.ld_exact:
                kick = kick @ expm(1j * eta * quad)
            else:
                kick = kick @ (np.eye(lay.dim) + 1j * eta * quad)
        term = (0.5 * amp * np.exp(1j * (d.phase - d.detuning * t))) \
            * (spec._sp_ops[d.ion] @ kick)
        h += term + term.conj().T
    return h


# fourth-order commutator-free Magnus scheme (two exponentials,
# Gauss-Legendre nodes)
_CF4_C1 = 0.5 - math.sqrt(3.0) / 6.0
_CF4_C2 = 0.5 + math.sqrt(3.0) / 6.0
_CF4_A1 = 0.25 + math.sqrt(3.0) / 6.0
_CF4_A2 = 0.25 - math.sqrt(3.0) / 6.0


def _cf4_step(h_func, t: float, dt: float) -> np.ndarray:
    h1 = h_func(t + _CF4_C1 * dt)
    h2 = h_func(t + _CF4_C2 * dt)
    left = expm(-1j * dt * (_CF4_A2 * h1 + _CF4_A1 * h2))
    right = expm(-1j * dt * (_CF4_A1 * h1 + _CF4_A2 * h2))
    return left @ right


def propagate_fixed(h_func, t_total: float, steps: int, t0: float = 0.0) -> np.ndarray:
    dt = t_total / steps
    dim = h_func(t0).shape[0]
    u = np.eye(dim, dtype=complex)
    for k in range(steps):
        u = _cf4_step(h_func, t0 + k * dt, dt) @ u
    return u


def _expmv(a: np.ndarray, v: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """exp(a) @ v by Taylor summation; a is assumed to have modest norm
    (one CF4 substep), where this beats forming the dense exponential."""
    out = v.copy()
    term = v
    for k in range(1, 80):
        term = a @ term / k
        out = out + term
        if np.linalg.norm(term) < tol * np.linalg.norm(out):
            break
    return out


def _cf4_step_state(h_func, t: float, dt: float, psi: np.ndarray) -> np.ndarray:
    h1 = h_func(t + _CF4_C1 * dt)
    h2 = h_func(t + _CF4_C2 * dt)
    psi = _expmv(-1j * dt * (_CF4_A1 * h1 + _CF4_A2 * h2), psi)
    return _expmv(-1j * dt * (_CF4_A2 * h1 + _CF4_A1 * h2), psi)


def propagate_state(h_func, t_total: float, psi0: np.ndarray, steps: int,
                    t0: float = 0.0, keep_every: int = 0):
    """CF4 evolution of a single state. With keep_every > 0 also returns
    the sampled trajectory [(t, psi), ...] including the endpoint."""
    dt = t_total / steps
    psi = np.asarray(psi0, dtype=complex).copy()
    traj = [(t0, psi.copy())] if keep_every else None
    for k in range(steps):
        psi = _cf4_step_state(h_func, t0 + k * dt, dt, psi)
        if keep_every and ((k + 1) % keep_every == 0 or k == steps - 1):
            traj.append((t0 + (k + 1) * dt, psi.copy()))
    if keep_every:
        return psi, traj
    return psi


def propagate_state_adaptive(h_func, t_total: float, psi0: np.ndarray,
                             tol: float = 1e-8, min_steps: int = 64,
                             max_steps: int = 1 << 22, t0: float = 0.0):
    """Step-halved CF4 on a state: double the step count until the final
    state moves less than tol in 2-norm."""
    steps = max(2, int(min_steps))
    prev = propagate_state(h_func, t_total, psi0, steps, t0)
    while True:
        steps *= 2
        cur = propagate_state(h_func, t_total, psi0, steps, t0)
        err = float(np.linalg.norm(cur - prev))
        if err < tol or steps >= max_steps:
            return cur, {"steps": steps, "error": err, "converged": err < tol}
        prev = cur


def propagate(h_func, t_total: float, tol: float = 1e-10, min_steps: int = 16,
              max_steps: int = 1 << 20, t0: float = 0.0):
    """Propagator over [t0, t0 + t_total] with step halving until the
    spectral-norm change falls below tol.

    Returns (U, info); info carries the final step count and the last
    halving difference so callers can log convergence.
    """
    steps = max(2, int(min_steps))
    u_prev = propagate_fixed(h_func, t_total, steps, t0)
    while True:
        steps *= 2
        u = propagate_fixed(h_func, t_total, steps, t0)
        err = float(np.linalg.norm(u - u_prev, 2))
        if err < tol or steps >= max_steps:
            converged = err < tol
            return u, {"steps": steps, "error": err, "converged": converged}
        u_prev = u


def drives_hamiltonian(spec: EngineSpec, drives):
    """Closure suitable for propagate()."""
    return lambda t: hamiltonian_at(spec, drives, t)


# ---------------------------------------------------------------- RWA layer
#
# Closed-form unitaries for resonant rectangular pulses, used by the pulse
# program executor. Areas are defined on the lowest manifold; higher Fock
# manifolds scale inside the exponential (sqrt(n+1) on first sidebands).


def rc_unitary(theta: float, phi: float) -> np.ndarray:
    """Carrier rotation exp[i theta/2 (e^{i phi} sigma+ + e^{-i phi} sigma-)]
    on the (D, S) qubit."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array([[c, 1j * np.exp(1j * phi) * s],
                     [1j * np.exp(-1j * phi) * s, c]], dtype=complex)


def _ladder_angle(theta: float, n: int, order: int) -> float:
    # normalized so the lowest manifold (n = 0) sees exactly theta
    g = math.sqrt(math.prod(range(n + 1, n + order + 1)) / math.factorial(order))
    return theta * g


def blue_unitary(theta: float, phi: float, cutoff: int, order: int = 1) -> np.ndarray:
    """Blue-sideband rotation on one ion and one mode, shape (2*cutoff,
    2*cutoff) over the (ion, mode) factors in layout order.

    order=1: exp[i theta/2 (e^{i phi} sigma+ a^dag + h.c.)], coupling
    |S, n> with |D, n+1> at angle sqrt(n+1) theta. Higher order k couples
    |S, n> with |D, n+k>, normalized so |S,0> <-> |D,k> sees theta.
    """
    u = np.eye(2 * cutoff, dtype=complex)
    for n in range(cutoff - order):
        th = _ladder_angle(theta, n, order)
        c, s = math.cos(th / 2.0), math.sin(th / 2.0)
        i_d = 0 * cutoff + (n + order)  # |D, n+order>
        i_s = 1 * cutoff + n            # |S, n>
        u[i_d, i_d] = c
        u[i_s, i_s] = c
        u[i_d, i_s] = 1j * np.exp(1j * phi) * s
        u[i_s, i_d] = 1j * np.exp(-1j * phi) * s
    return u


def red_unitary(theta: float, phi: float, cutoff: int, order: int = 1) -> np.ndarray:
    """Red-sideband rotation: exp[i theta/2 (e^{i phi} sigma+ a + h.c.)]
    for order=1, coupling |S, n+1> with |D, n> at angle sqrt(n+1) theta."""
    u = np.eye(2 * cutoff, dtype=complex)
    for n in range(cutoff - order):
        th = _ladder_angle(theta, n, order)
        c, s = math.cos(th / 2.0), math.sin(th / 2.0)
        i_d = 0 * cutoff + n            # |D, n>
        i_s = 1 * cutoff + (n + order)  # |S, n+order>
        u[i_d, i_d] = c
        u[i_s, i_s] = c
        u[i_d, i_s] = 1j * np.exp(1j * phi) * s
        u[i_s, i_d] = 1j * np.exp(-1j * phi) * s
    return u


def starkz_unitary(phi: float) -> np.ndarray:
    """Light-shift z rotation exp(i phi sigma_z / 2); |D> picks up +phi/2."""
    return np.array([[np.exp(1j * phi / 2.0), 0.0],
                     [0.0, np.exp(-1j * phi / 2.0)]], dtype=complex)


def modephase_unitary(phi: float, cutoff: int) -> np.ndarray:
    """exp(i phi n_hat) on one mode: Fock state n advances by n phi."""
    return np.diag(np.exp(1j * phi * np.arange(cutoff))).astype(complex)


# ------------------------------------------------- forced oscillator gates


def forced_alpha_phase(g: complex, delta: float, t: float) -> tuple[complex, float]:
    """Coherent response of a mode to H(t) = g a^dag e^{i delta t} + h.c.

    alpha(t) = -(g/delta)(e^{i delta t} - 1)
    Phi(t)   = (|g|/delta)^2 (delta t - sin(delta t))

    The loop closes at t = 2 pi/delta with Phi = 2 pi (|g|/delta)^2.
    """
    if delta == 0.0:
        # resonant force: straight-line displacement, no area
        return -1j * g * t, 0.0
    alpha = -(g / delta) * (np.exp(1j * delta * t) - 1.0)
    phase = (abs(g) / delta) ** 2 * (delta * t - math.sin(delta * t))
    return complex(alpha), float(phase)


def displacement(alpha: complex, cutoff: int) -> np.ndarray:
    a = destroy(cutoff)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def forced_oscillator_propagator(g: complex, delta: float, t: float,
                                 cutoff: int) -> np.ndarray:
    """exp(i Phi) D(alpha) on a single truncated mode."""
    alpha, phase = forced_alpha_phase(g, delta, t)
    return np.exp(1j * phase) * displacement(alpha, cutoff)


def spin_dependent_force_gate(layout: HilbertLayout, mode: int, g_of_spins,
                              delta: float, t: float) -> np.ndarray:
    """Full-space unitary for a force whose amplitude depends on the ion
    z-basis configuration: block diagonal over spin configs, each block
    exp(i Phi_s) D(alpha_s) on the chosen mode.

    g_of_spins maps a tuple of ion basis indices (0 = D, 1 = S) to the
    complex force amplitude g_s.
    """
    n = layout.n_ions
    cut = layout.cutoffs[mode]
    dim_spins = 2**n
    blocks = {}
    for s_flat in range(dim_spins):
        cfg = tuple((s_flat >> (n - 1 - i)) & 1 for i in range(n))
        g = complex(g_of_spins(cfg))
        key = g
        if key not in blocks:
            blocks[key] = forced_oscillator_propagator(g, delta, t, cut)
    # assemble on (spins..., mode) then lift over any other modes
    u_small = np.zeros((dim_spins * cut, dim_spins * cut), dtype=complex)
    for s_flat in range(dim_spins):
        cfg = tuple((s_flat >> (n - 1 - i)) & 1 for i in range(n))
        g = complex(g_of_spins(cfg))
        blk = blocks[g]
        sl = slice(s_flat * cut, (s_flat + 1) * cut)
        u_small[sl, sl] = blk
    axes = list(range(n)) + [layout.mode_axis(mode)]
    return embed(layout, u_small, axes)
