"""Composite pulse sequences and entangling gates.

Functions here return instruction tuples ready to splice into programs,
plus numeric helpers for the bichromatic and forced-oscillator gates.
All sequences are written in time order (first pulse first).
"""

from __future__ import annotations

import math

import numpy as np

from . import hamiltonian as ham
from .hilbert import layout_new, basis_state
from .program import (AcPhase, Bichromatic, GeometricForce, PulseBlue,
                      PulseCarrier, StarkZ)

SQRT2 = math.sqrt(2.0)
PI = math.pi

# Phase of the middle swap pulse: arccos(cot^2(pi/sqrt2)). With this value
# the three-pulse sequence below is an exact exchange on the lowest
# sideband manifold.
PHI_SWAP = math.acos(1.0 / math.tan(PI / SQRT2) ** 2)


def composite_phase_gate(ion: int, mode: int = 0) -> tuple:
    """Four blue-sideband pulses realizing diag(1, -1, -1, -1) on
    (|D,0>, |S,0>, |D,1>, |S,1>) exactly; the four states return to
    themselves with no population left elsewhere.

    Both two-level manifolds {|S,0>,|D,1>} and {|S,1>,|D,2>} traverse
    closed Bloch loops picking up -1 each: the pi/sqrt2 pulses read as
    area sqrt2 pi on the upper manifold and close it, and the
    interleaved pi pulses with a 90 degree phase step close the lower
    one. |D,0> is dark throughout.
    """
    return (
        PulseBlue(ion, PI / SQRT2, 0.0, mode),
        PulseBlue(ion, PI, PI / 2.0, mode),
        PulseBlue(ion, PI / SQRT2, 0.0, mode),
        PulseBlue(ion, PI, PI / 2.0, mode),
    )


def composite_swap(ion: int, mode: int = 0, phase_offset: float = 0.0) -> tuple:
    """Three blue-sideband pulses exchanging |S,0> <-> |D,1> while leaving
    |D,0> and |S,1> exactly fixed (the n=1 manifold is driven through a
    full loop of area 2 pi effective).

    phase_offset shifts every pulse phase; pi gives the inverse exchange
    branch used when the sequence must be undone.
    """
    return (
        PulseBlue(ion, PI / SQRT2, phase_offset, mode),
        PulseBlue(ion, 2.0 * PI / SQRT2, PHI_SWAP + phase_offset, mode),
        PulseBlue(ion, PI / SQRT2, phase_offset, mode),
    )


def cirac_zoller_cnot(control: int, target: int, mode: int = 0) -> tuple:
    """Controlled NOT via the bus mode: map the control onto the motion,
    wrap the composite phase gate on the target in a Ramsey pair, unmap.

    Exactly the canonical CNOT on (D,S) x (D,S) with logical 1 = |D>:
    control |D> flips the target, control |S> leaves it alone, and the
    bus returns to |0> with no residual phases.
    """
    return (
        PulseBlue(control, PI, 0.0, mode),
        PulseCarrier(target, PI / 2.0, -PI / 2.0),
        *composite_phase_gate(target, mode),
        PulseCarrier(target, PI / 2.0, +PI / 2.0),
        PulseBlue(control, PI, 0.0, mode),
    )


def cz_gate(control: int, target: int, mode: int = 0) -> tuple:
    """Controlled Z: -1 on |DD> (logical |11>), +1 elsewhere, up to a
    global phase. Same bus construction as the CNOT without the Ramsey
    wrapper, plus a z correction on the control."""
    return (
        PulseBlue(control, PI, 0.0, mode),
        *composite_phase_gate(target, mode),
        PulseBlue(control, PI, 0.0, mode),
        StarkZ(control, PI),
    )


def addressed_flip_composite(ion: int) -> tuple:
    """pi/2 - z(pi) - pi/2 composite equal to [[0,-1],[1,0]] exactly: a
    population flip built from two half pulses and a light shift, the
    addressed-beam workaround for driving a plain pi flip."""
    return (
        PulseCarrier(ion, PI / 2.0, 0.0),
        StarkZ(ion, PI),
        PulseCarrier(ion, PI / 2.0, PI),
    )


def ac_stark_motional_phase_gate(ion: int, mode: int = 0) -> tuple:
    """Motion-conditioned phase diag(1, 1, -i, i) on (D0, S0, D1, S1).

    Physically an off-resonant blue-sideband beam: each |S,n> <-> |D,n+1>
    manifold is light-shifted in proportion to its coupling (n+1), and
    after t = 2 pi Delta / (eta Omega)^2 the accumulated phases, with the
    n-independent part absorbed in a qubit z rotation, form
    exp(-i (pi/2) sigma_z n_hat)."""
    return (AcPhase(ion, mode, PI / 2.0),)


def ac_stark_gate_time(eta: float, omega: float, delta: float) -> float:
    """Duration realizing the pi/2 conditional phase above."""
    return 2.0 * PI * delta / (eta * omega) ** 2


# -------------------------------------------------------------- MS gate


def ms_instruction(ions=(0, 1), mode: int = 0, *, eta: float = 0.1,
                   delta: float = None, trap_freq: float = 2.0 * PI * 1.0e6,
                   omega: float = None, loops: int = 1,
                   ramp_frac: float = 0.0) -> Bichromatic:
    """Bichromatic instruction for a maximally entangling MS gate.

    If omega is omitted it is set by calibrate_ms for these parameters.
    """
    if delta is None:
        delta = trap_freq / 25.0
    duration = 2.0 * PI * loops / delta
    if omega is None:
        omega = calibrate_ms(eta=eta, delta=delta, trap_freq=trap_freq,
                             loops=loops, ramp_frac=ramp_frac)
    return Bichromatic(ions=tuple(ions), mode=mode, delta=delta, omega=omega,
                       duration=duration, eta=eta, trap_freq=trap_freq,
                       ramp_frac=ramp_frac)


def ms_target_states(cutoff: int):
    """(input, ideal output) pairs for the documented MS unitary
    e^{i pi/4} exp(-i pi/4 XX): |SS> goes to (|SS> - i|DD>)/sqrt2."""
    lay = layout_new(2, (cutoff,))
    ss = basis_state(lay, "SS")
    dd = basis_state(lay, "DD")
    return ss, (ss - 1j * dd) / SQRT2


def _ms_context(eta, delta, trap_freq, omega, loops, ramp_frac, cutoff,
                phase=-PI / 2.0):
    """Engine spec, drive list and duration for the two-ion bichromatic
    drive. Tone phase -pi/2 places the spin quadrature on sigma_x so the
    gate commutes with XX."""
    lay = layout_new(2, (cutoff,))
    etas = np.array([[eta], [eta]])
    spec = ham.EngineSpec(lay, (trap_freq,), etas)
    duration = 2.0 * PI * loops / delta
    env = None
    if ramp_frac > 0:
        tr = ramp_frac * duration

        def env(t, _tr=tr, _T=duration):
            if t < _tr:
                return math.sin(0.5 * PI * t / _tr) ** 2
            if t > _T - _tr:
                return math.sin(0.5 * PI * (_T - t) / _tr) ** 2
            return 1.0

    det = trap_freq + delta
    drives = []
    for i in (0, 1):
        drives.append(ham.Drive(i, omega, +det, phase, env))
        drives.append(ham.Drive(i, omega, -det, phase, env))
    return spec, drives, duration


def ms_unitary(*, eta: float, delta: float, trap_freq: float, omega: float,
               loops: int = 1, ramp_frac: float = 0.0, cutoff: int = 8,
               tol: float = 1e-8, phase: float = -PI / 2.0) -> np.ndarray:
    """Integrate the two-ion bichromatic drive and return the propagator
    on the (ion, ion, mode) space."""
    spec, drives, duration = _ms_context(eta, delta, trap_freq, omega, loops,
                                         ramp_frac, cutoff, phase)
    u, _ = ham.propagate(ham.drives_hamiltonian(spec, drives), duration,
                         tol=tol, min_steps=1024)
    return u


def ms_final_state(psi0, *, eta: float, delta: float, trap_freq: float,
                   omega: float, loops: int = 1, ramp_frac: float = 0.0,
                   cutoff: int = 8, tol: float = 1e-7) -> np.ndarray:
    """State after the bichromatic drive; much cheaper than the full
    propagator, used by the calibration scan."""
    spec, drives, duration = _ms_context(eta, delta, trap_freq, omega, loops,
                                         ramp_frac, cutoff)
    psi, _ = ham.propagate_state_adaptive(
        ham.drives_hamiltonian(spec, drives), duration, psi0, tol=tol,
        min_steps=1024)
    return psi


_MS_CAL_CACHE = {}


def calibrate_ms(*, eta: float = 0.1, delta: float = None,
                 trap_freq: float = 2.0 * PI * 1.0e6, loops: int = 1,
                 ramp_frac: float = 0.0, cutoff: int = 8) -> float:
    """Rabi frequency maximizing the Bell fidelity of the bichromatic
    drive from |SS,0>. Coarse scan around the analytic seed
    omega ~ delta / (2 eta sqrt(loops)) then golden-section refinement."""
    if delta is None:
        delta = trap_freq / 25.0
    key = (round(eta, 12), round(delta, 6), round(trap_freq, 6), loops,
           round(ramp_frac, 6), cutoff)
    if key in _MS_CAL_CACHE:
        return _MS_CAL_CACHE[key]

    lay = layout_new(2, (cutoff,))
    psi0 = basis_state(lay, "SS")
    _, target = ms_target_states(cutoff)

    def infidelity(om):
        psi = ms_final_state(psi0, eta=eta, delta=delta, trap_freq=trap_freq,
                             omega=om, loops=loops, ramp_frac=ramp_frac,
                             cutoff=cutoff, tol=3e-6)
        return 1.0 - abs(np.vdot(target, psi)) ** 2

    seed = delta / (2.0 * eta * math.sqrt(loops))
    best_om, best_f = None, None
    for fac in (0.7, 0.85, 1.0, 1.15, 1.3):
        om = seed * fac
        f = infidelity(om)
        if best_f is None or f < best_f:
            best_om, best_f = om, f
    # golden-section refine around the best grid point
    lo, hi = best_om * 0.88, best_om * 1.12
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = infidelity(c), infidelity(d)
    for _ in range(12):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = infidelity(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = infidelity(d)
    om_star = 0.5 * (lo + hi)
    _MS_CAL_CACHE[key] = om_star
    return om_star


# -------------------------------------------------- geometric phase gate


def three_phase_phase_gate(ions=(0, 1, 2), mode: int = 0, *,
                           delta: float = 2.0 * PI * 20.0e3) -> GeometricForce:
    """Single collective phase pulse on a three-ion chain: the ions sit in
    the standing wave at phases {0, 2pi/3, 4pi/3}, so uniform spin states
    feel zero net force while all six other basis states feel equal
    |force| and close their loops with phase pi. The result is
    diag(+1 on DDD and SSS, -1 elsewhere), exact at t = 2 pi / delta.

    With the COM vector 1/sqrt3 and f(D) - f(S) = 3, the per-state force
    is sqrt3 g; the loop phase 2 pi (sqrt3 g / delta)^2 = pi fixes
    g = delta / sqrt6.
    """
    if len(ions) != 3:
        raise ValueError("the three-phase trick needs exactly three ions")
    return GeometricForce(ions=tuple(ions), mode=mode, delta=delta,
                          duration=2.0 * PI / delta,
                          g=delta / math.sqrt(6.0), f_up=1.0, f_down=-2.0,
                          xi=(0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0))


def geometric_phase_gate(ions=(0, 1), mode: int = 1, *, delta: float,
                         loops: int = 1) -> GeometricForce:
    """Spin-dependent force on the stretch mode giving diag(1, i, i, 1)
    on (DD, DS, SD, SS) after one closed loop.

    With forces f(D) = 1, f(S) = -2 and the stretch vector (1,-1)/sqrt2,
    aligned spin states feel zero net force (their loops vanish) and the
    anti-aligned states acquire exactly pi/2: |g_s| = 3 g / sqrt2 and
    Phi = 2 pi (|g_s|/delta)^2 = pi/2 fixes g = sqrt2 delta / 6."""
    if loops != 1:
        g = SQRT2 * delta / (6.0 * math.sqrt(loops))
        duration = 2.0 * PI * loops / delta
    else:
        g = SQRT2 * delta / 6.0
        duration = 2.0 * PI / delta
    return GeometricForce(ions=tuple(ions), mode=mode, delta=delta,
                          duration=duration, g=g, f_up=1.0, f_down=-2.0,
                          xi=(0.0,) * len(ions))
