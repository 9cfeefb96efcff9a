"""Static ion-chain mechanics and coupling-strength formulas.

Lengths in equilibrium_positions are in units of the Coulomb length
l = (q^2 / (4 pi eps0 M omega_z^2))^(1/3); mode frequencies are in units
of the axial center-of-mass frequency omega_z unless stated otherwise.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize
from scipy.special import eval_genlaguerre

from .constants import E_CHARGE, EPS0, H_PLANCK, HBAR, KB


def coulomb_length(mass: float, omega_z: float, charge: float = E_CHARGE) -> float:
    """Length scale of the equilibrium spacing problem, in meters."""
    return (charge**2 / (4.0 * math.pi * EPS0 * mass * omega_z**2)) ** (1.0 / 3.0)


def equilibrium_positions(n_ions: int) -> np.ndarray:
    """Dimensionless equilibrium positions of a linear chain, ascending.

    Solves u_i = sum_{j<i} (u_i-u_j)^-2 - sum_{j>i} (u_i-u_j)^-2.
    """
    if n_ions == 1:
        return np.zeros(1)

    def force(u):
        f = np.empty_like(u)
        for i in range(n_ions):
            coul = 0.0
            for j in range(n_ions):
                if j == i:
                    continue
                d = u[i] - u[j]
                coul += math.copysign(1.0 / d**2, d)
            f[i] = u[i] - coul
        return f

    def energy(u):
        v = 0.5 * np.sum(u**2)
        for i in range(n_ions):
            for j in range(i + 1, n_ions):
                v += 1.0 / abs(u[i] - u[j])
        return v

    # descend the potential first (robust for any N, stays in the sorted
    # branch), then polish the stationarity condition
    guess = np.linspace(-1.0, 1.0, n_ions) * (0.5 * n_ions**0.56 + 0.3)
    res = optimize.minimize(energy, guess, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12,
                                     "maxiter": 20000})
    sol = optimize.root(force, np.sort(res.x), method="lm", tol=1e-15)
    if not sol.success and np.max(np.abs(force(sol.x))) > 1e-9:
        raise RuntimeError(f"equilibrium solve failed for N={n_ions}: {sol.message}")
    return np.sort(sol.x)


def axial_modes(n_ions: int) -> tuple[np.ndarray, np.ndarray]:
    """Axial normal modes of the chain.

    Returns (freqs, vecs): freqs[m] in units of omega_z ascending, and
    vecs[:, m] the orthonormal mode vector (entry i = ion i amplitude).
    The lowest mode is the center of mass at exactly 1. Sign fixed so
    each vector's first nonzero entry is positive.
    """
    u = equilibrium_positions(n_ions)
    a = np.zeros((n_ions, n_ions))
    for i in range(n_ions):
        s = 0.0
        for j in range(n_ions):
            if j == i:
                continue
            w = 1.0 / abs(u[i] - u[j]) ** 3
            a[i, j] = -2.0 * w
            s += 2.0 * w
        a[i, i] = 1.0 + s
    evals, vecs = np.linalg.eigh(a)
    freqs = np.sqrt(evals)
    for m in range(n_ions):
        col = vecs[:, m]
        nz = np.flatnonzero(np.abs(col) > 1e-9)
        if col[nz[0]] < 0:
            vecs[:, m] = -col
    return freqs, vecs


def lamb_dicke(wavelength: float, mass: float, mode_omega: float,
               angle: float = 0.0) -> float:
    """Single-ion Lamb-Dicke parameter eta = k cos(angle) x0 with
    x0 = sqrt(hbar / (2 M omega)). `mode_omega` is angular."""
    k = 2.0 * math.pi / wavelength
    return k * math.cos(angle) * math.sqrt(HBAR / (2.0 * mass * mode_omega))


def lamb_dicke_matrix(n_ions: int, wavelength: float, mass: float,
                      omega_z: float, angle: float = 0.0) -> np.ndarray:
    """eta[i, m]: coupling of ion i to axial mode m, including the mode
    vector. Row ion, column mode."""
    freqs, vecs = axial_modes(n_ions)
    eta_m = np.array([lamb_dicke(wavelength, mass, omega_z * f, angle) for f in freqs])
    return vecs * eta_m[None, :]


def rabi_carrier(omega: float, etas, ns) -> float:
    """Carrier Rabi frequency with the motion in Fock states ns over modes
    with Lamb-Dicke factors etas: Omega * prod_m (1 - n_m eta_m^2).

    First order in eta^2 per mode; the Debye-Waller product form.
    """
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    if etas.shape != ns.shape:
        raise ValueError("one Fock occupation per eta required")
    return float(omega * np.prod(1.0 - ns * etas**2))


def rabi_sideband(omega: float, eta: float, n: int, order: int = +1) -> float:
    """First-order-sideband Rabi frequency out of Fock state n.

    order=+1 (blue, n -> n+1): eta Omega sqrt(n+1)
    order=-1 (red,  n -> n-1): eta Omega sqrt(n)
    order= 0 returns the bare carrier Omega.
    """
    if order == 0:
        return float(omega)
    if order == +1:
        return float(omega * eta * math.sqrt(n + 1))
    if order == -1:
        return float(omega * eta * math.sqrt(n))
    raise ValueError("order must be -1, 0, or +1")


def coupling_exact(omega: float, eta: float, n: int, m: int) -> float:
    """|<m| exp(i eta (a + a^dag)) |n>| Omega, the matrix element beyond the
    Lamb-Dicke expansion (generalized Laguerre form). Used for spectroscopy
    sanity checks, not by the gate layer."""
    lo, hi = (n, m) if n <= m else (m, n)
    d = hi - lo
    lag = eval_genlaguerre(lo, d, eta * eta)
    amp = math.exp(-0.5 * eta * eta) * eta**d
    amp *= math.sqrt(math.factorial(lo) / math.factorial(hi)) * abs(lag)
    return float(omega * amp)


def rabi_blue_all_modes(omega: float, etas, ns, bus: int = 0) -> float:
    """Blue-sideband Rabi frequency on the bus mode with spectator modes in
    Fock states ns: Omega sqrt(n_bus + 1) eta_bus prod_{m != bus} (1 - n_m eta_m^2).
    """
    etas = np.asarray(etas, dtype=float)
    ns = np.asarray(ns, dtype=float)
    if etas.shape != ns.shape:
        raise ValueError("one Fock occupation per eta required")
    spect = np.prod([1.0 - ns[m] * etas[m] ** 2 for m in range(len(etas)) if m != bus])
    return float(omega * etas[bus] * math.sqrt(ns[bus] + 1.0) * spect)


def ac_stark_shift(omega: float, delta: float) -> float:
    """Light shift Omega^2 / (4 delta) of a two-level transition driven
    off resonance by delta (angular)."""
    if delta == 0:
        raise ValueError("resonant drive has no dispersive shift")
    return float(omega**2 / (4.0 * delta))


def off_resonant_amplitude(omega: float, delta: float) -> float:
    """Peak excitation probability Omega^2 / (Omega^2 + delta^2) of an
    off-resonant square pulse."""
    return float(omega**2 / (omega**2 + delta**2))


def johnson_heating_rate(temperature: float, re_z: float, distance: float,
                         mass: float, mode_omega: float,
                         charge: float = E_CHARGE) -> float:
    """Quanta per second from Johnson noise of a resistance Re Z seen at an
    electrode a distance D from the ion:

        rate = (kB T / h) * q^2 Re Z / (M nu D^2) = kB T / (h Q),
        Q = M nu D^2 / (q^2 Re Z),   nu = mode_omega / 2 pi.

    Literal evaluation for a 40 amu ion at nu = 1 MHz, D = 100 um,
    Re Z = 1 Ohm, T = 300 K gives ~240 quanta/s (about 4 ms per quantum).
    Often-quoted trap lifetimes for such numbers are minutes per quantum;
    real electrode geometries attenuate the noise so D must be read as an
    effective distance absorbing those factors. The formula is implemented
    literally.
    """
    q_factor = heating_q_factor(mass, mode_omega, distance, re_z, charge)
    return float(KB * temperature / (H_PLANCK * q_factor))


def heating_q_factor(mass: float, mode_omega: float, distance: float,
                     re_z: float, charge: float = E_CHARGE) -> float:
    """Q = M nu D^2 / (q^2 Re Z) with nu = mode_omega / 2 pi; the heating
    rate is kB T / (h Q)."""
    nu = mode_omega / (2.0 * math.pi)
    return float(mass * nu * distance**2 / (charge**2 * re_z))


def thermal_nbar(temperature: float, mode_omega: float) -> float:
    """Bose occupation of a mode at temperature T."""
    x = HBAR * mode_omega / (KB * temperature)
    return float(1.0 / math.expm1(x))
