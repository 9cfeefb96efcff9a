"""Ion chain statics, mode spectra, coupling strengths, heating estimates."""

import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, eval_laguerre

from ionsim.constants import AMU, H_PLANCK, HBAR, KB, ion_mass
from ionsim.hilbert import destroy
from ionsim.ionphys import (
    ac_stark_shift,
    axial_modes,
    coulomb_length,
    coupling_exact,
    equilibrium_positions,
    heating_q_factor,
    johnson_heating_rate,
    lamb_dicke,
    lamb_dicke_matrix,
    off_resonant_amplitude,
    rabi_blue_all_modes,
    rabi_carrier,
    rabi_sideband,
    thermal_nbar,
)

# Frozen reference numbers for the resistive-heating estimate with the
# textbook constants (Ca40, 1 MHz axial mode, 100 um, 1 Ohm, 300 K).
HEATING_RATE_REF = 241.80571487509403
Q_FACTOR_REF = 25851273780.800636


def _force_residual(u):
    """Static force on each ion in the dimensionless chain potential."""
    res = []
    for m in range(len(u)):
        f = u[m]
        f -= sum(1.0 / (u[m] - u[n]) ** 2 for n in range(m))
        f += sum(1.0 / (u[m] - u[n]) ** 2 for n in range(m + 1, len(u)))
        res.append(f)
    return np.array(res)


def _chain_hessian(u):
    n = len(u)
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                a[i, j] = 1.0 + 2.0 * sum(
                    1.0 / abs(u[i] - u[p]) ** 3 for p in range(n) if p != i
                )
            else:
                a[i, j] = -2.0 / abs(u[i] - u[j]) ** 3
    return a


def test_two_ion_positions_closed_form():
    u = equilibrium_positions(2)
    d = (1.0 / 4.0) ** (1.0 / 3.0)
    assert np.allclose(u, [-d, d], atol=1e-12)


def test_three_ion_positions_closed_form():
    u = equilibrium_positions(3)
    d = (5.0 / 4.0) ** (1.0 / 3.0)
    assert np.allclose(u, [-d, 0.0, d], atol=1e-12)


@pytest.mark.parametrize("n", range(1, 9))
def test_positions_balance_forces(n):
    u = equilibrium_positions(n)
    assert np.all(np.diff(u) > 0)
    assert np.allclose(u, -u[::-1], atol=1e-12)
    assert np.abs(_force_residual(u)).max() < 1e-10


def test_two_ion_mode_ratios():
    f, b = axial_modes(2)
    assert np.allclose(f, [1.0, math.sqrt(3.0)], atol=1e-12)
    assert np.allclose(np.abs(b[:, 0]), 1.0 / math.sqrt(2.0), atol=1e-12)


def test_three_ion_modes_closed_form():
    f, b = axial_modes(3)
    assert np.allclose(f, [1.0, math.sqrt(3.0), math.sqrt(29.0 / 5.0)], atol=1e-9)
    assert np.allclose(b[:, 0], np.ones(3) / math.sqrt(3.0), atol=1e-9)
    assert np.allclose(b[:, 1], np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0), atol=1e-9)
    assert np.allclose(b[:, 2], np.array([1.0, -2.0, 1.0]) / math.sqrt(6.0), atol=1e-9)


@pytest.mark.parametrize("n", range(2, 7))
def test_modes_solve_the_chain_eigenproblem(n):
    f, b = axial_modes(n)
    a = _chain_hessian(equilibrium_positions(n))
    assert np.allclose(b.T @ b, np.eye(n), atol=1e-10)
    for m in range(n):
        assert np.abs(a @ b[:, m] - f[m] ** 2 * b[:, m]).max() < 1e-9
    assert f[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(f) > 0)


def test_lamb_dicke_definition():
    lam, mass, omega = 729e-9, 40.0 * AMU, 2.0 * math.pi * 1.2e6
    k = 2.0 * math.pi / lam
    expect = k * math.sqrt(HBAR / (2.0 * mass * omega))
    assert lamb_dicke(lam, mass, omega) == pytest.approx(expect, rel=1e-14)
    assert lamb_dicke(lam, mass, omega, angle=math.pi / 3) == pytest.approx(
        0.5 * expect, rel=1e-14
    )
    assert lamb_dicke(lam, mass, omega, angle=math.pi / 2) == pytest.approx(0.0, abs=1e-16)


def test_lamb_dicke_matrix_factorizes():
    lam, mass, wz = 729e-9, ion_mass("Ca40"), 2.0 * math.pi * 1e6
    for n in (2, 3):
        em = lamb_dicke_matrix(n, lam, mass, wz)
        f, b = axial_modes(n)
        manual = np.array(
            [[b[i, m] * lamb_dicke(lam, mass, f[m] * wz) for m in range(n)] for i in range(n)]
        )
        assert np.allclose(em, manual, atol=1e-18)


def _exact_element(eta, n, m, cut=48):
    a = destroy(cut)
    u = expm(1j * eta * (a + a.conj().T))
    return u[m, n]


@pytest.mark.parametrize("eta", [0.05, 0.15, 0.3])
@pytest.mark.parametrize("n,m", [(0, 0), (1, 1), (3, 3), (0, 1), (2, 3), (3, 2), (1, 3)])
def test_coupling_exact_matches_displacement_matrix_element(eta, n, m):
    # oracle: literal matrix element of exp(i eta (a + a^dag)) on a big cutoff
    expect = abs(_exact_element(eta, n, m))
    assert coupling_exact(1.0, eta, n, m) == pytest.approx(expect, abs=1e-10)


def test_carrier_coupling_closed_form():
    # <n| exp(i eta x) |n> = exp(-eta^2/2) L_n(eta^2)
    eta, n = 0.2, 3
    expect = math.exp(-(eta**2) / 2.0) * eval_laguerre(n, eta**2)
    assert coupling_exact(1.0, eta, n, n) == pytest.approx(abs(expect), rel=1e-12)


def test_sideband_coupling_closed_form():
    # |<n+1| exp(i eta x) |n>| = eta exp(-eta^2/2) L_n^1(eta^2) / sqrt(n+1)
    eta, n = 0.2, 2
    expect = (
        eta
        * math.exp(-(eta**2) / 2.0)
        * eval_genlaguerre(n, 1, eta**2)
        / math.sqrt(n + 1.0)
    )
    assert coupling_exact(1.0, eta, n, n + 1) == pytest.approx(abs(expect), rel=1e-12)


def test_rabi_carrier_formula():
    # leading Debye-Waller product: Omega prod (1 - n eta^2)
    omega, etas, ns = 1e5, (0.1, 0.2), (1, 3)
    expect = omega * (1 - 1 * 0.1**2) * (1 - 3 * 0.2**2)
    assert rabi_carrier(omega, etas, ns) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        rabi_carrier(omega, (0.1,), (1, 2))


def test_rabi_carrier_tracks_exact_matrix_element_at_small_eta():
    # the truncated product stays within half a percent of the literal
    # <n|exp(i eta x)|n> product deep in the Lamb-Dicke regime
    omega, etas, ns = 1e5, (0.05, 0.08), (1, 2)
    exact = omega
    for eta, n in zip(etas, ns):
        exact *= abs(_exact_element(eta, n, n))
    assert rabi_carrier(omega, etas, ns) == pytest.approx(exact, rel=5e-3)


def test_rabi_sideband_lamb_dicke_values():
    omega, eta = 2.0 * math.pi * 50e3, 0.07
    for n in range(4):
        assert rabi_sideband(omega, eta, n, order=+1) == pytest.approx(
            eta * omega * math.sqrt(n + 1.0), rel=1e-14
        )
        assert rabi_sideband(omega, eta, n, order=-1) == pytest.approx(
            eta * omega * math.sqrt(float(n)), rel=1e-14
        )
    assert rabi_sideband(omega, eta, 2, order=0) == omega
    with pytest.raises(ValueError):
        rabi_sideband(omega, eta, 1, order=2)


def test_rabi_blue_all_modes_spectator_factors():
    omega = 1e5
    etas, ns = (0.05, 0.1, 0.08), (1, 2, 3)
    expect = omega * 0.05 * math.sqrt(2.0) * (1 - 2 * 0.1**2) * (1 - 3 * 0.08**2)
    assert rabi_blue_all_modes(omega, etas, ns, bus=0) == pytest.approx(expect, rel=1e-12)
    # no spectators, ground bus: plain first-sideband rate
    assert rabi_blue_all_modes(omega, (0.05,), (0,)) == pytest.approx(0.05 * omega, rel=1e-14)
    with pytest.raises(ValueError):
        rabi_blue_all_modes(omega, (0.05, 0.1), (0,))


def test_ac_stark_shift_value_and_sign():
    assert ac_stark_shift(2e4, 1e6) == pytest.approx((2e4) ** 2 / (4.0 * 1e6), rel=1e-14)
    assert ac_stark_shift(2e4, -1e6) < 0
    with pytest.raises(ValueError):
        ac_stark_shift(2e4, 0.0)


def test_off_resonant_amplitude():
    assert off_resonant_amplitude(1e4, 0.0) == 1.0
    assert off_resonant_amplitude(1e4, 1e4) == pytest.approx(0.5, rel=1e-14)
    assert off_resonant_amplitude(1e4, 1e6) == pytest.approx(1e-4, rel=1e-4)


def test_thermal_nbar_bose_einstein():
    t, omega = 0.001, 2.0 * math.pi * 1e6
    x = HBAR * omega / (KB * t)
    assert thermal_nbar(t, omega) == pytest.approx(1.0 / math.expm1(x), rel=1e-12)


def test_coulomb_length_scaling():
    m, w = 40.0 * AMU, 2.0 * math.pi * 1e6
    l0 = coulomb_length(m, w)
    assert coulomb_length(m, 2.0 * w) == pytest.approx(l0 * 4.0 ** (-1.0 / 3.0), rel=1e-12)
    # few-micron scale for typical traps
    assert 1e-6 < l0 < 10e-6


def test_johnson_heating_reference_numbers():
    mass = ion_mass("Ca40")
    omega = 2.0 * math.pi * 1e6
    rate = johnson_heating_rate(300.0, 1.0, 100e-6, mass, omega)
    q = heating_q_factor(mass, omega, 100e-6, 1.0)
    assert rate == pytest.approx(HEATING_RATE_REF, rel=1e-12)
    assert q == pytest.approx(Q_FACTOR_REF, rel=1e-12)


def test_johnson_heating_identity():
    # rate and quality factor are two spellings of the same expression
    mass = ion_mass("Ca40")
    omega = 2.0 * math.pi * 1e6
    rate = johnson_heating_rate(300.0, 1.0, 100e-6, mass, omega)
    q = heating_q_factor(mass, omega, 100e-6, 1.0)
    assert abs(rate * H_PLANCK * q / (KB * 300.0) - 1.0) < 1e-12


def test_johnson_heating_scalings():
    mass = ion_mass("Ca40")
    omega = 2.0 * math.pi * 1e6
    base = johnson_heating_rate(300.0, 1.0, 100e-6, mass, omega)
    assert johnson_heating_rate(600.0, 1.0, 100e-6, mass, omega) == pytest.approx(2 * base)
    assert johnson_heating_rate(300.0, 2.0, 100e-6, mass, omega) == pytest.approx(2 * base)
    assert johnson_heating_rate(300.0, 1.0, 200e-6, mass, omega) == pytest.approx(base / 4)
    assert johnson_heating_rate(300.0, 1.0, 100e-6, 2 * mass, omega) == pytest.approx(base / 2)
    assert johnson_heating_rate(300.0, 1.0, 100e-6, mass, 2 * omega) == pytest.approx(base / 2)


def test_ion_mass_table():
    assert ion_mass("Ca40") == pytest.approx(39.962590850 * AMU, rel=1e-6)
    with pytest.raises(ValueError):
        ion_mass("Xe999")
