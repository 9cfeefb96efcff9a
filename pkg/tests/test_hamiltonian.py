"""Pulse unitaries, time-dependent propagation, forced-oscillator closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ionsim.hilbert import basis_state, destroy, layout_new
from ionsim.hamiltonian import (
    Drive,
    EngineSpec,
    blue_unitary,
    displacement,
    drives_hamiltonian,
    forced_alpha_phase,
    forced_oscillator_propagator,
    hamiltonian_at,
    modephase_unitary,
    propagate,
    propagate_fixed,
    propagate_state,
    rc_unitary,
    red_unitary,
    spin_dependent_force_gate,
    starkz_unitary,
)

ANGLES = st.floats(-7.0, 7.0, allow_nan=False)


@given(ANGLES, ANGLES)
def test_rc_unitary_closed_form(theta, phi):
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    expect = np.array(
        [[c, 1j * np.exp(1j * phi) * s], [1j * np.exp(-1j * phi) * s, c]]
    )
    assert np.allclose(rc_unitary(theta, phi), expect, atol=1e-12)


@given(ANGLES, ANGLES, ANGLES)
def test_rc_unitary_composes_along_one_axis(t1, t2, phi):
    u = rc_unitary(t1, phi) @ rc_unitary(t2, phi)
    assert np.allclose(u, rc_unitary(t1 + t2, phi), atol=1e-10)


def test_starkz_unitary():
    phi = 0.8
    assert np.allclose(
        starkz_unitary(phi), np.diag([np.exp(1j * phi / 2), np.exp(-1j * phi / 2)])
    )


def test_modephase_unitary():
    phi, cut = 0.37, 5
    assert np.allclose(modephase_unitary(phi, cut), np.diag(np.exp(1j * phi * np.arange(cut))))


def test_blue_unitary_rotates_each_manifold():
    # |S,n> pairs with |D,n+1> at angle sqrt(n+1) theta; |D,0> is dark
    theta, phi, cut = 0.9, 0.4, 5
    u = blue_unitary(theta, phi, cut)
    lay = layout_new(1, (cut,))
    d0 = basis_state(lay, "D", fock=(0,))
    assert np.allclose(u @ d0, d0, atol=1e-12)
    for n in range(cut - 1):
        sn = basis_state(lay, "S", fock=(n,))
        dn1 = basis_state(lay, "D", fock=(n + 1,))
        out = u @ sn
        ang = math.sqrt(n + 1.0) * theta / 2.0
        assert np.vdot(sn, out) == pytest.approx(math.cos(ang), abs=1e-12)
        assert np.vdot(dn1, out) == pytest.approx(
            1j * np.exp(1j * phi) * math.sin(ang), abs=1e-12
        )


def test_red_unitary_mirrors_blue():
    theta, phi, cut = 1.1, -0.3, 5
    u = red_unitary(theta, phi, cut)
    lay = layout_new(1, (cut,))
    s0 = basis_state(lay, "S", fock=(0,))
    assert np.allclose(u @ s0, s0, atol=1e-12)
    s1 = basis_state(lay, "S", fock=(1,))
    d0 = basis_state(lay, "D", fock=(0,))
    assert abs(np.vdot(d0, u @ s1)) == pytest.approx(abs(math.sin(theta / 2.0)), abs=1e-12)


def test_second_order_blue_adds_two_quanta():
    theta, cut = math.pi / 2, 5
    u = blue_unitary(theta, 0.0, cut, order=2)
    lay = layout_new(1, (cut,))
    s0 = basis_state(lay, "S", fock=(0,))
    d2 = basis_state(lay, "D", fock=(2,))
    out = u @ s0
    assert np.vdot(d2, out) == pytest.approx(1j * math.sin(theta / 2.0), abs=1e-12)
    assert np.allclose(u @ basis_state(lay, "D", fock=(1,)), basis_state(lay, "D", fock=(1,)))


@given(ANGLES, ANGLES, st.integers(1, 3))
def test_sideband_unitaries_are_unitary(theta, phi, order):
    cut = 6
    for u in (blue_unitary(theta, phi, cut, order=order), red_unitary(theta, phi, cut, order=order)):
        assert np.allclose(u @ u.conj().T, np.eye(2 * cut), atol=1e-10)


def test_displacement_coherent_amplitudes():
    alpha, cut = 0.7 - 0.2j, 30
    psi = displacement(alpha, cut)[:, 0]
    expect = np.array(
        [
            np.exp(-abs(alpha) ** 2 / 2.0) * alpha**k / math.sqrt(math.factorial(k))
            for k in range(cut)
        ]
    )
    assert np.abs(psi - expect).max() < 1e-12


def test_displacement_inverse():
    alpha, cut = 0.4 + 0.9j, 25
    u = displacement(alpha, cut) @ displacement(-alpha, cut)
    assert np.abs(u[:12, :12] - np.eye(12)).max() < 1e-10


def test_forced_alpha_phase_closed_forms():
    g, delta = 2.5e4, 2.0 * math.pi * 20e3
    for t in (0.0, 1.7e-5, 6.1e-5, 2.0 * math.pi / delta):
        alpha, phase = forced_alpha_phase(g, delta, t)
        assert abs(alpha) == pytest.approx(
            2.0 * (g / delta) * abs(math.sin(delta * t / 2.0)), abs=1e-12
        )
        assert phase == pytest.approx(
            (g / delta) ** 2 * (delta * t - math.sin(delta * t)), abs=1e-12
        )
    # loop closure after one full detuning period, phase area 2 pi (g/delta)^2
    alpha, phase = forced_alpha_phase(g, delta, 2.0 * math.pi / delta)
    assert abs(alpha) < 1e-12
    assert phase == pytest.approx(2.0 * math.pi * (g / delta) ** 2, rel=1e-12)


def test_forced_oscillator_propagator_matches_integration():
    # independent oracle: step the driven-mode Hamiltonian directly
    g, delta, cut = 2.5e4, 2.0 * math.pi * 20e3, 30
    a = destroy(cut)

    def h(t):
        return g * (np.exp(1j * delta * t) * a.conj().T + np.exp(-1j * delta * t) * a)

    t_end = 6.1e-5
    u_num = propagate_fixed(h, t_end, 6000)
    u_ref = forced_oscillator_propagator(g, delta, t_end, cut)
    assert np.abs(u_num[:16, :16] - u_ref[:16, :16]).max() < 1e-8


def test_propagate_constant_hamiltonian_is_expm():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = (m + m.conj().T) / 2.0

    u, info = propagate(lambda t: h, 0.37)
    assert info["converged"]
    assert np.abs(u - expm(-1j * 0.37 * h)).max() < 1e-9


def test_propagate_fixed_converges_with_steps():
    # linear chirp; midpoint stepping should converge as the grid refines
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h0 = (m + m.conj().T) / 2.0
    m2 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h1 = (m2 + m2.conj().T) / 2.0

    def h(t):
        return h0 + t * h1

    coarse = propagate_fixed(h, 1.0, 200)
    fine = propagate_fixed(h, 1.0, 3200)
    finer = propagate_fixed(h, 1.0, 6400)
    assert np.abs(fine - finer).max() < np.abs(coarse - finer).max()
    assert np.abs(fine - finer).max() < 1e-7


def test_propagate_state_trajectory():
    h = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    psi, traj = propagate_state(lambda t: h, 1.0, psi0, 100, keep_every=10)
    assert len(traj) == 11
    t_last, s_last = traj[-1]
    assert t_last == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(s_last, psi)
    assert np.allclose(psi, expm(-1j * h) @ psi0, atol=1e-8)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)


def test_engine_closure_matches_hamiltonian_at():
    lay = layout_new(2, (4,))
    spec = EngineSpec(lay, (2.0 * math.pi * 1e6,), np.array([[0.06], [0.06]]))
    drives = [
        Drive(0, 5e4, detuning=2.0 * math.pi * 1e6, phase=0.3),
        Drive(1, 3e4, detuning=0.0, phase=-0.2),
    ]
    h = drives_hamiltonian(spec, drives)
    for t in (0.0, 1.3e-7, 7.7e-7):
        ht = h(t)
        assert np.allclose(ht, hamiltonian_at(spec, drives, t), atol=1e-12)
        assert np.abs(ht - ht.conj().T).max() < 1e-12


def test_engine_drives_are_additive():
    lay = layout_new(2, (3,))
    spec = EngineSpec(lay, (2.0 * math.pi * 1e6,), np.array([[0.05], [0.05]]))
    d0 = Drive(0, 5e4, detuning=1e5, phase=0.1)
    d1 = Drive(1, 2e4, detuning=-3e4, phase=1.0)
    t = 3.1e-7
    both = hamiltonian_at(spec, [d0, d1], t)
    assert np.allclose(
        both, hamiltonian_at(spec, [d0], t) + hamiltonian_at(spec, [d1], t), atol=1e-12
    )


def test_engine_envelope_scales_coupling():
    lay = layout_new(1, (3,))
    spec = EngineSpec(lay, (2.0 * math.pi * 1e6,), np.array([[0.05]]))
    bare = hamiltonian_at(spec, [Drive(0, 4e4)], 0.0)
    halved = hamiltonian_at(spec, [Drive(0, 4e4, envelope=lambda t: 0.5)], 0.0)
    assert np.allclose(halved, 0.5 * bare, atol=1e-12)


def test_engine_carrier_resonant_flop():
    # detuning 0: population exchanges at Omega regardless of mode physics
    lay = layout_new(1, (3,))
    spec = EngineSpec(lay, (2.0 * math.pi * 1e6,), np.array([[0.0]]))
    om = 2.0 * math.pi * 10e3
    h = drives_hamiltonian(spec, [Drive(0, om)])
    psi0 = basis_state(lay, "S")
    # keep_every=0 returns the final state alone, no trajectory
    psi = propagate_state(h, math.pi / om, psi0, 400)
    p_up = float(np.linalg.norm(psi[:3]) ** 2)
    assert p_up == pytest.approx(1.0, abs=1e-6)


def test_spin_dependent_force_blocks():
    # spin-diagonal force: each configuration picks up exp(i Phi) D(alpha)
    lay = layout_new(1, (12,))
    delta = 2.0 * math.pi * 30e3
    g0 = 4e3

    def g_of(cfg):
        return g0 if cfg[0] == 0 else 0.0

    t = 2.0 * math.pi / delta
    u = spin_dependent_force_gate(lay, 0, g_of, delta, t)
    _, phase = forced_alpha_phase(g0, delta, t)
    d_block = u[:12, :12]
    s_block = u[12:, 12:]
    assert np.abs(u[:12, 12:]).max() < 1e-14
    assert np.allclose(s_block, np.eye(12), atol=1e-12)
    assert np.allclose(d_block, np.exp(1j * phase) * np.eye(12), atol=1e-9)
