"""State-space layout, embedding, partial trace, fidelity, thermal states."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ionsim.hilbert import (
    HilbertLayout,
    apply_embedded,
    basis_state,
    check_density_matrix,
    destroy,
    embed,
    fidelity,
    layout_new,
    number_op,
    partial_trace,
    thermal_fock_mean,
    thermal_fock_probs,
    thermal_mode_state,
    thermal_tail_weight,
    top_level_population,
    truncation_suspect,
)


def test_layout_shape():
    lay = layout_new(2, (2, 3))
    assert lay.n_ions == 2
    assert lay.n_modes == 2
    assert lay.cutoffs == (2, 3)
    assert lay.dims == (2, 2, 2, 3)
    assert lay.dim == 24


def test_layout_rejects_degenerate_mode():
    with pytest.raises(ValueError):
        layout_new(1, (1,))


def test_layout_rejects_empty_register():
    with pytest.raises(ValueError):
        layout_new(0, (2,))


def test_basis_state_flat_index():
    # ions first (ion 0 slowest), then modes: DS with fock (1, 2) lands on
    # ((0*2 + 1)*2 + 1)*3 + 2 = 11.
    lay = layout_new(2, (2, 3))
    psi = basis_state(lay, "DS", fock=(1, 2))
    assert psi.shape == (24,)
    assert np.argmax(np.abs(psi)) == 11
    assert psi[11] == 1.0


def test_basis_state_defaults_to_motional_ground():
    lay = layout_new(2, (3,))
    assert np.array_equal(basis_state(lay, "SS"), basis_state(lay, "SS", fock=(0,)))


def test_basis_state_d_is_index_zero():
    lay = layout_new(1, (2,))
    assert np.argmax(basis_state(lay, "D")) == 0
    assert np.argmax(basis_state(lay, "S")) == 2


def test_basis_state_rejects_bad_label():
    lay = layout_new(1, (2,))
    with pytest.raises(ValueError):
        basis_state(lay, "X")
    with pytest.raises(ValueError):
        basis_state(lay, "DD")


def test_ladder_algebra():
    cut = 7
    a = destroy(cut)
    n = number_op(cut)
    assert np.allclose(a.conj().T @ a, n)
    # truncated commutator is the identity except the top diagonal entry
    comm = a @ a.conj().T - a.conj().T @ a
    expect = np.eye(cut)
    expect[-1, -1] = 1 - cut
    assert np.allclose(comm, expect)


def test_embed_matches_kron():
    lay = layout_new(2, (3,))
    op = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    full = embed(lay, op, (1,))
    expect = np.kron(np.kron(np.eye(2), op), np.eye(3))
    assert np.allclose(full, expect)


def test_embed_two_axes_in_given_order():
    lay = layout_new(2, (2,))
    rng = np.random.default_rng(5)
    op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    # op acts on (mode, ion 0); embedding must respect the axis order given
    full = embed(lay, op, (2, 0))
    psi = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    ten = psi.reshape(lay.dims)
    moved = np.moveaxis(ten, (2, 0), (0, 1))
    acted = (op @ moved.reshape(4, -1)).reshape(moved.shape)
    expect = np.moveaxis(acted, (0, 1), (2, 0)).reshape(-1)
    assert np.allclose(full @ psi, expect)


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 4))
def test_apply_embedded_equals_embedded_matrix(n_ions, axis_pick, seed):
    lay = layout_new(n_ions, (3,))
    axis = axis_pick % (n_ions + 1)
    d = lay.dims[axis]
    rng = np.random.default_rng(seed)
    op = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    psi = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    assert np.allclose(apply_embedded(lay, op, (axis,), psi), embed(lay, op, (axis,)) @ psi)


def test_partial_trace_product_state():
    lay = layout_new(2, (3,))
    psi = basis_state(lay, "DS", fock=(2,))
    rho_ions = partial_trace(lay, psi, keep=(0, 1))
    expect = np.zeros((4, 4))
    expect[1, 1] = 1.0  # DS in the 2-qubit register
    assert np.allclose(rho_ions, expect)
    rho_mode = partial_trace(lay, psi, keep=(2,))
    assert np.allclose(rho_mode, np.diag([0.0, 0.0, 1.0]))


def test_partial_trace_of_entangled_pair_is_mixed():
    lay = layout_new(2, (2,))
    psi = (basis_state(lay, "DD") + basis_state(lay, "SS")) / math.sqrt(2.0)
    rho0 = partial_trace(lay, psi, keep=(0,))
    assert np.allclose(rho0, np.eye(2) / 2.0)


def test_partial_trace_accepts_density_matrix():
    lay = layout_new(1, (3,))
    psi = basis_state(lay, "D", fock=(1,))
    rho = np.outer(psi, psi.conj())
    assert np.allclose(partial_trace(lay, rho, keep=(1,)), partial_trace(lay, psi, keep=(1,)))


def test_fidelity_of_kets_is_overlap_squared():
    a = np.array([1.0, 0.0], dtype=complex)
    b = np.array([math.cos(0.3), math.sin(0.3)], dtype=complex)
    assert fidelity(a, b) == pytest.approx(math.cos(0.3) ** 2, abs=1e-14)


def test_fidelity_mixed_commuting():
    # for commuting states the Uhlmann fidelity is (sum sqrt(p q))^2
    p = np.array([0.7, 0.3])
    q = np.array([0.2, 0.8])
    f = fidelity(np.diag(p).astype(complex), np.diag(q).astype(complex))
    assert f == pytest.approx(float(np.sqrt(p * q).sum() ** 2), abs=1e-12)


def test_fidelity_mixed_vs_pure_is_expectation():
    rho = np.diag([0.6, 0.4]).astype(complex)
    psi = np.array([1.0, 0.0], dtype=complex)
    assert fidelity(rho, psi) == pytest.approx(0.6, abs=1e-12)
    assert fidelity(psi, rho) == pytest.approx(0.6, abs=1e-12)


@given(st.integers(0, 50))
def test_fidelity_self_is_one(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)


def test_thermal_probs_are_renormalized_geometric():
    nbar, cut = 2.0, 4
    r = nbar / (1.0 + nbar)
    raw = np.array([(1 - r) * r**n for n in range(cut)])
    probs = thermal_fock_probs(nbar, cut)
    assert probs.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(probs, raw / (1.0 - r**cut))
    assert thermal_tail_weight(nbar, cut) == pytest.approx(r**cut, abs=1e-14)


def test_thermal_mean_approaches_nbar():
    # with a generous cutoff the truncated mean converges to nbar
    assert thermal_fock_mean(0.5, 60) == pytest.approx(0.5, abs=1e-9)
    assert thermal_fock_mean(2.0, 200) == pytest.approx(2.0, abs=1e-9)


def test_thermal_mode_state_is_valid_density_matrix():
    rho = thermal_mode_state(1.3, 8)
    check_density_matrix(rho)
    assert np.allclose(rho, np.diag(thermal_fock_probs(1.3, 8)))


def test_zero_temperature_thermal_state():
    assert np.allclose(thermal_fock_probs(0.0, 5), [1, 0, 0, 0, 0])


def test_check_density_matrix_rejects_bad_inputs():
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([2.0, -1.0]).astype(complex))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 0.5], [0.1, 0.5]], dtype=complex))


def test_top_level_population_and_truncation_flag():
    lay = layout_new(1, (3,))
    ground = basis_state(lay, "S", fock=(0,))
    top = basis_state(lay, "S", fock=(2,))
    assert top_level_population(lay, ground, 0) == pytest.approx(0.0, abs=1e-15)
    assert top_level_population(lay, top, 0) == pytest.approx(1.0, abs=1e-15)
    assert not truncation_suspect(lay, ground)
    assert truncation_suspect(lay, top)


def test_truncation_flag_threshold():
    lay = layout_new(1, (2,))
    psi = basis_state(lay, "S", fock=(0,)).astype(complex)
    psi_top = basis_state(lay, "S", fock=(1,))
    mixed = math.sqrt(1 - 1e-8) * psi + math.sqrt(1e-8) * psi_top
    assert not truncation_suspect(lay, mixed)
    assert truncation_suspect(lay, mixed, threshold=1e-9)
