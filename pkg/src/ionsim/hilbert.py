"""State space plumbing for chains of two-level ions plus motional modes.

Conventions frozen here and relied on everywhere else:

* Qubit basis index 0 is |D> (the metastable upper level, logical |0>),
  index 1 is |S> (the ground level, logical |1>).
* sigma_plus == |D><S| raises S to D.
* Tensor factor order is ion 0, ion 1, ..., then mode 0, mode 1, ...;
  ion 0 is the slowest-varying index in the flat vector.
* Mode Fock spaces are truncated at a per-mode cutoff (dimension, not
  max quantum number).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Qubit basis: index 0 = |D>, index 1 = |S>.
KET_D = np.array([1.0, 0.0], dtype=complex)
KET_S = np.array([0.0, 1.0], dtype=complex)

SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |D><S|
SIGMA_MINUS = SIGMA_PLUS.T.conj()
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
# z eigenvalue +1 on |D>
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENT2 = np.eye(2, dtype=complex)

QUBIT_LABELS = {"D": 0, "S": 1, "d": 0, "s": 1}


def destroy(cutoff: int) -> np.ndarray:
    """Truncated annihilation operator on a Fock space of dimension `cutoff`."""
    a = np.zeros((cutoff, cutoff), dtype=complex)
    for n in range(1, cutoff):
        a[n - 1, n] = math.sqrt(n)
    return a


def number_op(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


@dataclass(frozen=True)
class HilbertLayout:
    """Fixed factor layout: n_ions two-level systems then len(cutoffs) modes."""

    n_ions: int
    cutoffs: tuple[int, ...]
    dims: tuple[int, ...] = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        if self.n_ions < 1:
            raise ValueError("need at least one ion")
        cut = tuple(int(c) for c in self.cutoffs)
        if any(c < 2 for c in cut):
            raise ValueError("mode cutoffs must be >= 2 (a single Fock "
                             "level cannot register motion)")
        object.__setattr__(self, "cutoffs", cut)
        object.__setattr__(self, "dims", (2,) * self.n_ions + cut)
        object.__setattr__(self, "dim", int(np.prod(self.dims)))

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    def ion_axis(self, i: int) -> int:
        if not 0 <= i < self.n_ions:
            raise ValueError(f"ion index {i} out of range for {self.n_ions} ions")
        return i

    def mode_axis(self, m: int) -> int:
        if not 0 <= m < self.n_modes:
            raise ValueError(f"mode index {m} out of range for {self.n_modes} modes")
        return self.n_ions + m


def layout_new(n_ions: int, mode_cutoffs) -> HilbertLayout:
    return HilbertLayout(n_ions, tuple(mode_cutoffs))


def basis_state(layout: HilbertLayout, ion_labels: str, fock=None) -> np.ndarray:
    """Product basis ket.

    `ion_labels` is a string like "SDS" read left to right as ion 0, 1, 2.
    `fock` lists one occupation per mode (default all zero).
    """
    if len(ion_labels) != layout.n_ions:
        raise ValueError(f"expected {layout.n_ions} ion labels, got {ion_labels!r}")
    if fock is None:
        fock = (0,) * layout.n_modes
    fock = tuple(int(n) for n in fock)
    if len(fock) != layout.n_modes:
        raise ValueError("one Fock occupation per mode required")
    idx = []
    for ch in ion_labels:
        try:
            idx.append(QUBIT_LABELS[ch])
        except KeyError:
            raise ValueError(f"bad ion label {ch!r}; use D or S")
    for m, n in enumerate(fock):
        if not 0 <= n < layout.cutoffs[m]:
            raise ValueError(f"Fock state {n} outside cutoff {layout.cutoffs[m]}")
        idx.append(n)
    flat = int(np.ravel_multi_index(tuple(idx), layout.dims))
    psi = np.zeros(layout.dim, dtype=complex)
    psi[flat] = 1.0
    return psi


def embed(layout: HilbertLayout, op: np.ndarray, axes) -> np.ndarray:
    """Lift `op`, defined on the listed factor axes (in that order), to the
    full space. Axes index the layout factors: ions are 0..n_ions-1, mode m
    is layout.mode_axis(m)."""
    axes = list(axes)
    dims = layout.dims
    nax = len(dims)
    if len(set(axes)) != len(axes):
        raise ValueError("repeated axis")
    for ax in axes:
        if not 0 <= ax < nax:
            raise ValueError(f"axis {ax} out of range")
    d_t = int(np.prod([dims[a] for a in axes]))
    if op.shape != (d_t, d_t):
        raise ValueError(f"operator shape {op.shape} does not match axes {axes}")
    rest = [a for a in range(nax) if a not in axes]
    d_r = int(np.prod([dims[a] for a in rest], dtype=int)) if rest else 1
    full = np.kron(op, np.eye(d_r, dtype=complex))
    order = axes + rest
    shaped = full.reshape([dims[a] for a in order] * 2)
    inv = np.argsort(order)
    perm = list(inv) + [nax + p for p in inv]
    return shaped.transpose(perm).reshape(layout.dim, layout.dim)


def apply_embedded(layout: HilbertLayout, op: np.ndarray, axes, psi: np.ndarray) -> np.ndarray:
    """Apply an operator living on a factor subset to a full-space ket
    without forming the full matrix."""
    axes = list(axes)
    dims = layout.dims
    nax = len(dims)
    d_t = int(np.prod([dims[a] for a in axes]))
    if op.shape != (d_t, d_t):
        raise ValueError(f"operator shape {op.shape} does not match axes {axes}")
    tens = psi.reshape(dims)
    rest = [a for a in range(nax) if a not in axes]
    moved = tens.transpose(axes + rest).reshape(d_t, -1)
    out = op @ moved
    out = out.reshape([dims[a] for a in axes + rest])
    inv = np.argsort(axes + rest)
    return out.transpose(inv).reshape(layout.dim)


def partial_trace(layout: HilbertLayout, state: np.ndarray, keep) -> np.ndarray:
    """Reduced density matrix over the kept axes, in the order given.

    `state` may be a ket or a density matrix on the full space.
    """
    keep = list(keep)
    dims = layout.dims
    nax = len(dims)
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    traced = [a for a in range(nax) if a not in keep]
    # contract traced row/col axis pairs one at a time, highest first so
    # earlier positions stay valid
    rho2 = rho.reshape(dims * 2)
    row_axes = list(range(nax))
    for a in sorted(traced, reverse=True):
        n_row = len(row_axes)
        pos = row_axes.index(a)
        rho2 = np.trace(rho2, axis1=pos, axis2=pos + n_row)
        row_axes.pop(pos)
    d_keep = [dims[a] for a in row_axes]
    # row_axes is the layout order of survivors; permute to requested order
    perm = [row_axes.index(a) for a in keep]
    n_row = len(row_axes)
    rho2 = rho2.reshape(d_keep * 2).transpose(perm + [n_row + p for p in perm])
    d = int(np.prod([dims[a] for a in keep]))
    return rho2.reshape(d, d)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """State fidelity. Kets and/or density matrices accepted; the
    ket-ket case is |<a|b>|^2, mixed-mixed is Uhlmann."""
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        return float(np.real(np.vdot(a, b @ a)))
    if b.ndim == 1:
        return float(np.real(np.vdot(b, a @ b)))
    # Uhlmann: (tr sqrt(sqrt(a) b sqrt(a)))^2 via eigendecomposition
    wa, va = np.linalg.eigh(a)
    wa = np.clip(wa, 0.0, None)
    sq = (va * np.sqrt(wa)) @ va.conj().T
    m = sq @ b @ sq
    w = np.linalg.eigvalsh(m)
    w = np.clip(w, 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


def thermal_mode_state(nbar: float, cutoff: int) -> np.ndarray:
    """Thermal density matrix truncated at `cutoff` levels and renormalized.

    The discarded tail has weight (nbar/(1+nbar))**cutoff; keep cutoff
    large enough that this is negligible for the nbar in play.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
    else:
        r = nbar / (1.0 + nbar)
        p = (1.0 - r) * r ** np.arange(cutoff)
        p /= p.sum()
    return np.diag(p).astype(complex)


def thermal_tail_weight(nbar: float, cutoff: int) -> float:
    """Probability mass above the truncation, before renormalizing."""
    if nbar <= 0:
        return 0.0
    return float((nbar / (1.0 + nbar)) ** cutoff)


def thermal_fock_probs(nbar: float, cutoff: int) -> np.ndarray:
    """Renormalized Fock occupation probabilities of a truncated thermal state.

    This is the distribution shot sampling draws initial mode quanta
    from; its mean is below nbar because the tail is folded back in."""
    rho = thermal_mode_state(nbar, cutoff)
    return np.real(np.diag(rho)).copy()


def thermal_fock_mean(nbar: float, cutoff: int) -> float:
    p = thermal_fock_probs(nbar, cutoff)
    return float(np.dot(p, np.arange(cutoff)))


def check_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> None:
    """Raise unless rho is Hermitian, unit trace, and positive semidefinite."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ValueError(f"density matrix trace {np.trace(rho):.12f} != 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")


def top_level_population(layout: HilbertLayout, state: np.ndarray,
                         mode: int) -> float:
    """Population sitting in the highest Fock level of one mode."""
    state = np.asarray(state)
    axis = layout.mode_axis(mode)
    top = layout.cutoffs[mode] - 1
    if state.ndim == 1:
        psi = state.reshape(layout.dims)
        sl = np.take(psi, top, axis=axis)
        return float(np.sum(np.abs(sl) ** 2))
    rho = state.reshape(layout.dims + layout.dims)
    sl = np.take(np.take(rho, top, axis=axis),
                 top, axis=axis + len(layout.dims) - 1)
    idx = list(range(sl.ndim // 2))
    return float(np.real(np.einsum(sl, idx + idx)))


def truncation_suspect(layout: HilbertLayout, state: np.ndarray,
                       threshold: float = 1e-6) -> bool:
    """True when any mode's top Fock level holds more than `threshold`.

    Population that high means amplitude probably tried to climb past
    the truncation and was reflected; results should not be trusted."""
    return any(top_level_population(layout, state, m) > threshold
               for m in range(layout.n_modes))
