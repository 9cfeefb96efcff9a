"""Measurement analysis: Pauli expectations, state tomography (linear
inversion and maximum likelihood), parity fringes, process tomography.

Measurement model: each qubit is read out in its energy basis after an
optional carrier pre-rotation. The rotation R_C(pi/2, -pi/2) maps the
sigma_x eigenbasis onto the readout basis, R_C(pi/2, pi) maps sigma_y;
no rotation reads sigma_z. A recorded bit b contributes (1 - 2b) to the
expectation value, so bit 0 (the upper level) is the +1 eigenstate of
sigma_z.

Pauli strings are written over the alphabet I, X, Y, Z with qubit 0
first ("XY" means sigma_x on qubit 0, sigma_y on qubit 1); measurement
settings use the lowercase letters x, y, z. The process-matrix basis is
the lexicographic Kronecker ordering of (I, X, Y, Z) per qubit.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import rc_unitary
from .hilbert import IDENT2, SIGMA_X, SIGMA_Y, SIGMA_Z

PI = math.pi

AXES = "xyz"
PAULI_1Q = {"I": IDENT2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

# carrier pre-rotation that maps each measurement axis onto the readout
# basis: U sigma_z-readout of U|psi> equals the axis expectation
SETTING_ROTATIONS = {
    "x": rc_unitary(PI / 2.0, -PI / 2.0),
    "y": rc_unitary(PI / 2.0, PI),
    "z": np.eye(2, dtype=complex),
}


def measurement_settings(n_qubits: int) -> list:
    """All 3^N axis assignments, qubit 0 first, lexicographic in xyz."""
    return ["".join(s) for s in itertools.product(AXES, repeat=n_qubits)]


def setting_unitary(setting: str) -> np.ndarray:
    u = np.array([[1.0]], dtype=complex)
    for axis in setting:
        u = np.kron(u, SETTING_ROTATIONS[axis])
    return u


def pauli_matrix(label: str) -> np.ndarray:
    m = np.array([[1.0]], dtype=complex)
    for ch in label:
        m = np.kron(m, PAULI_1Q[ch])
    return m


def pauli_labels(n_qubits: int) -> list:
    return ["".join(s) for s in itertools.product("IXYZ", repeat=n_qubits)]


def bitstrings(n_qubits: int) -> list:
    return ["".join(b) for b in itertools.product("01", repeat=n_qubits)]


# ---------------------------------------------------------- count table

@dataclass
class CountTable:
    """Per-setting outcome counts. counts[setting][bitstring] -> int."""

    n_qubits: int
    counts: dict = field(default_factory=dict)

    def add(self, setting: str, bitstring: str, count: int = 1) -> None:
        if len(setting) != self.n_qubits or any(c not in AXES for c in setting):
            raise ValueError(f"bad setting label {setting!r}")
        if len(bitstring) != self.n_qubits \
                or any(c not in "01" for c in bitstring):
            raise ValueError(f"bad bitstring {bitstring!r}")
        if count < 0:
            raise ValueError("counts must be nonnegative")
        per = self.counts.setdefault(setting, {})
        per[bitstring] = per.get(bitstring, 0) + int(count)

    def total(self, setting: str) -> int:
        return sum(self.counts.get(setting, {}).values())

    def require_complete(self) -> None:
        for setting in measurement_settings(self.n_qubits):
            if self.total(setting) < 1:
                raise ValueError(f"setting {setting!r} has no counts")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["setting", "bitstring", "count"])
            for setting in sorted(self.counts):
                for bits in sorted(self.counts[setting]):
                    w.writerow([setting, bits, self.counts[setting][bits]])

    @classmethod
    def from_csv(cls, path) -> "CountTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["setting", "bitstring", "count"]:
            raise ValueError("expected header setting,bitstring,count")
        if len(rows) < 2:
            raise ValueError("empty count table")
        table = cls(n_qubits=len(rows[1][0]))
        for setting, bits, count in rows[1:]:
            table.add(setting, bits, int(count))
        return table


def sample_counts(rho: np.ndarray, shots_per_setting: int,
                  seed: int = 0) -> CountTable:
    """Multinomial readout counts of every 3^N setting from an exact
    state (ket or density matrix on the qubit space only)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = int(round(math.log2(rho.shape[0])))
    if 2 ** n != rho.shape[0]:
        raise ValueError("state dimension is not a power of two")
    rng = np.random.default_rng(seed)
    table = CountTable(n_qubits=n)
    outcomes = bitstrings(n)
    for setting in measurement_settings(n):
        u = setting_unitary(setting)
        p = np.real(np.diag(u @ rho @ u.conj().T)).clip(min=0.0)
        p /= p.sum()
        draws = rng.multinomial(shots_per_setting, p)
        for bits, k in zip(outcomes, draws):
            if k:
                table.add(setting, bits, int(k))
    return table


# ----------------------------------------------------- expectations

def _compatible(setting: str, label: str) -> bool:
    return all(ch == "I" or ch.lower() == setting[i]
               for i, ch in enumerate(label))


def estimate_expectations(table: CountTable) -> dict:
    """Joint Pauli expectations for every label in {I,X,Y,Z}^N.

    A label with identities is estimated from every compatible setting
    pooled together, which keeps marginals consistent by construction
    (the same data backs <XI> regardless of what qubit 1 was read in).
    """
    table.require_complete()
    n = table.n_qubits
    out = {"I" * n: 1.0}
    for label in pauli_labels(n):
        if label == "I" * n:
            continue
        signed, total = 0.0, 0
        for setting, per in table.counts.items():
            if not _compatible(setting, label):
                continue
            for bits, count in per.items():
                sign = 1
                for i, ch in enumerate(label):
                    if ch != "I" and bits[i] == "1":
                        sign = -sign
                signed += sign * count
                total += count
        out[label] = signed / total
    return out


def expectations_of_state(rho: np.ndarray) -> dict:
    """Exact Pauli expectations of a ket or density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = int(round(math.log2(rho.shape[0])))
    return {label: float(np.real(np.trace(rho @ pauli_matrix(label))))
            for label in pauli_labels(n)}


def linear_inversion(expectations: dict) -> np.ndarray:
    """rho = 2^-N sum_s <s> P_s. Hermitian and trace one by construction;
    possibly indefinite for noisy expectations (check min_eigenvalue)."""
    labels = list(expectations)
    n = len(labels[0])
    if set(labels) != set(pauli_labels(n)):
        raise ValueError("need the full 4^N expectation set")
    dim = 2 ** n
    rho = np.zeros((dim, dim), dtype=complex)
    for label, value in expectations.items():
        rho += value * pauli_matrix(label)
    return rho / dim


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(np.asarray(rho)).min())


# ----------------------------------------------- maximum likelihood

def _povm_elements(n_qubits: int) -> dict:
    povm = {}
    outcomes = bitstrings(n_qubits)
    for setting in measurement_settings(n_qubits):
        u = setting_unitary(setting)
        for k, bits in enumerate(outcomes):
            proj = np.zeros((2 ** n_qubits,) * 2, dtype=complex)
            proj[k, k] = 1.0
            povm[(setting, bits)] = u.conj().T @ proj @ u
    return povm


def log_likelihood(rho: np.ndarray, table: CountTable,
                   povm: dict | None = None) -> float:
    povm = povm if povm is not None else _povm_elements(table.n_qubits)
    total = 0.0
    for setting, per in table.counts.items():
        for bits, count in per.items():
            p = float(np.real(np.trace(rho @ povm[(setting, bits)])))
            total += count * math.log(max(p, 1e-300))
    return total


def _project_psd(rho: np.ndarray, floor: float = 0.0) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, floor, None)
    if w.sum() <= 0.0:
        w = np.ones_like(w)
    w /= w.sum()
    return (v * w) @ v.conj().T


@dataclass
class MLResult:
    rho: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float


def max_likelihood(table: CountTable, *, tol: float = 1e-10,
                   max_iter: int = 2000) -> MLResult:
    """Diluted fixed-point iteration on the multinomial likelihood.

    Start from the PSD projection of linear inversion; the update
    rho <- N[(1-lam)rho + lam R rho R] with R the likelihood gradient
    operator keeps rho physical for lam in (0,1]. The dilution lam is
    halved whenever a full step would lower the likelihood, so the
    iteration never moves downhill. Output is always PSD with unit
    trace; if the iteration cap is hit first, converged is False.
    """
    table.require_complete()
    n = table.n_qubits
    povm = _povm_elements(n)
    rho = _project_psd(linear_inversion(estimate_expectations(table)),
                       floor=1e-12)
    loglik = log_likelihood(rho, table, povm)
    lam = 1.0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        r_op = np.zeros_like(rho)
        total = 0
        for setting, per in table.counts.items():
            for bits, count in per.items():
                el = povm[(setting, bits)]
                p = max(float(np.real(np.trace(rho @ el))), 1e-14)
                r_op += (count / p) * el
                total += count
        r_op /= total
        stepped = False
        while lam > 1e-6:
            mix = (1.0 - lam) * np.eye(rho.shape[0]) + lam * r_op
            cand = mix @ rho @ mix
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.real(np.trace(cand))
            cand_ll = log_likelihood(cand, table, povm)
            if cand_ll >= loglik - 1e-13:
                gain = cand_ll - loglik
                rho, loglik = cand, cand_ll
                stepped = True
                if gain < tol:
                    converged = True
                break
            lam *= 0.5
        if converged or not stepped:
            converged = converged or not stepped
            break
    return MLResult(rho=rho, converged=converged, iterations=it,
                    log_likelihood=loglik)


# ------------------------------------------------------------- parity

def parity(populations) -> float:
    """Signed population sum: +1 for even numbers of excited bits.

    Accepts the four two-qubit populations in the order P00, P01, P10,
    P11, or a {bitstring: probability} mapping for any qubit number.
    """
    if isinstance(populations, dict):
        items = list(populations.items())
    else:
        pops = list(populations)
        if len(pops) != 4:
            raise ValueError("expected four populations P00,P01,P10,P11")
        items = list(zip(("00", "01", "10", "11"), pops))
    total = sum(p for _, p in items)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"populations sum to {total}, not 1")
    return float(sum(p * (-1) ** bits.count("1") for bits, p in items))


def bell_fidelity_parity(p00: float, p11: float, max_parity: float,
                         min_parity: float) -> float:
    """Bell fidelity from the even populations and the parity-fringe
    amplitude: F = (P00 + P11)/2 + (max - min)/4."""
    for v in (p00, p11):
        if not 0.0 <= v <= 1.0:
            raise ValueError("populations must lie in [0,1]")
    for v in (max_parity, min_parity):
        if not -1.0 <= v <= 1.0:
            raise ValueError("parities must lie in [-1,1]")
    return (p00 + p11) / 2.0 + (max_parity - min_parity) / 4.0


def parity_after_analysis(state: np.ndarray, phi: float) -> float:
    """Parity after applying R_C(pi/2, phi) to every qubit of a pure
    qubit-register state or density matrix."""
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = int(round(math.log2(rho.shape[0])))
    u = np.array([[1.0]], dtype=complex)
    for _ in range(n):
        u = np.kron(u, rc_unitary(PI / 2.0, phi))
    probs = np.real(np.diag(u @ rho @ u.conj().T))
    signs = np.array([(-1) ** bin(k).count("1") for k in range(2 ** n)])
    return float(np.dot(probs, signs))


def dominant_frequency(values, base_period: float = 2.0 * PI) -> int:
    """Index of the strongest nonzero Fourier component of a real scan
    sampled uniformly over one base period."""
    spec = np.abs(np.fft.rfft(np.asarray(values, dtype=float)))
    if len(spec) < 2:
        return 0
    return int(np.argmax(spec[1:]) + 1)


# -------------------------------------------------- process tomography

# single-qubit preparation kets: |0>, |1>, |+>, |+i> in the readout basis
_PREP_KETS = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0),
)
PREP_LABELS = ("0", "1", "+", "+i")


def process_input_states(n_qubits: int) -> list:
    """The 4^N product preparation kets, lexicographic in (0,1,+,+i)."""
    out = []
    for combo in itertools.product(range(4), repeat=n_qubits):
        ket = np.array([1.0], dtype=complex)
        for k in combo:
            ket = np.kron(ket, _PREP_KETS[k])
        out.append(ket)
    return out


@dataclass
class ProcessResult:
    chi: np.ndarray
    labels: list
    residual: float          # worst reconstruction error over the inputs
    tp_deviation: float      # || sum chi_ij A_j A_i - I ||


def apply_chi(chi: np.ndarray, labels, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    mats = [pauli_matrix(la) for la in labels]
    for i, a_i in enumerate(mats):
        for j, a_j in enumerate(mats):
            if chi[i, j] != 0.0:
                out += chi[i, j] * (a_i @ rho @ a_j)
    return out


def chi_of_unitary(u: np.ndarray) -> np.ndarray:
    """Exact process matrix of a unitary channel: rank one in the Pauli
    expansion coefficients c_i = Tr(A_i u)/d."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    n = int(round(math.log2(d)))
    c = np.array([np.trace(pauli_matrix(la).conj().T @ u) / d
                  for la in pauli_labels(n)])
    return np.outer(c, c.conj())


def process_tomography(channel, n_qubits: int) -> ProcessResult:
    """Reconstruct chi from the channel's action on the 4^N product
    inputs. channel(rho) must return the output density matrix."""
    dim = 2 ** n_qubits
    kets = process_input_states(n_qubits)
    ins, outs = [], []
    for ket in kets:
        rho_in = np.outer(ket, ket.conj())
        rho_out = np.asarray(channel(rho_in), dtype=complex)
        if rho_out.shape != (dim, dim):
            raise ValueError("channel output has the wrong dimension")
        ins.append(rho_in.reshape(-1, order="F"))
        outs.append(rho_out.reshape(-1, order="F"))
    in_mat = np.stack(ins, axis=1)
    if np.linalg.matrix_rank(in_mat, tol=1e-9) < dim * dim:
        raise ValueError("input set does not span the operator space")
    out_mat = np.stack(outs, axis=1)
    # superoperator on column-major vectorization: vec(A rho B) =
    # (B^T kron A) vec(rho)
    sup, *_ = np.linalg.lstsq(in_mat.T, out_mat.T, rcond=None)
    sup = sup.T
    labels = pauli_labels(n_qubits)
    mats = [pauli_matrix(la) for la in labels]
    chi = np.zeros((len(labels), len(labels)), dtype=complex)
    for i, a_i in enumerate(mats):
        for j, a_j in enumerate(mats):
            basis_ij = np.kron(a_j.T, a_i)
            chi[i, j] = np.vdot(basis_ij, sup) / dim ** 2
    chi = 0.5 * (chi + chi.conj().T)
    residual = 0.0
    for ket in kets:
        rho_in = np.outer(ket, ket.conj())
        rebuilt = apply_chi(chi, labels, rho_in)
        rho_out = np.asarray(channel(rho_in), dtype=complex)
        residual = max(residual, float(np.abs(rebuilt - rho_out).max()))
    tp = np.zeros((dim, dim), dtype=complex)
    for i, a_i in enumerate(mats):
        for j, a_j in enumerate(mats):
            tp += chi[i, j] * (a_j @ a_i)
    tp_dev = float(np.abs(tp - np.eye(dim)).max())
    return ProcessResult(chi=chi, labels=labels, residual=residual,
                         tp_deviation=tp_dev)


def project_chi(chi: np.ndarray) -> np.ndarray:
    """PSD projection with the unit trace restored; use on chi matrices
    estimated from noisy data."""
    return _project_psd(np.asarray(chi, dtype=complex))


def process_fidelity(chi_a: np.ndarray, chi_b: np.ndarray) -> float:
    """Tr(chi_a chi_b) for trace-one process matrices; equals
    |Tr(U^dag V)/d|^2 for unitary channels."""
    return float(np.real(np.trace(np.asarray(chi_a) @ np.asarray(chi_b))))


def chi_payload(result: ProcessResult) -> dict:
    return {
        "version": "ionsim/chi/v1",
        "basis": list(result.labels),
        "ordering": "lexicographic kron of (I,X,Y,Z) per qubit, qubit 0 first",
        "chi": [[[float(z.real), float(z.imag)] for z in row]
                for row in result.chi],
        "residual": result.residual,
        "tp_deviation": result.tp_deviation,
    }


def chi_to_json(result: ProcessResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chi_payload(result), fh, indent=1, sort_keys=True)
        fh.write("\n")


def chi_from_json(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return np.array([[complex(re, im) for re, im in row]
                     for row in payload["chi"]])
