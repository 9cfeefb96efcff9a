"""Pulse-program builders for the canned experiments.

Each builder emits a PulseProgram made only of primitive instructions
and gate-library sequences, so every circuit here can be dumped to DSL
text, inspected, and rerun. Targets used by the tests live alongside
the builders.

Qubit logic convention in this module: logical 1 = |D>, logical 0 = |S>
(all ions start in |S>). Measured bits use the basis-index convention
(0 = D), so classification helpers translate where needed.
"""

from __future__ import annotations

import math

import numpy as np

from . import gates
from .hilbert import basis_state, layout_new
from .program import (AcPhase, Hide, IfBit, Measure, ModePhase, PulseBlue,
                      PulseCarrier, PulseProgram, StarkZ, Unhide, Wait)

PI = math.pi
SQRT2 = math.sqrt(2.0)


def _prog(n_ions, cutoffs, instrs, **meta):
    return PulseProgram(n_ions, tuple(cutoffs), tuple(instrs), dict(meta)).validate()


# ------------------------------------------------------------------ Bell


def bell_program(*, even: bool = False, cutoff: int = 4,
                 measure: bool = True) -> PulseProgram:
    """(|DS,0> + |SD,0>)/sqrt2 via half sideband excitation, carrier flip,
    and a closing sideband pi pulse on the second ion.

    even=True appends one more carrier pi pulse, transferring to the
    same-outcome pair (|SS,0> + |DD,0>)/sqrt2; that is the state whose
    analysis-pulse parity fringe runs as -cos(2 phi)."""
    instrs = [
        PulseBlue(0, PI / 2.0, 0.0),
        PulseCarrier(1, PI, 0.0),
        PulseBlue(1, PI, PI),
    ]
    if even:
        instrs.append(PulseCarrier(1, PI, 0.0))
    if measure:
        instrs.append(Measure(None))
    return _prog(2, (cutoff,), instrs)


def bell_target(cutoff: int = 4, *, even: bool = False) -> np.ndarray:
    lay = layout_new(2, (cutoff,))
    if even:
        return (basis_state(lay, "SS") + basis_state(lay, "DD")) / SQRT2
    return (basis_state(lay, "DS") + basis_state(lay, "SD")) / SQRT2


# ------------------------------------------------------------------- GHZ


def ghz_program(n: int = 3, *, cutoff: int = 4, measure: bool = True) -> PulseProgram:
    """(|D...D> + |S...S>)/sqrt2: split the first ion, map it onto the bus,
    flip every other ion conditioned on the bus through the composite
    phase gate, unmap."""
    if n < 2:
        raise ValueError("GHZ needs at least 2 ions")
    unmap_phase = PI / 2.0 if n % 2 == 1 else -PI / 2.0
    instrs = [
        PulseCarrier(0, PI / 2.0, 0.0),
        PulseBlue(0, PI, 0.0),
    ]
    for k in range(1, n):
        instrs.append(PulseCarrier(k, PI / 2.0, -PI / 2.0))
        instrs.extend(gates.composite_phase_gate(k))
        instrs.append(PulseCarrier(k, PI / 2.0, +PI / 2.0))
    instrs.append(PulseBlue(0, PI, unmap_phase))
    if measure:
        instrs.append(Measure(None))
    return _prog(n, (cutoff,), instrs)


def ghz_target(n: int, cutoff: int = 4) -> np.ndarray:
    lay = layout_new(n, (cutoff,))
    return (basis_state(lay, "D" * n) + basis_state(lay, "S" * n)) / SQRT2


# --------------------------------------------------------------------- W


def w_program(n: int = 3, *, cutoff: int = 4, measure: bool = True) -> PulseProgram:
    """(|SD..D> + |DSD..D> + ... + |D..DS>)/sqrt N: a splitter pulse puts
    1/sqrt N of the population aside, the rest rides the bus and is dealt
    out one share at a time by partial sideband pulses."""
    if n < 2:
        raise ValueError("W needs at least 2 ions")
    theta1 = 2.0 * math.acos(1.0 / math.sqrt(n))
    instrs = [PulseBlue(0, theta1, -PI / 2.0)]
    for k in range(1, n):
        instrs.append(PulseCarrier(k, PI, -PI / 2.0))
    for k in range(1, n):
        theta_k = 2.0 * math.asin(1.0 / math.sqrt(n - k))
        instrs.append(PulseBlue(k, theta_k, PI / 2.0))
    if measure:
        instrs.append(Measure(None))
    return _prog(n, (cutoff,), instrs)


def w_target(n: int, cutoff: int = 4) -> np.ndarray:
    lay = layout_new(n, (cutoff,))
    out = np.zeros(lay.dim, dtype=complex)
    for k in range(n):
        labels = "".join("S" if i == k else "D" for i in range(n))
        out += basis_state(lay, labels)
    return out / math.sqrt(n)


# ----------------------------------------------------------- Deutsch-Jozsa
#
# Single ion (the "a" qubit) with the work qubit in the axial motion:
# |0_w> = |1>_motion and |1_w> = |0>_motion. The four one-bit functions
# are realized by the sideband blocks below; the a qubit is interrogated
# in a Ramsey pair and ends in |S> for constant f, |D> for balanced f.

DJ_FUNCTIONS = ("f1", "f2", "f3", "f4")


def _dj_block(name: str) -> list:
    swap_fwd = gates.composite_swap(0, phase_offset=PI)
    swap_inv = gates.composite_swap(0, phase_offset=0.0)
    not_a = [PulseCarrier(0, PI / 2.0, PI),
             PulseCarrier(0, PI, PI / 2.0),
             PulseCarrier(0, PI / 2.0, 0.0)]
    f3 = [PulseBlue(0, PI, PI / 2.0),
          PulseBlue(0, PI / SQRT2, 0.0),
          PulseBlue(0, PI, PI / 2.0),
          PulseBlue(0, PI / SQRT2, 0.0)]
    if name == "f1":
        return []
    if name == "f2":
        return [*swap_inv, *not_a, *swap_fwd]
    if name == "f3":
        return list(f3)
    if name == "f4":
        return [PulseCarrier(0, PI, 0.0), *f3, PulseCarrier(0, PI, 0.0)]
    raise ValueError(f"unknown function {name!r}; choose from {DJ_FUNCTIONS}")


def dj_program(function: str, *, cutoff: int = 5,
               measure: bool = True) -> PulseProgram:
    """Deutsch-Jozsa on one ion with the work qubit in the motion.

    The motion starts in |0> (= logical |1_w>), standing in for the
    ancilla |1> of the textbook circuit, and the function blocks act on
    both qubits. Constant functions return the ion to |S> (bit 1),
    balanced functions park it in |D> (bit 0)."""
    instrs = [PulseCarrier(0, PI / 2.0, 0.0)]
    instrs.extend(_dj_block(function))
    instrs.append(PulseCarrier(0, PI / 2.0, PI))
    if measure:
        instrs.append(Measure((0,)))
    return _prog(1, (cutoff,), instrs, dj_function=function)


def dj_is_balanced(bit: int) -> bool:
    """Classify from the measured a-qubit bit (basis index: 0 = D)."""
    return bit == 0


DJ_CLASS = {"f1": False, "f2": False, "f3": True, "f4": True}  # balanced?


# ---------------------------------------------------------- teleportation


def _flip(ion):
    # [[0,1],[-1,0]]: population flip, phase harmless inside one branch
    return PulseCarrier(ion, PI, -PI / 2.0)


def teleport_program(theta: float = 0.0, phi: float = 0.0, *,
                     cutoff: int = 4, corrections: bool = True,
                     measure_out: bool = False) -> PulseProgram:
    """Teleport R^C(theta, phi)|S> from ion 0 to ion 2.

    Bell pair on (1,2), Bell analysis on (0,1) via the bus CNOT and a
    half pulse, hiding ion 2 during the readout, then conditional
    single-qubit corrections."""
    instrs = [
        # Bell resource on ions 1, 2
        PulseBlue(1, PI / 2.0, 0.0),
        PulseCarrier(2, PI, 0.0),
        PulseBlue(2, PI, PI),
        # input state on ion 0
        PulseCarrier(0, theta, phi),
        # Bell analysis on (0, 1)
        *gates.cirac_zoller_cnot(0, 1),
        PulseCarrier(0, PI / 2.0, -PI / 2.0),
        Hide(2),
        Measure((0, 1)),
        Unhide(2),
    ]
    if corrections:
        # derived branch table: (m0,m1) -> I / X / Z / Y (up to phase)
        instrs.extend([
            IfBit(1, 1, (PulseCarrier(2, PI, 0.0),)),
            IfBit(0, 1, (StarkZ(2, PI),)),
        ])
    if measure_out:
        instrs.append(Measure((2,)))
    return _prog(3, (cutoff,), instrs, teleport_theta=theta, teleport_phi=phi)


def teleport_input_state(theta: float, phi: float) -> np.ndarray:
    from .hamiltonian import rc_unitary
    return rc_unitary(theta, phi) @ np.array([0.0, 1.0], dtype=complex)


TELEPORT_FIDUCIALS = (
    (0.0, 0.0),            # |S>
    (PI, 0.0),             # |D> up to phase
    (PI / 2.0, 0.0),
    (PI / 2.0, PI / 2.0),
    (PI / 2.0, PI),
    (PI / 2.0, -PI / 2.0),
)


# ------------------------------------------------------------------- QEC


QEC_ENCODINGS = ("cnot", "geometric")


def qec_program(input_label: str = "S", theta_e: float = 0.0, *,
                correct: bool = True, encoding: str = "cnot",
                cutoff: int = 4, measure_out: bool = False) -> PulseProgram:
    """Three-ion code against carrier flips.

    encoding="cnot": repetition code. Encode with two bus CNOTs, rotate
    every ion by theta_e about x (flip probability sin^2(theta_e/2)
    each), decode, measure the two redundancy ions, and flip the data
    ion back when both announce a flip (syndrome DD). Corrected
    basis-state fidelity is 1 - 3p^2 + 2p^3.

    encoding="geometric": one collective three-phase force pulse between
    global half pulses (no addressing inside the code block). The
    decoded single-flip errors all share the DD syndrome and commute, so
    the same DD-triggered flip makes basis states exactly invariant for
    every theta_e; the redundancy here shows up only against
    superposition inputs and is intentionally different arithmetic from
    the repetition formula."""
    if input_label not in ("S", "D"):
        raise ValueError("basis input must be S or D")
    if encoding not in QEC_ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}; "
                         f"choose from {QEC_ENCODINGS}")
    instrs = []
    if input_label == "D":
        instrs.append(_flip(0))
    if encoding == "cnot":
        encode = [*gates.cirac_zoller_cnot(0, 1),
                  *gates.cirac_zoller_cnot(0, 2)]
        decode = list(encode)
    else:
        force = gates.three_phase_phase_gate((0, 1, 2))
        encode = [PulseCarrier(None, PI / 2.0, 0.0), force,
                  PulseCarrier(None, PI / 2.0, 0.0)]
        decode = [PulseCarrier(None, PI / 2.0, PI), force,
                  PulseCarrier(None, PI / 2.0, PI)]
    instrs.extend(encode)
    for k in range(3):
        instrs.append(PulseCarrier(k, theta_e, 0.0))
    instrs.extend(decode)
    instrs.append(Measure((1, 2)))
    if correct:
        instrs.append(IfBit(1, 0, (IfBit(2, 0, (_flip(0),)),)))
    if measure_out:
        instrs.append(Measure((0,)))
    return _prog(3, (cutoff,), instrs, qec_input=input_label,
                 qec_theta_e=theta_e, qec_encoding=encoding)


def qec_corrected_fidelity(theta_e: float) -> float:
    """1 - 3p^2 + 2p^3 with p = sin^2(theta_e/2): the code survives zero
    or one flips out of three."""
    p = math.sin(theta_e / 2.0) ** 2
    return 1.0 - 3.0 * p * p + 2.0 * p ** 3


def bare_qubit_fidelity(theta_e: float) -> float:
    return 1.0 - math.sin(theta_e / 2.0) ** 2


# ---------------------------------------------------- semiclassical QFT


SQFT_INPUTS = ("period1", "period2", "period4", "period8")


def _sqft_prep(input_id, phases):
    """Pulses preparing the four period states and the phase-tunable
    state. Ions (0,1,2) hold QFT bits (k1,k2,k3); logical 1 = |D>."""
    had = lambda ion: PulseCarrier(ion, PI / 2.0, -PI / 2.0)
    flip = _flip
    if input_id == "period1":
        # uniform superposition of all eight basis states
        return [had(0), had(1), had(2)]
    if input_id == "period2":
        # k1 = 1 fixed, k2 and k3 uniform
        return [flip(0), had(1), had(2)]
    if input_id == "period4":
        # k1 = k2 = 1, k3 uniform
        return [flip(0), flip(1), had(2)]
    if input_id == "period8":
        return [flip(0), flip(1), flip(2)]
    if input_id == "phase":
        beta, gamma, mu = phases
        # (|0>3 (|0>+e^{i beta}|1>)2 |1>1 + e^{i gamma}|1>3 (|0>+e^{i(beta+mu)}|1>)2 |0>1)/2
        seq = [
            flip(0),                       # k1 = 1
            PulseCarrier(1, PI / 2.0, -PI / 2.0),
            StarkZ(1, beta),               # k2 = 1 picks e^{i beta}
            PulseCarrier(2, PI / 2.0, -PI / 2.0),
            StarkZ(2, gamma),
            *gates.cirac_zoller_cnot(2, 0),  # k1 = NOT k3
            # conditional phase mu on k3 = k2 = 1: park the k3 = 0 branch
            # on the bus, kick k2 by z(n), return, then clean up singles
            PulseBlue(2, PI, 0.0),
            AcPhase(1, 0, mu / 2.0),
            PulseBlue(2, PI, 0.0),
            StarkZ(1, mu),
            StarkZ(2, PI + mu / 2.0),
        ]
        return seq
    raise ValueError(f"unknown sQFT input {input_id!r}")


def sqft_program(input_id: str = "period2", *, phases=(0.0, 0.0, 0.0),
                 cutoff: int = 4) -> PulseProgram:
    """Quantum Fourier transform with measurement feed-forward.

    The transform of x = 4 k3 + 2 k2 + k1 factorizes one wire at a
    time once the wire carrying the most significant input bit is read
    first: ion 2 yields the least significant output bit, and each
    outcome feeds z kicks of pi/2^(i-j) forward to the wires still
    unread, replacing the controlled phases of the coherent circuit.
    A D outcome (bit 0) is logical 1 and triggers the kick; output
    bits assemble as y = 4 (1-b0) + 2 (1-b1) + (1-b2)."""
    instrs = list(_sqft_prep(input_id, phases))
    for i in (2, 1, 0):
        instrs.append(PulseCarrier(i, PI / 2.0, PI / 2.0))
        instrs.append(Measure((i,)))
        for j in range(i):
            instrs.append(IfBit(i, 0, (StarkZ(j, PI / 2 ** (i - j)),)))
    return _prog(3, (cutoff,), instrs, sqft_input=input_id)


def sqft_output_value(bits) -> int:
    """Map the three measured bits of sqft_program to y in 0..7."""
    return 4 * (1 - bits[0]) + 2 * (1 - bits[1]) + (1 - bits[2])


def sqft_input_vector(input_id: str, phases=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Logical 3-qubit input as indexed by x = 4 k3 + 2 k2 + k1."""
    v = np.zeros(8, dtype=complex)
    if input_id == "period1":
        v[:] = 1.0
    elif input_id == "period2":
        v[1::2] = 1.0
    elif input_id == "period4":
        v[[3, 7]] = 1.0
    elif input_id == "period8":
        v[7] = 1.0
    elif input_id == "phase":
        beta, gamma, mu = phases
        v[1] = 1.0
        v[3] = np.exp(1j * beta)
        v[4] = np.exp(1j * gamma)
        v[6] = np.exp(1j * (beta + gamma + mu))
    else:
        raise ValueError(f"unknown sQFT input {input_id!r}")
    return v / np.linalg.norm(v)


def dft_oracle_distribution(input_id: str, phases=(0.0, 0.0, 0.0)) -> np.ndarray:
    """|DFT psi|^2 with the 8x8 matrix F[y, x] = exp(2 pi i x y / 8)/sqrt8."""
    x = np.arange(8)
    f = np.exp(2j * PI * np.outer(x, x) / 8.0) / math.sqrt(8.0)
    amp = f @ sqft_input_vector(input_id, phases)
    return np.abs(amp) ** 2


# ---------------------------------------------------------- purification


def purification_program(*, z_flip_a: bool = False, z_flip_b: bool = False,
                         cutoff: int = 4,
                         alpha: float = 1.0 / SQRT2) -> PulseProgram:
    """One phase-purification round on two Bell pairs (0,1) and (2,3).

    Each pair starts as alpha|SS> + beta|DD>; z_flip_a/b inject the
    phase error this round detects on the first member of pair a/b.
    The node CNOTs (0,2) and (1,3) fold the joint phase parity into
    pair (0,1), which is read out along x with the two half pulses a
    flip apart, so even parity prints as opposite bits. Opposite bits
    keep the surviving pair (2,3); neither success branch needs a
    feed-forward correction."""
    theta = 2.0 * math.acos(alpha)

    def bell_pair(i, j, flip):
        seq = [
            PulseCarrier(i, theta, -PI / 2.0),
            *gates.cirac_zoller_cnot(i, j),
        ]
        if flip:
            seq.append(StarkZ(i, PI))
        return seq

    instrs = [
        *bell_pair(0, 1, z_flip_a),
        *bell_pair(2, 3, z_flip_b),
        *gates.cirac_zoller_cnot(0, 2),
        *gates.cirac_zoller_cnot(1, 3),
        PulseCarrier(0, PI / 2.0, -PI / 2.0),
        PulseCarrier(1, PI / 2.0, +PI / 2.0),
        Measure((0, 1)),
    ]
    return _prog(4, (cutoff,), instrs, purify_alpha=alpha,
                 purify_flips=(z_flip_a, z_flip_b))


def purification_success(bits: dict) -> bool:
    return bits[0] != bits[1]


def purified_pair_target() -> np.ndarray:
    """Kept-pair (ions 2,3) target: (|SS> + |DD>)/sqrt2."""
    lay = layout_new(2, ())
    return (basis_state(lay, "SS") + basis_state(lay, "DD")) / SQRT2


def purification_recurrence(f: float) -> float:
    """Post-selected output fidelity for the phase-flip mixture at input
    fidelity f: f^2 / (f^2 + (1-f)^2); the success odds are
    f^2 + (1-f)^2."""
    return f * f / (f * f + (1.0 - f) ** 2)


# --------------------------------------------------------- Mach-Zehnder


def mach_zehnder_program(order: int = 1, phase: float = 0.0, *,
                         cutoff: int = 6, measure: bool = True) -> PulseProgram:
    """Single-ion interferometer: two order-n sideband half pulses around
    a motional phase advance. Excitation reads sin^2(n phase / 2)."""
    if order not in (1, 2, 3):
        raise ValueError("interferometer order must be 1, 2, or 3")
    if cutoff <= order:
        raise ValueError("cutoff must exceed the sideband order")
    instrs = [
        PulseBlue(0, PI / 2.0, 0.0, 0, order),
        ModePhase(0, phase),
        PulseBlue(0, PI / 2.0, PI, 0, order),
    ]
    if measure:
        instrs.append(Measure((0,)))
    return _prog(1, (cutoff,), instrs, mz_order=order, mz_phase=phase)


def mz_excitation(order: int, phase: float) -> float:
    return math.sin(order * phase / 2.0) ** 2


# ------------------------------------------------- Ramsey, echo, and DFS


def ramsey_program(wait: float, *, echo: bool = False,
                   cutoff: int = 2) -> PulseProgram:
    """pi/2 - wait - pi/2 with closing phase pi; with echo=True the wait
    is split around a refocusing pi pulse and the closing phase flips so
    the ideal return stays |S>."""
    if echo:
        instrs = [
            PulseCarrier(0, PI / 2.0, 0.0),
            Wait(wait / 2.0),
            PulseCarrier(0, PI, 0.0),
            Wait(wait / 2.0),
            PulseCarrier(0, PI / 2.0, 0.0),
            Measure((0,)),
        ]
    else:
        instrs = [
            PulseCarrier(0, PI / 2.0, 0.0),
            Wait(wait),
            PulseCarrier(0, PI / 2.0, PI),
            Measure((0,)),
        ]
    return _prog(1, (cutoff,), instrs, ramsey_wait=wait, ramsey_echo=echo)


def dfs_program(theta: float = PI / 3.0, wait: float = 1.0e-3, *,
                cutoff: int = 4, measure: bool = False) -> PulseProgram:
    """Encode cos(theta/2)|SD> + i sin(theta/2)|DS> and idle: collective
    dephasing during the wait multiplies both halves by the same phase."""
    instrs = [
        PulseBlue(0, theta, 0.0),
        PulseCarrier(1, PI, 0.0),
        PulseBlue(1, PI, PI),
        Wait(wait),
    ]
    if measure:
        instrs.append(Measure(None))
    return _prog(2, (cutoff,), instrs, dfs_theta=theta)


def dfs_target(theta: float, cutoff: int = 4) -> np.ndarray:
    lay = layout_new(2, (cutoff,))
    # same chain as the Bell builder with a partial splitter
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return c * basis_state(lay, "SD") + s * basis_state(lay, "DS")
