"""Pulse program representation and execution.

A program is a fixed ion/mode layout plus a sequence of instructions.
Pulses are logical in the RWA backend: a carrier pulse of area theta is
applied as the closed-form rotation regardless of wall-clock duration,
and only Wait advances the quasi-static phase evolution. The numeric
backend realizes the same pulses as finite-duration drives through the
time-domain engine, so off-resonant effects appear.

Classical measurement results land in per-ion bits c0, c1, ...; an If
instruction gates a sub-sequence on one bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import hamiltonian as ham
from . import ionphys
from .constants import ION_MASS
from .hilbert import (HilbertLayout, apply_embedded, basis_state, layout_new,
                      truncation_suspect)
from .noise import (NoiseSpec, ShotContext, addressing_weights,
                    heating_jump_count, sample_context)

TAU = 2.0 * math.pi


class ProgramError(ValueError):
    pass


# ----------------------------------------------------------- instructions


@dataclass(frozen=True)
class PulseCarrier:
    ion: Optional[int]  # None drives every unhidden ion (global beam)
    theta: float
    phi: float


@dataclass(frozen=True)
class PulseBlue:
    ion: int
    theta: float
    phi: float
    mode: int = 0
    order: int = 1


@dataclass(frozen=True)
class PulseRed:
    ion: int
    theta: float
    phi: float
    mode: int = 0
    order: int = 1


@dataclass(frozen=True)
class StarkZ:
    ion: int
    phi: float


@dataclass(frozen=True)
class AcPhase:
    """exp(-i theta sigma_z n_hat) on one ion and one mode; theta = pi/2
    is the motional phase gate diag(1, 1, -i, i) on (D0, S0, D1, S1)."""

    ion: int
    mode: int
    theta: float


@dataclass(frozen=True)
class ModePhase:
    mode: int
    phi: float


@dataclass(frozen=True)
class Wait:
    duration: float


@dataclass(frozen=True)
class Hide:
    ion: int


@dataclass(frozen=True)
class Unhide:
    ion: int


@dataclass(frozen=True)
class Measure:
    ions: Optional[tuple] = None  # None = all unhidden ions


@dataclass(frozen=True)
class IfBit:
    ion: int
    value: int
    body: tuple


@dataclass(frozen=True)
class Bichromatic:
    """Two tones at carrier +/- (trap_freq + delta) on the listed ions,
    integrated through the time-domain engine. eta is the per-ion coupling
    to the addressed mode; ramp_frac is the sin^2 edge fraction."""

    ions: tuple
    mode: int
    delta: float
    omega: float
    duration: float
    eta: float
    trap_freq: float = TAU * 1.0e6
    ramp_frac: float = 0.0


@dataclass(frozen=True)
class GeometricForce:
    """State-dependent force closed by delta at t = 2 pi/delta. The force
    on ion i is g * f(s_i) * exp(i xi_i) * b_im with f(D) = f_up,
    f(S) = f_down and b the axial mode vector."""

    ions: tuple
    mode: int
    delta: float
    duration: float
    g: float
    f_up: float = 1.0
    f_down: float = -2.0
    xi: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ions", tuple(self.ions))
        xi = tuple(float(x) for x in self.xi)
        if not xi:
            xi = (0.0,) * len(self.ions)
        if len(xi) != len(self.ions):
            raise ProgramError("xi must list one phase per ion")
        object.__setattr__(self, "xi", xi)


INSTRUCTION_TYPES = (PulseCarrier, PulseBlue, PulseRed, StarkZ, AcPhase,
                     ModePhase, Wait, Hide, Unhide, Measure, IfBit,
                     Bichromatic, GeometricForce)


@dataclass(frozen=True)
class PulseProgram:
    n_ions: int
    cutoffs: tuple
    instructions: tuple
    meta: dict = field(default_factory=dict)

    def layout(self) -> HilbertLayout:
        return layout_new(self.n_ions, self.cutoffs)

    def _check_ion(self, i):
        if not 0 <= i < self.n_ions:
            raise ProgramError(f"ion {i} out of range (N={self.n_ions})")

    def validate(self):
        def walk(instrs):
            for ins in instrs:
                if isinstance(ins, (PulseBlue, PulseRed)):
                    self._check_ion(ins.ion)
                    if not 0 <= ins.mode < len(self.cutoffs):
                        raise ProgramError(f"mode {ins.mode} out of range")
                    if ins.order < 1:
                        raise ProgramError("sideband order must be >= 1")
                elif isinstance(ins, PulseCarrier):
                    if ins.ion is not None:
                        self._check_ion(ins.ion)
                elif isinstance(ins, (StarkZ, Hide, Unhide)):
                    self._check_ion(ins.ion)
                elif isinstance(ins, (AcPhase,)):
                    self._check_ion(ins.ion)
                elif isinstance(ins, Measure):
                    if ins.ions is not None:
                        for i in ins.ions:
                            self._check_ion(i)
                elif isinstance(ins, IfBit):
                    self._check_ion(ins.ion)
                    walk(ins.body)
                elif isinstance(ins, (Bichromatic, GeometricForce)):
                    for i in ins.ions:
                        self._check_ion(i)
        walk(self.instructions)
        return self


# ------------------------------------------------------------- execution


@dataclass
class ShotRecord:
    bits: dict
    order: tuple
    state: Optional[np.ndarray] = None
    context: Optional[ShotContext] = None
    # population reached the top Fock level of some mode; distrust the shot
    truncation_suspect: bool = False

    def bitstring(self) -> str:
        return "".join(str(self.bits[i]) for i in sorted(self.bits))


class _Executor:
    def __init__(self, program: PulseProgram, *, backend="rwa",
                 noise: Optional[NoiseSpec] = None, rng=None,
                 context: Optional[ShotContext] = None):
        program.validate()
        self.prog = program
        self.lay = program.layout()
        self.backend = backend
        self.noise = noise if noise is not None else NoiseSpec()
        self.rng = rng
        if context is None:
            if rng is not None:
                context = sample_context(self.noise, self.lay.cutoffs, rng)
            else:
                context = ShotContext(initial_fock=(0,) * self.lay.n_modes)
        self.ctx = context
        self.hidden = set()
        self.bits = {}
        self.order = []
        if backend not in ("rwa", "numeric"):
            raise ProgramError(f"unknown backend {backend!r}")
        if backend == "numeric":
            self._engine = self._make_engine()

    # numeric backend trap context from program meta
    def _make_engine(self):
        meta = self.prog.meta
        n = self.prog.n_ions
        if self.lay.n_modes > n:
            raise ProgramError("numeric backend models the axial spectrum; "
                               "need n_modes <= n_ions")
        trap = float(meta.get("trapfreq", TAU * 1.0e6))
        wl = float(meta.get("wavelength", 729e-9))
        mass = ION_MASS["Ca40"]
        freqs, _ = ionphys.axial_modes(n)
        etas = ionphys.lamb_dicke_matrix(n, wl, mass, trap)
        mode_freqs = tuple(trap * freqs[m] for m in range(self.lay.n_modes))
        self._carrier_rabi = float(meta.get("omega", TAU * 50e3))
        return ham.EngineSpec(self.lay, mode_freqs,
                              etas[:, :self.lay.n_modes])

    def initial_state(self) -> np.ndarray:
        return basis_state(self.lay, "S" * self.prog.n_ions,
                           self.ctx.initial_fock)

    # --- helpers

    def _require_visible(self, ion):
        if ion in self.hidden:
            raise ProgramError(f"ion {ion} is hidden; pulses cannot address it")

    def _apply_ion(self, psi, op2, ion):
        return apply_embedded(self.lay, op2, [ion], psi)

    def _apply_ion_mode(self, psi, op, ion, mode):
        return apply_embedded(self.lay, op, [ion, self.lay.mode_axis(mode)], psi)

    def _apply_mode(self, psi, op, mode):
        return apply_embedded(self.lay, op, [self.lay.mode_axis(mode)], psi)

    def _carrier_targets(self, ins):
        if ins.ion is None:
            return [(i, 1.0) for i in range(self.prog.n_ions)
                    if i not in self.hidden]
        self._require_visible(ins.ion)
        pairs = addressing_weights(self.noise.addressing_epsilon, ins.ion,
                                   self.prog.n_ions)
        return [(i, w) for i, w in pairs if i not in self.hidden]

    # --- RWA instruction application

    def _do_carrier(self, psi, ins):
        for i, w in self._carrier_targets(ins):
            th = ins.theta * w * self.ctx.intensity
            psi = self._apply_ion(psi, ham.rc_unitary(th, ins.phi), i)
        return psi

    def _do_sideband(self, psi, ins, kind):
        self._require_visible(ins.ion)
        cut = self.lay.cutoffs[ins.mode]
        pairs = addressing_weights(self.noise.addressing_epsilon, ins.ion,
                                   self.prog.n_ions)
        for i, w in pairs:
            if i in self.hidden:
                continue
            th = ins.theta * w * self.ctx.intensity
            if kind == "blue":
                u = ham.blue_unitary(th, ins.phi, cut, ins.order)
            else:
                u = ham.red_unitary(th, ins.phi, cut, ins.order)
            psi = self._apply_ion_mode(psi, u, i, ins.mode)
        return psi

    def _do_wait(self, psi, ins):
        det = self.ctx.detuning
        if det != 0.0:
            ph = np.exp(1j * det * ins.duration)
            z = np.diag([ph, 1.0]).astype(complex)
            for i in range(self.prog.n_ions):
                psi = self._apply_ion(psi, z, i)
        rate = self.noise.heating_quanta_per_s
        if rate > 0 and self.rng is not None:
            from .hilbert import destroy
            for m in range(self.lay.n_modes):
                k = heating_jump_count(rate, ins.duration, self.rng)
                if k == 0:
                    continue
                adag = destroy(self.lay.cutoffs[m]).conj().T
                for _ in range(k):
                    psi = self._apply_mode(psi, adag, m)
                    nrm = np.linalg.norm(psi)
                    if nrm < 1e-300:
                        raise ProgramError("heating jump hit the Fock cutoff")
                    psi = psi / nrm
        return psi

    def _do_bichromatic(self, psi, ins):
        lay = self.lay
        etas = np.zeros((self.prog.n_ions, lay.n_modes))
        for i in ins.ions:
            self._require_visible(i)
            etas[i, ins.mode] = ins.eta
        mode_freqs = tuple(ins.trap_freq for _ in range(lay.n_modes))
        spec = ham.EngineSpec(lay, mode_freqs, etas)
        env = None
        if ins.ramp_frac > 0:
            tr = ins.ramp_frac * ins.duration

            def env(t, _tr=tr, _T=ins.duration):
                if t < _tr:
                    return math.sin(0.5 * math.pi * t / _tr) ** 2
                if t > _T - _tr:
                    return math.sin(0.5 * math.pi * (_T - t) / _tr) ** 2
                return 1.0

        om = ins.omega * self.ctx.intensity
        det = ins.trap_freq + ins.delta
        drives = []
        for i in ins.ions:
            drives.append(ham.Drive(i, om, +det + self.ctx.detuning, 0.0, env))
            drives.append(ham.Drive(i, om, -det + self.ctx.detuning, 0.0, env))
        u, _info = ham.propagate(ham.drives_hamiltonian(spec, drives),
                                 ins.duration, tol=1e-9, min_steps=256)
        return u @ psi

    def _do_geometric(self, psi, ins):
        n = self.prog.n_ions
        _freqs, vecs = ionphys.axial_modes(n)
        b = vecs[:, ins.mode]
        xi = ins.xi if ins.xi else (0.0,) * len(ins.ions)
        if len(xi) != len(ins.ions):
            raise ProgramError("one xi per driven ion required")
        idx = {i: k for k, i in enumerate(ins.ions)}
        g0 = ins.g * self.ctx.intensity

        def g_of(cfg):
            tot = 0.0 + 0.0j
            for i in ins.ions:
                f = ins.f_up if cfg[i] == 0 else ins.f_down
                tot += f * b[i] * np.exp(1j * xi[idx[i]])
            return g0 * tot

        u = ham.spin_dependent_force_gate(self.lay, ins.mode, g_of,
                                          ins.delta, ins.duration)
        return u @ psi

    # numeric realizations of the logical pulses

    def _numeric_pulse(self, psi, ins, kind):
        eng = self._engine
        om = self._carrier_rabi * self.ctx.intensity
        if kind == "carrier":
            targets = self._carrier_targets(ins)
            drives = []
            dur = abs(ins.theta) / om
            for i, w in targets:
                drives.append(ham.Drive(i, om * w, self.ctx.detuning,
                                        ins.phi - math.pi))
            if not drives:
                return psi
        else:
            self._require_visible(ins.ion)
            if ins.order != 1:
                raise ProgramError("numeric backend supports first sidebands")
            eta = abs(eng.etas[ins.ion, ins.mode])
            if eta == 0:
                raise ProgramError("ion does not couple to this mode")
            dur = abs(ins.theta) / (eta * om)
            sgn = +1 if kind == "blue" else -1
            det = sgn * eng.mode_freqs[ins.mode] + self.ctx.detuning
            drives = [ham.Drive(ins.ion, om, det, ins.phi + math.pi / 2.0)]
            if self.noise.addressing_epsilon:
                for j, w in addressing_weights(self.noise.addressing_epsilon,
                                               ins.ion, self.prog.n_ions):
                    if j != ins.ion and j not in self.hidden:
                        drives.append(ham.Drive(j, om * w, det,
                                                ins.phi + math.pi / 2.0))
        u, _info = ham.propagate(ham.drives_hamiltonian(eng, drives), dur,
                                 tol=1e-8, min_steps=64)
        return u @ psi

    # --- measurement

    def _measured_ions(self, ins):
        if ins.ions is None:
            return tuple(i for i in range(self.prog.n_ions)
                         if i not in self.hidden)
        for i in ins.ions:
            if i in self.hidden:
                raise ProgramError(f"cannot measure hidden ion {i}")
        return tuple(ins.ions)

    def _prob_bit(self, psi, ion, bit):
        tens = psi.reshape(self.lay.dims)
        sl = [slice(None)] * len(self.lay.dims)
        sl[ion] = bit
        return float(np.sum(np.abs(tens[tuple(sl)]) ** 2))

    def _collapse(self, psi, ion, bit):
        tens = psi.reshape(self.lay.dims).copy()
        sl = [slice(None)] * len(self.lay.dims)
        sl[ion] = 1 - bit
        tens[tuple(sl)] = 0.0
        flat = tens.reshape(self.lay.dim)
        return flat / np.linalg.norm(flat)

    def _do_measure(self, psi, ins):
        for ion in self._measured_ions(ins):
            p0 = self._prob_bit(psi, ion, 0)
            if self.rng is None:
                raise ProgramError("measurement needs an RNG; use "
                                   "simulate_branches for exact enumeration")
            bit = 0 if self.rng.random() < p0 else 1
            psi = self._collapse(psi, ion, bit)
            rec = bit
            if self.noise.readout_flip_prob > 0:
                if self.rng.random() < self.noise.readout_flip_prob:
                    rec = 1 - bit
            self.bits[ion] = rec
            self.order.append(ion)
        return psi

    # --- main loop

    def run(self, psi):
        return self._run_list(psi, self.prog.instructions)

    def _run_list(self, psi, instructions):
        for ins in instructions:
            psi = self._step(psi, ins)
        return psi

    def _step(self, psi, ins):
        if isinstance(ins, PulseCarrier):
            if self.backend == "numeric":
                return self._numeric_pulse(psi, ins, "carrier")
            return self._do_carrier(psi, ins)
        if isinstance(ins, PulseBlue):
            if self.backend == "numeric":
                return self._numeric_pulse(psi, ins, "blue")
            return self._do_sideband(psi, ins, "blue")
        if isinstance(ins, PulseRed):
            if self.backend == "numeric":
                return self._numeric_pulse(psi, ins, "red")
            return self._do_sideband(psi, ins, "red")
        if isinstance(ins, StarkZ):
            self._require_visible(ins.ion)
            return self._apply_ion(psi, ham.starkz_unitary(ins.phi), ins.ion)
        if isinstance(ins, AcPhase):
            self._require_visible(ins.ion)
            cut = self.lay.cutoffs[ins.mode]
            ns = np.arange(cut)
            diag = np.concatenate([np.exp(-1j * ins.theta * ns),
                                   np.exp(+1j * ins.theta * ns)])
            return self._apply_ion_mode(psi, np.diag(diag), ins.ion, ins.mode)
        if isinstance(ins, ModePhase):
            cut = self.lay.cutoffs[ins.mode]
            return self._apply_mode(psi, ham.modephase_unitary(ins.phi, cut),
                                    ins.mode)
        if isinstance(ins, Wait):
            return self._do_wait(psi, ins)
        if isinstance(ins, Hide):
            if ins.ion in self.hidden:
                raise ProgramError(f"ion {ins.ion} already hidden")
            self.hidden.add(ins.ion)
            return psi
        if isinstance(ins, Unhide):
            if ins.ion not in self.hidden:
                raise ProgramError(f"ion {ins.ion} is not hidden")
            self.hidden.remove(ins.ion)
            return psi
        if isinstance(ins, Measure):
            return self._do_measure(psi, ins)
        if isinstance(ins, IfBit):
            if ins.ion not in self.bits:
                raise ProgramError(f"bit c{ins.ion} read before measurement")
            if self.bits[ins.ion] == ins.value:
                psi = self._run_list(psi, ins.body)
            return psi
        if isinstance(ins, Bichromatic):
            return self._do_bichromatic(psi, ins)
        if isinstance(ins, GeometricForce):
            return self._do_geometric(psi, ins)
        raise ProgramError(f"unknown instruction {ins!r}")


def execute(program: PulseProgram, *, seed: int = 0, shot: int = 0,
            noise: Optional[NoiseSpec] = None, backend: str = "rwa",
            psi0: Optional[np.ndarray] = None,
            keep_state: bool = False) -> ShotRecord:
    """Run one shot. The RNG stream is keyed by (seed, shot) so any shot
    can be reproduced in isolation."""
    rng = np.random.default_rng([int(seed), int(shot)])
    ex = _Executor(program, backend=backend, noise=noise, rng=rng)
    psi = ex.initial_state() if psi0 is None else np.asarray(psi0, complex)
    psi = ex.run(psi)
    suspect = truncation_suspect(ex.lay, psi)
    return ShotRecord(bits=dict(ex.bits), order=tuple(ex.order),
                      state=psi if keep_state else None, context=ex.ctx,
                      truncation_suspect=suspect)


@dataclass
class EnsembleResult:
    shots: int
    seed: int
    counts: dict
    records: list

    def probabilities(self) -> dict:
        return {k: v / self.shots for k, v in sorted(self.counts.items())}


def run_ensemble(program: PulseProgram, shots: int, *, seed: int = 0,
                 noise: Optional[NoiseSpec] = None, backend: str = "rwa",
                 keep_records: bool = True) -> EnsembleResult:
    counts = {}
    records = []
    for s in range(shots):
        rec = execute(program, seed=seed, shot=s, noise=noise, backend=backend)
        key = rec.bitstring()
        counts[key] = counts.get(key, 0) + 1
        if keep_records:
            records.append(rec)
    return EnsembleResult(shots=shots, seed=seed, counts=counts,
                          records=records)


@dataclass
class Branch:
    prob: float
    bits: dict
    state: np.ndarray
    truncation_suspect: bool = False

    def bitstring(self) -> str:
        return "".join(str(self.bits[i]) for i in sorted(self.bits))


def simulate_branches(program: PulseProgram, *,
                      psi0: Optional[np.ndarray] = None,
                      prune: float = 1e-14) -> list:
    """Exact noiseless enumeration of every measurement outcome.

    Returns all branches with nonzero probability; the executor forks at
    each Measure instead of sampling."""
    program.validate()
    out = []

    def recurse(instrs, psi, bits, order, hidden, weight):
        ex = _Executor(program)
        ex.bits = dict(bits)
        ex.hidden = set(hidden)
        i = 0
        while i < len(instrs):
            ins = instrs[i]
            if isinstance(ins, Measure):
                ions = ex._measured_ions(ins)
                # fork on the first ion, requeue the rest
                if ions:
                    ion = ions[0]
                    rest = (Measure(tuple(ions[1:])),) if len(ions) > 1 else ()
                    tail = rest + tuple(instrs[i + 1:])
                    for bit in (0, 1):
                        p = ex._prob_bit(psi, ion, bit)
                        if p <= prune:
                            continue
                        psi2 = ex._collapse(psi, ion, bit)
                        recurse(tail, psi2, {**ex.bits, ion: bit},
                                order + [ion], set(ex.hidden), weight * p)
                    return
                i += 1
                continue
            if isinstance(ins, IfBit):
                if ins.ion not in ex.bits:
                    raise ProgramError(f"bit c{ins.ion} read before measurement")
                if ex.bits[ins.ion] == ins.value:
                    instrs = tuple(ins.body) + tuple(instrs[i + 1:])
                    i = 0
                    continue
                i += 1
                continue
            psi = ex._step(psi, ins)
            i += 1
        out.append(Branch(prob=weight, bits=dict(ex.bits), state=psi,
                          truncation_suspect=truncation_suspect(ex.lay, psi)))

    start = _Executor(program)
    psi = start.initial_state() if psi0 is None else np.asarray(psi0, complex)
    recurse(tuple(program.instructions), psi, {}, [], set(), 1.0)
    return out
