"""Quasi-static noise channels for ensemble runs.

Each shot draws one context (laser detuning, intensity scale, initial
thermal occupations); the context is held fixed for the whole shot.
Fast noise is not modeled; dephasing enters through the shot-to-shot
detuning spread acting during Wait instructions, which reproduces
Gaussian Ramsey decay exp(-sigma^2 T^2 / 2) in ensemble average.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

TAU = 2.0 * math.pi


@dataclass(frozen=True)
class NoiseSpec:
    """Ensemble noise parameters. All optional; zeros mean ideal.

    detuning_sigma_hz: rms laser-qubit detuning in Hz (quasi-static per shot).
    intensity_sigma: fractional rms Rabi-frequency error (scales pulse areas).
    addressing_epsilon: addressed-beam leakage; a pulse on ion i drives ion j
        with area scaled by epsilon**|i-j|.
    nbar: mean initial thermal occupation, scalar or one value per mode.
    heating_quanta_per_s: Poisson rate of +1 Fock jumps during Wait.
    readout_flip_prob: probability each recorded bit flips.
    """

    detuning_sigma_hz: float = 0.0
    intensity_sigma: float = 0.0
    addressing_epsilon: float = 0.0
    nbar: object = 0.0
    heating_quanta_per_s: float = 0.0
    readout_flip_prob: float = 0.0

    def nbar_for_mode(self, m: int) -> float:
        if isinstance(self.nbar, (list, tuple)):
            return float(self.nbar[m])
        return float(self.nbar)

    @property
    def is_trivial(self) -> bool:
        flat = [self.detuning_sigma_hz, self.intensity_sigma,
                self.addressing_epsilon, self.heating_quanta_per_s,
                self.readout_flip_prob]
        nb = self.nbar if isinstance(self.nbar, (list, tuple)) else [self.nbar]
        return all(v == 0 for v in flat) and all(v == 0 for v in nb)


def noise_from_json(text: str) -> NoiseSpec:
    data = json.loads(text)
    known = {"detuning_sigma_hz", "intensity_sigma", "addressing_epsilon",
             "nbar", "heating_quanta_per_s", "readout_flip_prob"}
    bad = set(data) - known
    if bad:
        raise ValueError(f"unknown noise keys: {sorted(bad)}; known: {sorted(known)}")
    if "nbar" in data and isinstance(data["nbar"], list):
        data["nbar"] = tuple(float(v) for v in data["nbar"])
    return NoiseSpec(**data)


def load_noise(path) -> NoiseSpec:
    with open(path) as fh:
        return noise_from_json(fh.read())


@dataclass(frozen=True)
class ShotContext:
    """One shot's frozen noise draw."""

    detuning: float = 0.0          # angular, applied during Wait
    intensity: float = 1.0         # multiplies every pulse area
    initial_fock: tuple = ()       # one occupation per mode


def sample_thermal_n(nbar: float, cutoff: int, rng) -> int:
    """Geometric Fock draw p(n) proportional to (nbar/(1+nbar))^n, clipped
    to the truncation."""
    if nbar <= 0:
        return 0
    r = nbar / (1.0 + nbar)
    # inverse CDF of the geometric distribution
    u = rng.random()
    n = int(math.floor(math.log1p(-u * (1.0 - r**cutoff)) / math.log(r))) \
        if r > 0 else 0
    return min(max(n, 0), cutoff - 1)


def sample_context(spec: NoiseSpec, cutoffs, rng) -> ShotContext:
    det = 0.0
    if spec.detuning_sigma_hz:
        det = TAU * spec.detuning_sigma_hz * rng.standard_normal()
    inten = 1.0
    if spec.intensity_sigma:
        inten = 1.0 + spec.intensity_sigma * rng.standard_normal()
    fock = tuple(sample_thermal_n(spec.nbar_for_mode(m), cutoffs[m], rng)
                 for m in range(len(cutoffs)))
    return ShotContext(detuning=det, intensity=inten, initial_fock=fock)


def addressing_weights(epsilon: float, target: int, n_ions: int):
    """Area scale per ion for an addressed pulse with crosstalk epsilon."""
    if epsilon == 0.0:
        return [(target, 1.0)]
    out = []
    for j in range(n_ions):
        w = epsilon ** abs(j - target)
        if w > 1e-12:
            out.append((j, w))
    return out


def heating_jump_count(rate: float, duration: float, rng) -> int:
    if rate <= 0 or duration <= 0:
        return 0
    return int(rng.poisson(rate * duration))
