"""Pulse-level simulator of trapped-ion quantum computation.

The package is organized bottom-up:

    hilbert      qubit x Fock-mode state spaces, embeddings, fidelities
    constants    physical constants and ion species masses
    ionphys      string statics, normal modes, Lamb-Dicke couplings,
                 Rabi frequencies, heating estimates
    hamiltonian  drive Hamiltonians and propagators (RWA and numeric)
    noise        quasi-static ensemble noise channels
    program      pulse-program IR, executor, branch enumeration
    gates        composite pulses and entangling gates with calibration
    dsl          the .iqp text format: parser, formatter, diagnostics
    analysis     parity fringes, state and process tomography
    algorithms   canned circuits (Bell/GHZ/W, DJ, teleportation, QEC,
                 semiclassical QFT, purification, Ramsey, DFS)
    experiments  named scans writing versioned CSV + JSON summaries
    cli          the `ionsim` command

Submodules load on first attribute access so that process-level knobs
(the IONSIM_THREADS environment variable) can take effect before numpy
is imported.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("algorithms", "analysis", "cli", "constants", "dsl",
               "experiments", "gates", "hamiltonian", "hilbert", "ionphys",
               "noise", "program")


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module("." + name, __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
