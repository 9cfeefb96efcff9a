"""Command line front end: run pulse programs and named experiments.

    ionsim run <file.iqp> [--shots N] [--seed S] [--noise file.json]
                          [--backend rwa|numeric] [--out DIR]
                          [--scan name=start:stop:steps]
    ionsim exp <name>     [--n N] [--shots N] [--seed S] [--noise file.json]
                          [--scan param=start:stop:steps]
                          [--set key=value ...] [--out DIR]
    ionsim replay <summary.json> [--out DIR]
    ionsim list

Numeric flag values accept SI suffixes: time suffixes (s, ms, us, ns)
convert to seconds, frequency suffixes (Hz, kHz, MHz, GHz) convert to
angular rad/s, so `--set trap_freq=1MHz` means 2 pi x 10^6 rad/s.

`run` aggregates measured bitstrings into a CSV (scan value, outcome
bitstring, probability, standard error) plus a summary JSON carrying
the seed, the full program text and a content hash; `replay` re-runs
either kind of summary from that metadata alone. Reruns with the same
configuration and seed are byte-identical. A scanned `run` parameter
becomes a name the program's value expressions can reference.

Parse and usage problems exit with status 2 and a positioned
diagnostic; nothing is plotted, CSV is the contract. The only
environment variable consulted is IONSIM_THREADS, which caps the
linear-algebra thread pools and must be read before numpy loads, so
this module imports the simulator lazily.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys

TAU = 2.0 * math.pi

RUN_SCHEMA = "ionsim/run/v1"

_SI_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_SI_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_QTY_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
                     r"([a-zA-Z]*)$")


def parse_quantity(text: str) -> float:
    """Float with an optional SI suffix; frequencies come back angular."""
    m = _QTY_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a number: {text!r}")
    value, suffix = float(m.group(1)), m.group(2)
    if not suffix:
        return value
    if suffix in _SI_TIME:
        return value * _SI_TIME[suffix]
    low = suffix.lower()
    if low in _SI_FREQ:
        return TAU * value * _SI_FREQ[low]
    raise ValueError(f"unknown unit suffix {suffix!r} in {text!r} "
                     "(use s/ms/us/ns or Hz/kHz/MHz/GHz)")


def parse_scalar(text: str):
    """Best-effort typed value for --set: bool, int, quantity, string."""
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return parse_quantity(t)
    except ValueError:
        return t


def parse_set(items) -> dict:
    out = {}
    for item in items or ():
        key, eq, value = item.partition("=")
        if not eq or not key:
            raise ValueError(f"--set expects key=value, got {item!r}")
        if "," in value:
            out[key] = [parse_scalar(v) for v in value.split(",")]
        else:
            out[key] = parse_scalar(value)
    return out


def parse_scan(text: str):
    """`name=start:stop:steps` with steps >= 2; grid is
    endpoint-exclusive like every scan in this package."""
    name, eq, rest = text.partition("=")
    parts = rest.split(":")
    if not eq or not name or len(parts) != 3:
        raise ValueError(
            f"--scan expects name=start:stop:steps, got {text!r}")
    start, stop = parse_quantity(parts[0]), parse_quantity(parts[1])
    steps = int(parts[2])
    if steps < 2:
        raise ValueError("scan steps must be >= 2")
    return name, start, stop, steps


def _setup_threads() -> None:
    n = os.environ.get("IONSIM_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ[var] = n


def _load_noise_dict(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    # validate keys/shape early so errors name the file
    from .noise import noise_from_json
    noise_from_json(json.dumps(data))
    return data


def _canonical_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ------------------------------------------------------------------ run


def _run_core(program_text: str, *, shots: int, seed: int, backend: str,
              noise: dict, scan, out_dir: str, stem: str) -> list:
    """Shared by `run` and `replay`: execute, aggregate, write files."""
    from . import dsl
    from . import experiments as X
    from .program import run_ensemble

    spec = X._noise_spec(noise)
    if scan:
        name, start, stop, steps = scan
        points = [float(v) for v in X.scan_grid(start, stop, steps)]
    else:
        points = [None]

    rows = []
    for v in points:
        names = {scan[0]: v} if v is not None else None
        prog = dsl.parse(program_text, names=names)
        ens = run_ensemble(prog, shots, seed=seed, noise=spec,
                           backend=backend, keep_records=False)
        for bits in sorted(ens.counts):
            p = ens.counts[bits] / shots
            se = math.sqrt(max(p * (1.0 - p), 0.0) / shots)
            rows.append(("" if v is None else v, bits, p, se))

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {RUN_SCHEMA}\n")
        fh.write("scan_value,bitstring,probability,stderr\n")
        for v, bits, p, se in rows:
            cell = "" if v == "" else repr(float(v))
            fh.write(f"{cell},{bits},{p!r},{se!r}\n")

    config = {
        "command": "run",
        "schema": RUN_SCHEMA,
        "program_sha256": hashlib.sha256(
            program_text.encode("utf-8")).hexdigest(),
        "shots": shots,
        "seed": seed,
        "backend": backend,
        "noise": noise,
        "scan": (None if not scan else
                 {"param": scan[0], "start": scan[1], "stop": scan[2],
                  "steps": scan[3]}),
    }
    meta = dict(config)
    meta["content_hash"] = _canonical_hash(config)
    meta["program_text"] = program_text
    json_path = os.path.join(out_dir, f"{stem}_summary.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return [csv_path, json_path]


def cmd_run(ns) -> int:
    with open(ns.program, "rb") as fh:
        program_text = fh.read().decode("utf-8", errors="replace")
    stem = os.path.splitext(os.path.basename(ns.program))[0]
    paths = _run_core(
        program_text, shots=ns.shots, seed=ns.seed, backend=ns.backend,
        noise=_load_noise_dict(ns.noise),
        scan=parse_scan(ns.scan) if ns.scan else None,
        out_dir=ns.out, stem=stem)
    for p in paths:
        print(p)
    return 0


# ------------------------------------------------------------------ exp


def cmd_exp(ns) -> int:
    from . import experiments as X

    params = {}
    if ns.n is not None:
        params["n"] = ns.n
    if ns.shots is not None:
        params["shots"] = ns.shots
    if ns.seed is not None:
        params["seed"] = ns.seed
    if ns.noise is not None:
        params["noise"] = _load_noise_dict(ns.noise)
    if ns.scan is not None:
        name, start, stop, steps = parse_scan(ns.scan)
        params[f"{name}_start"] = start
        params[f"{name}_stop"] = stop
        params[f"{name}_steps"] = steps
    params.update(parse_set(ns.set))
    result = X.run_experiment(ns.name, **params)
    for p in X.write_result(result, ns.out):
        print(p)
    return 0


def cmd_replay(ns) -> int:
    with open(ns.summary, encoding="utf-8") as fh:
        meta = json.load(fh)
    if "experiment" in meta:
        from . import experiments as X
        result = X.replay(ns.summary)
        for p in X.write_result(result, ns.out):
            print(p)
        return 0
    if meta.get("command") == "run":
        config = {k: meta.get(k) for k in
                  ("command", "schema", "program_sha256", "shots", "seed",
                   "backend", "noise", "scan")}
        if _canonical_hash(config) != meta.get("content_hash"):
            raise ValueError("summary metadata does not match its "
                             "content hash (edited file?)")
        scan = meta["scan"]
        paths = _run_core(
            meta["program_text"], shots=meta["shots"], seed=meta["seed"],
            backend=meta["backend"], noise=meta["noise"],
            scan=(None if scan is None else
                  (scan["param"], scan["start"], scan["stop"],
                   scan["steps"])),
            out_dir=ns.out, stem="replay")
        for p in paths:
            print(p)
        return 0
    raise ValueError(f"{ns.summary}: not an ionsim summary file")


def cmd_list(_ns) -> int:
    from . import experiments as X

    for name in X.experiment_names():
        defaults = X.experiment_params(name)
        shown = ", ".join(
            f"{k}={v}" for k, v in defaults.items()
            if isinstance(v, (int, float, str, bool)) and k != "species")
        print(f"{name:14s} {shown}")
    return 0


# ----------------------------------------------------------- dispatcher


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ionsim",
        description="Pulse-level trapped-ion simulator: run .iqp pulse "
                    "programs or named experiments, emitting CSV + JSON.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a .iqp pulse program")
    run.add_argument("program", help="path to the .iqp file")
    run.add_argument("--shots", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--noise", help="noise parameters JSON file")
    run.add_argument("--backend", choices=("rwa", "numeric"), default="rwa")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--scan", help="name=start:stop:steps parameter scan")
    run.set_defaults(fn=cmd_run)

    exp = sub.add_parser("exp", help="run a named experiment")
    exp.add_argument("name", help="experiment name (see `ionsim list`)")
    exp.add_argument("--n", type=int, help="register size where applicable")
    exp.add_argument("--shots", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--noise", help="noise parameters JSON file")
    exp.add_argument("--scan", help="param=start:stop:steps grid override")
    exp.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="extra experiment parameter (repeatable); "
                          "values accept SI suffixes")
    exp.add_argument("--out", default=".", help="output directory")
    exp.set_defaults(fn=cmd_exp)

    rep = sub.add_parser("replay", help="re-run from a summary JSON")
    rep.add_argument("summary", help="path to a *_summary.json file")
    rep.add_argument("--out", default=".", help="output directory")
    rep.set_defaults(fn=cmd_replay)

    lst = sub.add_parser("list", help="list experiments and defaults")
    lst.set_defaults(fn=cmd_list)
    return ap


def main(argv=None) -> int:
    _setup_threads()
    ns = build_parser().parse_args(argv)
    try:
        return ns.fn(ns)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # uniform exit-2 diagnostics
        from .dsl import DslError
        from .program import ProgramError
        known = (DslError, ProgramError, ValueError, KeyError, OSError,
                 json.JSONDecodeError)
        if isinstance(exc, known):
            print(f"ionsim: error: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
