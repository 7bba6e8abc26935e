"""Command-line entry point ``planar-code-lab``.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.  Tables
go to ``--output`` (or stdout); progress goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import harness
from .decoder import decode
from .geometry import LayoutError, build_planar, layout_to_dict
from .noise import model_from_dict
from .pauli import Syndrome

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="planar-code-lab", description="Planar-code memory workbench")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def overrides(sp):
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--workers", type=int, help="override the worker count")
        sp.add_argument("--trials", type=int, help="override trials per point")
        sp.add_argument("--output", help="output path (default: config output.path or stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="output format")

    overrides(sub.add_parser("threshold", help="Monte Carlo threshold sweep"))
    lt = sub.add_parser("lifetime", help="thermal memory lifetime sweep")
    overrides(lt)
    lt.add_argument("--trials-output", help="also write per-trial failure times here")

    dc = sub.add_parser("decode", help="decode one syndrome file")
    dc.add_argument("--syndrome", required=True, help="JSON with distance, syndrome and optional noise")

    bd = sub.add_parser("braid-demo", help="hole-braiding CNOT truth table")
    bd.add_argument("--size", type=int, default=9)
    bd.add_argument("--seed", type=int, default=0)
    bd.add_argument("--workers", type=int, default=1)
    bd.add_argument("--log", help="write the hole event log of a |+>,|0> run as JSON lines")
    bd.add_argument("--output")
    bd.add_argument("--format", choices=("csv", "json"), default="csv")

    ds = sub.add_parser("describe", help="print a layout as JSON")
    ds.add_argument("--distance", type=int, required=True)
    return p


def _apply_overrides(cfg: harness.ExperimentConfig, args) -> None:
    """Command-line flags take precedence over config fields."""
    for name in ("seed", "workers", "trials"):
        value = getattr(args, name)
        if value is not None:
            if value < (0 if name == "seed" else 1):
                raise harness.ConfigError(f"--{name} out of range")
            setattr(cfg, name, value)


def _write(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _destination(cfg, args) -> tuple[Optional[str], str]:
    path = args.output or cfg.output.get("path")
    fmt = args.format or cfg.output.get("format", "csv")
    return path, fmt


def _threshold(args) -> int:
    cfg = harness.load_config(args.config)
    if cfg.experiment != "threshold":
        raise harness.ConfigError(f"config is for {cfg.experiment!r}, not threshold")
    _apply_overrides(cfg, args)
    table = harness.run_threshold_sweep(cfg, progress=True)
    path, fmt = _destination(cfg, args)
    _write(harness.emit(table, fmt), path)
    try:
        est = harness.estimate_crossing(table)
        harness._progress(f"crossing estimate p_c = {est['p_c']:.4f} +/- {est['spread']:.4f}")
    except harness.NoCrossingError as exc:
        harness._progress(f"no crossing estimate: {exc}")
    return EXIT_OK


def _lifetime(args) -> int:
    cfg = harness.load_config(args.config)
    if cfg.experiment != "lifetime":
        raise harness.ConfigError(f"config is for {cfg.experiment!r}, not lifetime")
    _apply_overrides(cfg, args)
    summary, trials = harness.run_lifetime_sweep(cfg, progress=True)
    path, fmt = _destination(cfg, args)
    _write(harness.emit(summary, fmt), path)
    if args.trials_output:
        harness.emit(trials, fmt, args.trials_output)
    return EXIT_OK


def _decode(args) -> int:
    try:
        doc = json.loads(Path(args.syndrome).read_text())
    except OSError as exc:
        raise harness.ConfigError(f"cannot read {args.syndrome}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise harness.ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("distance"), int):
        raise harness.ConfigError("syndrome file needs an integer 'distance'")
    layout = build_planar(doc["distance"])
    syndrome = Syndrome.from_dict(doc.get("syndrome", {}))
    model = model_from_dict(doc["noise"]) if "noise" in doc else None
    for species, count in (("m", len(layout.plaquettes)), ("e", len(layout.vertices))):
        sets = [syndrome.defects(species)] + [r[0 if species == "m" else 1] for r in (syndrome.rounds or ())]
        if any(not 0 <= s < count for group in sets for s in group):
            raise harness.ConfigError(f"{species} defect index out of range for distance {layout.distance}")
    correction = decode(syndrome, layout, model)
    out = correction.to_dict()
    out["qubits"] = {str(q): correction.frame.pauli_at(q) for q in range(layout.n_qubits) if correction.frame.pauli_at(q) != "I"}
    sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    return EXIT_OK


def _braid(args) -> int:
    from .holes import braid_cnot_demo

    if args.size < 8:
        raise harness.ConfigError("--size must be at least 8 so the holes fit")
    table = harness.run_braid_table(args.size, args.seed, args.workers)
    _write(harness.emit(table, args.format), args.output)
    if args.log:
        with open(args.log, "w") as fh:
            braid_cnot_demo(args.size, "+", "0", rng=args.seed, log=fh)
    failed = [r for r in table.rows if not r["passed"]]
    for r in failed:
        harness._progress(f"mismatch for control {r['control']} target {r['target']}")
    return EXIT_RUNTIME if failed else EXIT_OK


def _describe(args) -> int:
    if args.distance < 2:
        raise harness.ConfigError("--distance must be at least 2")
    sys.stdout.write(json.dumps(layout_to_dict(build_planar(args.distance)), indent=1) + "\n")
    return EXIT_OK


_COMMANDS = {
    "threshold": _threshold, "lifetime": _lifetime, "decode": _decode,
    "braid-demo": _braid, "describe": _describe,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (harness.ConfigError, LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
