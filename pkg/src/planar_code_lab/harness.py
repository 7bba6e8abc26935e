"""Experiment driver: configs, seeded parallel sweeps, statistics and output.

Reproducibility comes from a static partition of every point into blocks of
``block_size`` trials.  Block ``b`` of point ``i`` draws from
``PCG64(SeedSequence(seed, spawn_key=(i, b)))`` no matter which worker runs
it, and blocks are reduced by summing counts, so the table does not depend
on the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .decoder import batch_failures_2d, batch_failures_3d, kernel_tables
from .geometry import build_planar
from .noise import Depolarizing, IndependentXZ, Phenomenological, sample_bits, sample_measurement_flips
from . import thermal

EXPERIMENTS = ("threshold", "decode", "braid-demo", "lifetime")
NOISE_KINDS = ("independent_xz", "depolarizing", "phenomenological")
WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile

THRESHOLD_COLUMNS = (
    "d", "noise", "p", "p_prime", "q", "rounds", "trials", "failures", "rate", "wilson_low", "wilson_high",
)
LIFETIME_COLUMNS = (
    "system", "L", "beta", "trials", "failed", "censored", "median_time", "mean_time", "horizon",
)
TRIAL_COLUMNS = ("system", "L", "beta", "trial", "time", "failed")
BRAID_COLUMNS = ("control", "target", "seed", "passed", "ZI", "XI", "IZ", "IX", "ZZ", "XX")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending line when it can."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# statistics -------------------------------------------------------------------


def wilson_interval(failures: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    phat = failures / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the exact endpoints at k = 0 and k = n are 0 and 1; rounding can miss them
    low = 0.0 if failures == 0 else max(0.0, centre - half)
    high = 1.0 if failures == trials else min(1.0, centre + half)
    return low, high


class NoCrossingError(ValueError):
    pass


def estimate_crossing(table: "ResultTable", x: str = "p") -> dict:
    """Threshold estimate from pairwise crossings of failure-rate curves.

    For each pair of adjacent distances the difference of the two curves is
    linearly interpolated between the sampled points where it changes sign
    from negative (larger code better) to non-negative.  Returns the median
    crossing, half the spread of the pairwise values, and the values
    themselves.
    """
    curves: dict[int, dict[float, float]] = {}
    for row in table.rows:
        curves.setdefault(int(row["d"]), {})[float(row[x])] = float(row["rate"])
    distances = sorted(curves)
    if len(distances) < 2:
        raise NoCrossingError("need at least two distances")
    crossings = []
    for small, large in zip(distances, distances[1:]):
        grid = sorted(set(curves[small]) & set(curves[large]))
        if len(grid) < 3:
            raise NoCrossingError(f"need at least three shared points for d={small},{large}")
        diff = [curves[large][p] - curves[small][p] for p in grid]
        found = None
        for k in range(len(grid) - 1):
            if diff[k] < 0 <= diff[k + 1]:
                frac = -diff[k] / (diff[k + 1] - diff[k])
                found = grid[k] + frac * (grid[k + 1] - grid[k])
                break
        if found is None:
            raise NoCrossingError(f"curves for d={small} and d={large} do not cross in the sampled range")
        crossings.append(found)
    spread = (max(crossings) - min(crossings)) / 2
    return {"p_c": statistics.median(crossings), "spread": spread, "pairwise": crossings}


# result table -------------------------------------------------------------------


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    wall_time: dict = field(default_factory=dict)  # per-row seconds, kept out of emitted files

    def validate(self) -> None:
        for row in self.rows:
            if "failures" in row:
                if not 0 <= row["failures"] <= row["trials"]:
                    raise ValueError(f"failures out of range in {row}")
                if not row["wilson_low"] <= row["rate"] <= row["wilson_high"]:
                    raise ValueError(f"rate outside its interval in {row}")

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def select(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def to_json(self) -> str:
        doc = {"columns": list(self.columns), "metadata": self.metadata, "rows": self.rows}
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        doc = json.loads(text)
        return cls(tuple(doc["columns"]), doc["rows"], doc["metadata"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(self.columns), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in self.columns})
        return buf.getvalue()


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def emit(table: ResultTable, fmt: str = "csv", path: Optional[str] = None) -> str:
    """Serialize ``table`` (wall times excluded) and optionally write it to ``path``."""
    if fmt == "csv":
        text = table.to_csv()
    elif fmt == "json":
        text = table.to_json()
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


# configuration ------------------------------------------------------------------


def _line_of(text: Optional[str], key: str) -> str:
    if not text:
        return ""
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return ""
    return f" (line {text.count(chr(10), 0, m.start()) + 1})"


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    workers: int = 1
    trials: int = 1
    block_size: int = 1000
    distances: list[int] = field(default_factory=list)
    noise: dict = field(default_factory=dict)
    system: str = ""
    sizes: list[int] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    couplings: dict = field(default_factory=dict)
    horizon: float = 2.0**20
    checkpoints_per_octave: int = 4
    output: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def identity(self) -> dict:
        """Fields that determine the results (worker count and output excluded)."""
        doc = {
            "experiment": self.experiment, "seed": self.seed, "trials": self.trials,
            "block_size": self.block_size,
        }
        if self.experiment == "threshold":
            doc.update(distances=self.distances, noise=self.noise)
        elif self.experiment == "lifetime":
            doc.update(
                system=self.system, sizes=self.sizes, betas=self.betas, couplings=self.couplings,
                horizon=self.horizon, checkpoints_per_octave=self.checkpoints_per_octave,
            )
        else:
            doc.update(extra=self.extra, distances=self.distances)
        return doc

    def config_hash(self) -> str:
        canon = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _need(cond: bool, message: str, text: Optional[str], key: str) -> None:
    if not cond:
        raise ConfigError(message + _line_of(text, key))


def _positive_ints(value, name, text):
    _need(isinstance(value, list) and len(value) > 0, f"{name} must be a nonempty list", text, name)
    for v in value:
        _need(isinstance(v, int) and not isinstance(v, bool) and v >= 2, f"{name} entries must be integers >= 2", text, name)
    return list(value)


def parse_config(source: Any, text: Optional[str] = None) -> ExperimentConfig:
    """Validate a config given as a dict or JSON text."""
    if isinstance(source, str):
        text = source
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _need(isinstance(source, dict), "config must be a JSON object", None, "")
    doc = dict(source)
    kind = doc.pop("experiment", None)
    _need(kind in EXPERIMENTS, f"experiment must be one of {', '.join(EXPERIMENTS)}", text, "experiment")
    cfg = ExperimentConfig(kind)
    for name in ("seed", "workers", "trials", "block_size"):
        if name in doc:
            v = doc.pop(name)
            low = 0 if name == "seed" else 1
            _need(isinstance(v, int) and not isinstance(v, bool) and v >= low, f"{name} must be an integer >= {low}", text, name)
            setattr(cfg, name, v)
    if "output" in doc:
        out = doc.pop("output")
        _need(isinstance(out, dict), "output must be an object", text, "output")
        _need(out.get("format", "csv") in ("csv", "json"), "output.format must be csv or json", text, "format")
        cfg.output = out
    if kind == "threshold":
        cfg.distances = _positive_ints(doc.pop("distances", None), "distances", text)
        noise = doc.pop("noise", None)
        _need(isinstance(noise, dict), "noise must be an object", text, "noise")
        _need(noise.get("kind") in NOISE_KINDS, f"noise.kind must be one of {', '.join(NOISE_KINDS)}", text, "kind")
        grid = noise.get("p")
        _need(isinstance(grid, list) and len(grid) > 0, "noise.p must be a nonempty list", text, "p")
        for p in grid:
            _need(isinstance(p, (int, float)) and 0 <= p <= 1, "noise.p entries must be probabilities", text, "p")
        allowed = {"kind", "p", "p_prime", "q", "rounds"}
        unknown = set(noise) - allowed
        _need(not unknown, f"unknown noise fields {sorted(unknown)}", text, sorted(unknown)[0] if unknown else "")
        if noise.get("rounds") is not None:
            _need(isinstance(noise["rounds"], int) and noise["rounds"] >= 1, "noise.rounds must be a positive integer", text, "rounds")
        cfg.noise = dict(noise)
    elif kind == "lifetime":
        system = doc.pop("system", None)
        _need(system in (thermal.ISING_1D, thermal.ISING_2D, thermal.TORIC), "system must be ising_1d, ising_2d or toric_code", text, "system")
        cfg.system = system
        cfg.sizes = _positive_ints(doc.pop("sizes", None), "sizes", text)
        betas = doc.pop("betas", None)
        _need(isinstance(betas, list) and len(betas) > 0, "betas must be a nonempty list", text, "betas")
        for b in betas:
            _need(isinstance(b, (int, float)) and b > 0, "betas must be positive", text, "betas")
        cfg.betas = [float(b) for b in betas]
        couplings = doc.pop("couplings", {})
        _need(isinstance(couplings, dict), "couplings must be an object", text, "couplings")
        cfg.couplings = couplings
        if "horizon" in doc:
            h = doc.pop("horizon")
            _need(isinstance(h, (int, float)) and h > 0, "horizon must be positive", text, "horizon")
            cfg.horizon = float(h)
        if "checkpoints_per_octave" in doc:
            k = doc.pop("checkpoints_per_octave")
            _need(isinstance(k, int) and k >= 1, "checkpoints_per_octave must be a positive integer", text, "checkpoints_per_octave")
            cfg.checkpoints_per_octave = k
    else:
        if "distances" in doc:
            cfg.distances = _positive_ints(doc.pop("distances"), "distances", text)
        cfg.extra = {k: doc.pop(k) for k in list(doc)}
    _need(not doc, f"unknown config fields {sorted(doc)}", text, sorted(doc)[0] if doc else "")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


# work distribution ----------------------------------------------------------------


def block_rng(seed: int, point: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(point, block))))


def _blocks(trials: int, block_size: int) -> list[int]:
    full, rest = divmod(trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _run_tasks(fn: Callable, tasks: Sequence[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


# threshold sweeps -----------------------------------------------------------------


def _noise_model(noise: dict, p: float, d: int):
    kind = noise["kind"]
    if kind == "independent_xz":
        return IndependentXZ(p, noise.get("p_prime", 0.0))
    if kind == "depolarizing":
        return Depolarizing(p)
    rounds = noise.get("rounds") or d
    q = noise.get("q")
    return Phenomenological(p, p if q is None else q, rounds)


@lru_cache(maxsize=16)
def _layout(d: int):
    return build_planar(d)


def threshold_block(d: int, noise: dict, p: float, trials: int, seed: int, point: int, block: int) -> int:
    """Logical failures in one block; a trial fails if either logical is flipped."""
    rng = block_rng(seed, point, block)
    layout = _layout(d)
    model = _noise_model(noise, p, d)
    n = layout.n_qubits
    x, z = sample_bits(model, n, trials, rng)
    failed = np.zeros(trials, dtype=bool)
    if isinstance(model, Phenomenological):
        mf, ef = sample_measurement_flips(model, len(layout.plaquettes), len(layout.vertices), trials, rng)
        for species, inc, flips in (("m", x, mf), ("e", z, ef)):
            if not inc.any() and not flips.any():
                continue
            f, _ = batch_failures_3d(inc, flips, *kernel_tables(layout, species), d)
            failed |= f.astype(bool)
    else:
        for species, err in (("m", x), ("e", z)):
            if not err.any():
                continue
            f, _ = batch_failures_2d(err, *kernel_tables(layout, species), d)
            failed |= f.astype(bool)
    return int(failed.sum())


def _threshold_points(cfg: ExperimentConfig) -> list[tuple[int, float]]:
    return [(d, float(p)) for d in cfg.distances for p in cfg.noise["p"]]


def run_threshold_sweep(cfg: ExperimentConfig, progress: bool = False) -> ResultTable:
    if cfg.experiment != "threshold":
        raise ConfigError("not a threshold config")
    points = _threshold_points(cfg)
    sizes = _blocks(cfg.trials, cfg.block_size)
    tasks = [
        (d, cfg.noise, p, size, cfg.seed, i, b)
        for i, (d, p) in enumerate(points)
        for b, size in enumerate(sizes)
    ]
    start = time.perf_counter()
    counts = _run_tasks(threshold_block, tasks, cfg.workers)
    elapsed = time.perf_counter() - start
    table = ResultTable(THRESHOLD_COLUMNS, metadata=_metadata(cfg))
    per_point = len(sizes)
    for i, (d, p) in enumerate(points):
        failures = sum(counts[i * per_point : (i + 1) * per_point])
        low, high = wilson_interval(failures, cfg.trials)
        model = _noise_model(cfg.noise, p, d)
        table.rows.append({
            "d": d, "noise": cfg.noise["kind"], "p": p,
            "p_prime": getattr(model, "p_prime", None),
            "q": getattr(model, "q", None),
            "rounds": getattr(model, "rounds", None),
            "trials": cfg.trials, "failures": failures, "rate": failures / cfg.trials,
            "wilson_low": low, "wilson_high": high,
        })
        if progress:
            _progress(f"d={d} p={p:g}: {failures}/{cfg.trials}")
    table.wall_time["total"] = elapsed
    table.validate()
    return table


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment, "seed": cfg.seed, "code_version": _version(),
        "config_hash": cfg.config_hash(),
    }


# lifetime sweeps -------------------------------------------------------------------


def trial_seed(seed: int, point: int, trial: int) -> int:
    """32-bit seed for the compiled dynamics of one trial."""
    return int(np.random.SeedSequence(seed, spawn_key=(point, trial)).generate_state(1)[0])


def lifetime_block(system: str, size: int, couplings: dict, beta: float, horizon: float, per_octave: int,
                   seed: int, point: int, first: int, count: int) -> list[tuple[float, bool]]:
    model = thermal.system_from_spec(system, size, **couplings)
    out = []
    for trial in range(first, first + count):
        res = thermal.lifetime_trial(model, beta, trial_seed(seed, point, trial), horizon, per_octave)
        out.append((res.time, res.failed))
    return out


def run_lifetime_sweep(cfg: ExperimentConfig, progress: bool = False) -> tuple[ResultTable, ResultTable]:
    """Returns ``(summary, per_trial)`` tables."""
    if cfg.experiment != "lifetime":
        raise ConfigError("not a lifetime config")
    points = [(L, b) for L in cfg.sizes for b in cfg.betas]
    sizes = _blocks(cfg.trials, cfg.block_size)
    tasks = []
    for i, (L, beta) in enumerate(points):
        first = 0
        for count in sizes:
            tasks.append((cfg.system, L, cfg.couplings, beta, cfg.horizon, cfg.checkpoints_per_octave,
                          cfg.seed, i, first, count))
            first += count
    start = time.perf_counter()
    results = _run_tasks(lifetime_block, tasks, cfg.workers)
    elapsed = time.perf_counter() - start
    summary = ResultTable(LIFETIME_COLUMNS, metadata=_metadata(cfg))
    trials = ResultTable(TRIAL_COLUMNS, metadata=_metadata(cfg))
    per_point = len(sizes)
    for i, (L, beta) in enumerate(points):
        runs = [r for chunk in results[i * per_point : (i + 1) * per_point] for r in chunk]
        times = [t for t, _ in runs]
        failed = sum(1 for _, f in runs if f)
        summary.rows.append({
            "system": cfg.system, "L": L, "beta": beta, "trials": len(runs), "failed": failed,
            "censored": len(runs) - failed, "median_time": float(np.median(times)),
            "mean_time": float(np.mean(times)), "horizon": cfg.horizon,
        })
        for k, (t, f) in enumerate(runs):
            trials.rows.append({"system": cfg.system, "L": L, "beta": beta, "trial": k, "time": t, "failed": f})
        if progress:
            _progress(f"{cfg.system} L={L} beta={beta:g}: median {summary.rows[-1]['median_time']:.4g}")
    summary.wall_time["total"] = elapsed
    return summary, trials


# braid demo -------------------------------------------------------------------------


def braid_entry(size: int, control: str, target: str, seed: int) -> dict:
    from .holes import braid_cnot_demo

    res = braid_cnot_demo(size, control, target, rng=seed)
    row = {"control": control, "target": target, "seed": seed, "passed": res["passed"]}
    row.update(res["observed"])
    return row


def run_braid_table(size: int = 9, seed: int = 0, workers: int = 1) -> ResultTable:
    from .holes import STATES

    tasks = []
    for i, c in enumerate(STATES):
        for j, t in enumerate(STATES):
            tasks.append((size, c, t, trial_seed(seed, i, j)))
    rows = _run_tasks(braid_entry, tasks, workers)
    meta = {"experiment": "braid-demo", "seed": seed, "code_version": _version(), "size": size}
    return ResultTable(BRAID_COLUMNS, rows, meta)
