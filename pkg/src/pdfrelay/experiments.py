"""Seeded Monte-Carlo harness over line-network channels with CSV output.

Every CSV starts with a ``#`` comment line carrying the SHA-256 of the
configuration, followed by a header row. Floats are written with 12
significant digits. Rows are emitted in instance order, so the files are
byte-identical for identical configurations regardless of ``jobs``.
Wall-clock times go to a separate ``timing*.csv`` that is not part of that
guarantee.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .csb import cut_set_bound
from .driver import GAP_REACHED, NUMERICAL_FAILURE, algorithm1, algorithm2
from .errors import InvalidConfigError, PdfRelayError
from .model import LineNetworkConfig, line_network_sample

__all__ = [
    "ExperimentConfig",
    "config_hash",
    "run_sweep",
    "run_gap_histogram",
    "solve_instance",
    "OUTPUT_ENV",
    "INSTANCE_COLUMNS",
    "AGGREGATE_COLUMNS",
    "HISTOGRAM_COLUMNS",
]

OUTPUT_ENV = "PDFRELAY_OUT"
MODES = ("sweep-d", "monte-carlo", "single")
ALGORITHMS = ("alg1", "alg2", "both")

INSTANCE_COLUMNS = (
    "d", "seed", "rate_alg1", "rate_alg2", "csb", "delta_alg1", "delta_alg2",
    "iterations_alg1", "iterations_alg2", "termination_alg1", "termination_alg2", "failed",
)
AGGREGATE_COLUMNS = (
    "d", "instances", "failed", "mean_rate_alg1", "mean_rate_alg2", "mean_csb", "mean_csb_minus_pdf",
)
HISTOGRAM_COLUMNS = (
    "seed", "rate_alg1", "rate_alg2", "abs_diff", "delta_alg2", "termination_alg1", "termination_alg2", "failed",
)
TIMING_COLUMNS = ("d", "seed", "wall_ms")


def default_output_dir():
    return os.environ.get(OUTPUT_ENV, "pdfrelay-out")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "sweep-d"
    d_values: tuple = (0.8,)
    realizations: int = 200
    n_s: int = 2
    n_r: int = 2
    n_d: int = 2
    gamma: float = 4.0
    P_S: float = 100.0
    P_R: float = 10.0
    algorithm: str = "both"
    eps: float | None = None
    eps_prime: float | None = None
    eps_cp: float = 1e-3
    max_iter: int = 200
    base_seed: int = 0
    output_dir: str = field(default_factory=default_output_dir)
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "d_values", tuple(float(d) for d in self.d_values))
        if self.mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.realizations < 1:
            raise InvalidConfigError("realizations must be >= 1")
        if not self.d_values:
            raise InvalidConfigError("at least one d value is required")
        for d in self.d_values:
            if not 0.0 < d < 1.0:
                raise InvalidConfigError(f"every d must lie in (0, 1), got {d}")
        if not (self.P_S > 0 and self.P_R > 0):
            raise InvalidConfigError("P_S and P_R must be positive")
        if self.eps_cp <= 0:
            raise InvalidConfigError("eps_cp must be positive")
        if self.jobs < 1:
            raise InvalidConfigError("jobs must be >= 1")

    def line(self, d, seed):
        return LineNetworkConfig(d=d, gamma=self.gamma, n_s=self.n_s, n_r=self.n_r, n_d=self.n_d, seed=seed)

    def resolved_eps(self):
        """``(eps, eps_prime)`` with the defaults ``1e-5 * P_S`` filled in."""
        dflt = 1e-5 * self.P_S
        return (dflt if self.eps is None else self.eps, dflt if self.eps_prime is None else self.eps_prime)


def config_hash(cfg: ExperimentConfig):
    """SHA-256 over every field that influences results (not ``output_dir`` or ``jobs``)."""
    doc = asdict(cfg)
    doc.pop("output_dir")
    doc.pop("jobs")
    doc["eps"], doc["eps_prime"] = cfg.resolved_eps()
    doc["d_values"] = list(cfg.d_values)
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _csv_text(cfg, columns, rows):
    buf = io.StringIO()
    buf.write(f"# config-sha256: {config_hash(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _prepare_output(cfg, names):
    """Create the output directory and check every target is writable before solving."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / n for n in names]
    for p in paths:
        with open(p, "a"):
            pass
    return paths


def solve_instance(cfg: ExperimentConfig, d, seed, with_csb=True, algorithm=None):
    """Solve one sampled channel; never raises for solver failures (they set ``failed``)."""
    algorithm = algorithm or cfg.algorithm
    eps, eps_prime = cfg.resolved_eps()
    t0 = time.perf_counter()
    row = {"d": d, "seed": seed, "failed": False}
    ch = line_network_sample(cfg.line(d, seed), cfg.P_S, cfg.P_R)
    runs = {"alg1": (algorithm1, eps), "alg2": (algorithm2, eps_prime)}
    for name, (fn, e) in runs.items():
        if algorithm not in (name, "both"):
            continue
        try:
            rep = fn(ch, e, cfg.eps_cp, cfg.max_iter)
        except PdfRelayError as exc:
            row["failed"] = True
            row[f"termination_{name}"] = f"error:{type(exc).__name__}"
            continue
        row[f"rate_{name}"] = rep.rate
        row[f"delta_{name}"] = rep.delta
        row[f"iterations_{name}"] = rep.iterations
        row[f"termination_{name}"] = rep.termination
        if rep.termination == NUMERICAL_FAILURE:
            row["failed"] = True
    if with_csb:
        try:
            cs = cut_set_bound(ch, cfg.eps_cp, cfg.max_iter)
        except PdfRelayError:
            row["failed"] = True
        else:
            row["csb"] = cs.value
            if cs.termination != GAP_REACHED:
                row["failed"] = True
    row["wall_ms"] = 1000.0 * (time.perf_counter() - t0)
    return row


def _task(args):
    return solve_instance(*args)


def _map(cfg, tasks):
    if cfg.jobs == 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(_task, tasks, chunksize=1))


def _mean(rows, key):
    vals = [r[key] for r in rows if r.get(key) is not None]
    return float(np.mean(vals)) if vals else None


def _pdf_rate(row):
    return row.get("rate_alg2", row.get("rate_alg1"))


def aggregate(rows, d_values):
    """Per-``d`` means over the rows where each value is present."""
    out = []
    for d in d_values:
        sub = [r for r in rows if r["d"] == d]
        gaps = [r["csb"] - _pdf_rate(r) for r in sub if r.get("csb") is not None and _pdf_rate(r) is not None]
        out.append({
            "d": d,
            "instances": len(sub),
            "failed": sum(bool(r["failed"]) for r in sub),
            "mean_rate_alg1": _mean(sub, "rate_alg1"),
            "mean_rate_alg2": _mean(sub, "rate_alg2"),
            "mean_csb": _mean(sub, "csb"),
            "mean_csb_minus_pdf": float(np.mean(gaps)) if gaps else None,
        })
    return out


def run_sweep(cfg: ExperimentConfig):
    """Solve ``realizations`` channels per ``d``; seeds are ``base_seed + i`` for every ``d``.

    Writes ``instances.csv``, ``aggregate.csv`` and ``timing.csv`` into
    ``cfg.output_dir`` and returns ``(rows, aggregate_rows)``.
    """
    inst_p, agg_p, time_p = _prepare_output(cfg, ("instances.csv", "aggregate.csv", "timing.csv"))
    tasks = [(cfg, d, cfg.base_seed + i, True) for d in cfg.d_values for i in range(cfg.realizations)]
    rows = _map(cfg, tasks)
    agg = aggregate(rows, cfg.d_values)
    inst_p.write_text(_csv_text(cfg, INSTANCE_COLUMNS, rows))
    agg_p.write_text(_csv_text(cfg, AGGREGATE_COLUMNS, agg))
    time_p.write_text(_csv_text(cfg, TIMING_COLUMNS, rows))
    return rows, agg


def run_gap_histogram(cfg: ExperimentConfig):
    """Both algorithms on ``realizations`` channels at ``d_values[0]``.

    Writes ``gap_histogram.csv`` (and ``timing_gap_histogram.csv``) and
    returns the rows.
    """
    if cfg.mode != "monte-carlo":
        raise InvalidConfigError("run_gap_histogram requires mode 'monte-carlo'")
    hist_p, time_p = _prepare_output(cfg, ("gap_histogram.csv", "timing_gap_histogram.csv"))
    d = cfg.d_values[0]
    tasks = [(cfg, d, cfg.base_seed + i, False, "both") for i in range(cfg.realizations)]
    rows = _map(cfg, tasks)
    for r in rows:
        if r.get("rate_alg1") is not None and r.get("rate_alg2") is not None:
            r["abs_diff"] = abs(r["rate_alg1"] - r["rate_alg2"])
    hist_p.write_text(_csv_text(cfg, HISTOGRAM_COLUMNS, rows))
    time_p.write_text(_csv_text(cfg, TIMING_COLUMNS, rows))
    return rows


def with_output(cfg: ExperimentConfig, output_dir):
    return replace(cfg, output_dir=str(output_dir))
