"""Iteration-count experiments over the bundled dynamics."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import fixedpoint as fp
from .jacobian import Analytic, HutchinsonDiagonal
from .models import (
    gru_dynamics,
    langevin_dynamics,
    random_gru,
    random_langevin,
    random_orthogonal_lds,
    random_word,
    s5_dynamics,
)
from .pscan import default_workers
from .seeding import mix, rng

EXPERIMENTS = ("s5", "gru", "langevin", "custom-lds")
METHODS = ("newton", "quasi-newton", "picard", "jacobi", "scale-elk", "clip-elk", "sequential")
DEFAULT_DIMS = {"s5": [5], "gru": [16], "langevin": [8], "custom-lds": [4]}
FIELDS = ("experiment", "method", "T", "D", "seed", "batch_index",
          "iterations", "converged", "final_merit", "wall_nanos")


@dataclass
class ExperimentConfig:
    experiment: str
    methods: list = field(default_factory=lambda: list(METHODS))
    seq_lens: list = field(default_factory=lambda: [64])
    dims: Optional[list] = None
    seeds: int = 10
    batch: int = 16
    tolerance: float = 5e-4
    epsilon: float = 1e-5
    mixture_k: int = 2
    output: Optional[str] = None
    format: str = "csv"
    evaluation: str = "scan"
    root_seed: int = 0
    elk_k: float = 0.5
    diagonal: str = "hutchinson"   # hutchinson | exact
    probes: int = 4

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}")
        if self.dims is None:
            self.dims = list(DEFAULT_DIMS[self.experiment])
        for name in ("seeds", "batch", "mixture_k", "probes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.seq_lens or min(self.seq_lens) < 1 or not self.dims or min(self.dims) < 1:
            raise ValueError("sequence lengths and dimensions must be positive")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.format not in ("csv", "jsonl"):
            raise ValueError("format must be csv or jsonl")
        if self.evaluation not in ("scan", "sequential"):
            raise ValueError("evaluation must be scan or sequential")
        if self.diagonal not in ("hutchinson", "exact"):
            raise ValueError("diagonal must be hutchinson or exact")
        if not 0 <= self.elk_k <= 1:
            raise ValueError("elk_k must lie in [0, 1]")


@dataclass
class ResultRow:
    experiment: str
    method: str
    T: int
    D: int
    seed: int
    batch_index: int
    iterations: int
    converged: bool
    final_merit: float
    wall_nanos: int


def problem_seed(cfg: ExperimentConfig, T, D, seed, batch_index) -> int:
    """Seed of the problem instance; shared by all methods so they solve the same thing."""
    return mix(cfg.root_seed, cfg.experiment, T, D, seed, batch_index)


def make_problem(cfg: ExperimentConfig, T, D, seed, batch_index):
    g = rng(problem_seed(cfg, T, D, seed, batch_index))
    if cfg.experiment == "s5":
        problem = random_word(g, T, D)
        return s5_dynamics(problem), problem.x0
    if cfg.experiment == "gru":
        return gru_dynamics(random_gru(g, D, T)), np.zeros(D)
    if cfg.experiment == "langevin":
        spec = random_langevin(g, D, T, cfg.mixture_k, cfg.epsilon)
        return langevin_dynamics(spec), spec.x0
    f = random_orthogonal_lds(g, D, T)
    return f, g.standard_normal(D)


def method_setup(cfg: ExperimentConfig, method, solver_seed):
    if cfg.diagonal == "hutchinson":
        diag = HutchinsonDiagonal(cfg.probes, solver_seed)
    else:
        diag = Analytic()
    config = fp.SolverConfig(tolerance=cfg.tolerance, evaluation=cfg.evaluation,
                             jacobian_mode=Analytic(), diagonal_mode=diag)
    return fp.scheme_from_name(method, k=cfg.elk_k), config


def run_one(cfg: ExperimentConfig, method, T, D, seed, batch_index) -> ResultRow:
    f, x0 = make_problem(cfg, T, D, seed, batch_index)
    start = time.perf_counter_ns()
    if method == "sequential":
        report = fp.sequential_report(f, x0)
        converged, iterations, merit = True, report.iterations, report.final_merit
    else:
        scheme, config = method_setup(cfg, method, mix(problem_seed(cfg, T, D, seed, batch_index), method))
        try:
            report = fp.solve(f, x0, config, scheme)
            converged, iterations, merit = report.converged, report.iterations, report.final_merit
        except fp.DivergenceError as exc:
            converged, iterations, merit = False, exc.report.iterations, float("nan")
    wall = time.perf_counter_ns() - start
    return ResultRow(cfg.experiment, method, T, D, seed, batch_index, iterations, converged, merit, wall)


def cells(cfg: ExperimentConfig):
    for method in cfg.methods:
        for T in cfg.seq_lens:
            for D in cfg.dims:
                for seed in range(cfg.seeds):
                    for b in range(cfg.batch):
                        yield method, T, D, seed, b


def run_rows(cfg: ExperimentConfig, workers: Optional[int] = None) -> list:
    jobs = list(cells(cfg))
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: run_one(cfg, *job), jobs))
    else:
        rows = [run_one(cfg, *job) for job in jobs]
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (order[r.method], r.T, r.D, r.seed, r.batch_index))
    return rows


def expected(row: ResultRow) -> bool:
    return row.converged or (row.method == "jacobi" and row.iterations == row.T)


def format_rows(rows, fmt="csv") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in rows:
            d = asdict(r)
            d["converged"] = str(r.converged).lower()
            d["final_merit"] = repr(float(r.final_merit))
            w.writerow([d[k] for k in FIELDS])
    else:
        for r in rows:
            d = {k: getattr(r, k) for k in FIELDS}
            if not np.isfinite(d["final_merit"]):
                d["final_merit"] = None
            buf.write(json.dumps(d) + "\n")
    return buf.getvalue()


def summarize(rows) -> list:
    """Median iterations per (method, T, D) over seeds and batch members."""
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.T, r.D), []).append(r)
    out = []
    for (method, T, D), rs in groups.items():
        its = [r.iterations for r in rs]
        out.append({
            "method": method, "T": T, "D": D,
            "median_iterations": float(np.median(its)),
            "max_iterations": max(its),
            "converged": sum(r.converged for r in rs),
            "runs": len(rs),
            "median_wall_ms": float(np.median([r.wall_nanos for r in rs])) / 1e6,
        })
    return out


def summary_table(summary) -> str:
    head = f"{'method':<13}{'T':>6}{'D':>5}{'median it':>11}{'max it':>8}{'conv':>10}{'wall ms':>10}"
    lines = [head, "-" * len(head)]
    for s in summary:
        lines.append(
            f"{s['method']:<13}{s['T']:>6}{s['D']:>5}{s['median_iterations']:>11.1f}{s['max_iterations']:>8}"
            f"{s['converged']:>5}/{s['runs']:<4}{s['median_wall_ms']:>10.2f}")
    return "\n".join(lines)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None):
    """Run every cell, write the result file, and return ``(rows, summary, ok)``."""
    rows = run_rows(cfg, workers)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(format_rows(rows, cfg.format))
    return rows, summarize(rows), all(expected(r) for r in rows)
