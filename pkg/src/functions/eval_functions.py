"""
Eval functions - error metric, repeated-run benchmark and timing tables

A benchmark job is one (n_max, repeat) pair and runs every requested method
with seed = base_seed + repeat. The active method runs first so the passive
GPR baseline can reuse its frozen hyperparameters. Jobs are independent and
can be fanned out over worker processes; reports are sorted before
aggregation so the summary does not depend on completion order.
"""

import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

import config
from src.core import chain_model, testbench
from src.core.errors import DimensionError, DomainError, ParetoModelError
from src.core.testbench import Problem
from src.functions import learner_functions
from utils.config_utils import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    method: str
    problem: str
    n_max: int
    seed: int
    err: float
    acquisition: float = 0.0
    query_overhead: float = 0.0
    fitting: float = 0.0
    n_generated: int = 0
    status: str = "ok"
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def wall_clock(self) -> Dict[str, float]:
        return {"acquisition": self.acquisition, "query_overhead": self.query_overhead, "fitting": self.fitting}


@dataclass
class BenchmarkSummary:
    problem: str
    rows: List[Dict] = field(default_factory=list)
    reports: List[RunReport] = field(default_factory=list)
    failure_threshold: float = 0.01

    @property
    def failures(self) -> int:
        return sum(1 for r in self.reports if not r.ok)

    @property
    def failure_fraction(self) -> float:
        return self.failures / len(self.reports) if self.reports else 0.0

    @property
    def flagged(self) -> bool:
        return self.failure_fraction > self.failure_threshold

    def row(self, method: str, n_max: int) -> Optional[Dict]:
        for row in self.rows:
            if row["method"] == method and row["n_max"] == n_max:
                return row
        return None


def default_n_pf(p: Problem) -> int:
    return 1000 if p.m == 2 else 8000


def compute_err(p: Problem, generated) -> float:
    """Mean distance of generated points to the true PF."""
    points = np.asarray(generated.values if hasattr(generated, "values") else generated, dtype=float)
    if points.size == 0:
        raise DomainError("cannot compute Err of an empty set")
    points = np.atleast_2d(points)
    if points.shape[1] != p.m:
        raise DimensionError(f"{p.name} has {p.m} metrics, generated points have {points.shape[1]}")
    return float(np.mean(testbench.distances_to_true_pf(p, points)))


def run_single(p: Problem, cfg: TrainConfig, n_pf: int,
               hyper=None) -> Tuple[RunReport, learner_functions.TrainResult]:
    """Train one model, generate n_pf points from it and score them."""
    result = learner_functions.train(p, cfg, hyper=hyper)
    generated = chain_model.generate(result.model, n_pf, seed=cfg.seed, retries=cfg.chain.generation_retries)
    report = RunReport(
        method=cfg.method, problem=p.name, n_max=cfg.n_max, seed=cfg.seed,
        err=compute_err(p, generated), n_generated=int(generated.shape[0]),
        **result.timings.to_dict(),
    )
    return report, result


def _run_job(problem_name: str, methods: Sequence[str], n_max: int, seed: int, n_pf: int,
             template: Dict) -> List[RunReport]:
    p = testbench.get_problem(problem_name)
    ordered = sorted(methods, key=config.METHODS.index)
    shared_hyper = None
    reports = []
    for method in ordered:
        cfg = TrainConfig.model_validate({**template, "method": method, "n_max": n_max, "seed": seed, "n0": None})
        try:
            report, result = run_single(p, cfg, n_pf, hyper=shared_hyper if method == "p_pgpr" else None)
            if method == "p_agpr":
                shared_hyper = result.hyper
        except (ParetoModelError, np.linalg.LinAlgError) as e:
            logger.warning("Run %s n_max=%d seed=%d failed: %s", method, n_max, seed, e)
            report = RunReport(method=method, problem=p.name, n_max=n_max, seed=seed,
                               err=math.nan, status="failed", error=str(e))
        reports.append(report)
    return reports


def _aggregate(reports: List[RunReport]) -> List[Dict]:
    rows = []
    keys = sorted({(r.method, r.n_max) for r in reports}, key=lambda key: (config.METHODS.index(key[0]), key[1]))
    for method, n_max in keys:
        group = [r for r in reports if r.method == method and r.n_max == n_max]
        errs = np.array([r.err for r in group if r.ok])
        rows.append({
            "method": method,
            "problem": group[0].problem,
            "n_max": n_max,
            "mean_err": float(errs.mean()) if errs.size else None,
            "std_err": float(errs.std(ddof=1)) if errs.size > 1 else None,
            "repeats": int(errs.size),
            "failures": len(group) - int(errs.size),
        })
    return rows


def run_benchmark(p: Problem, methods: Sequence[str], n_max_list: Sequence[int], repeats: int,
                  n_pf: Optional[int] = None, base_seed: int = 0,
                  train_template: Optional[TrainConfig] = None, workers: int = 1,
                  failure_threshold: float = 0.01) -> BenchmarkSummary:
    """Repeated runs for every (method, n_max); failed runs are excluded and counted."""
    if repeats < 1:
        raise DomainError(f"repeats must be at least 1, got {repeats}")
    if "p_agpr" in methods and min(n_max_list) < 2:
        raise DomainError("the active method needs n_max >= 2")
    n_pf = n_pf or default_n_pf(p)
    template = (train_template or TrainConfig()).model_dump()
    jobs = [(p.name, list(methods), n_max, base_seed + r, n_pf, template)
            for n_max in n_max_list for r in range(repeats)]
    logger.info("Benchmark %s: %d jobs x %d methods on %d worker(s)", p.name, len(jobs), len(methods), workers)

    reports: List[RunReport] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_job, *zip(*jobs)):
                reports.extend(batch)
    else:
        for i, job in enumerate(jobs, start=1):
            reports.extend(_run_job(*job))
            logger.info("Benchmark %s: job %d/%d done", p.name, i, len(jobs))

    reports.sort(key=lambda r: (config.METHODS.index(r.method), r.n_max, r.seed))
    summary = BenchmarkSummary(problem=p.name, rows=_aggregate(reports), reports=reports,
                               failure_threshold=failure_threshold)
    if summary.failures:
        logger.warning("%d of %d runs failed (%.1f%%)", summary.failures, len(reports),
                       100.0 * summary.failure_fraction)
    return summary


def summary_frame(summary: BenchmarkSummary) -> pd.DataFrame:
    columns = ["method", "problem", "n_max", "mean_err", "std_err", "repeats", "failures"]
    return pd.DataFrame(summary.rows, columns=columns)


def runs_frame(reports: Sequence[RunReport]) -> pd.DataFrame:
    columns = list(RunReport.__dataclass_fields__)
    return pd.DataFrame([asdict(r) for r in reports], columns=columns)


def timing_report(reports: Sequence[RunReport]) -> pd.DataFrame:
    """Per-method wall-clock totals with the active query overhead in its own column."""
    df = runs_frame([r for r in reports if r.ok])
    columns = ["problem", "method", "runs", "acquisition", "query_overhead", "fitting", "total"]
    if df.empty:
        return pd.DataFrame(columns=columns)
    table = (
        df.groupby(["problem", "method"], sort=False)
        .agg(runs=("seed", "size"), acquisition=("acquisition", "sum"),
             query_overhead=("query_overhead", "sum"), fitting=("fitting", "sum"))
        .reset_index()
    )
    table["total"] = table["acquisition"] + table["query_overhead"] + table["fitting"]
    return table[columns]
