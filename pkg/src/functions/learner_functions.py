"""
Learner functions - training drivers for the three PF modeling methods

    p_agpr  active: N0 initial NBI points per level, then max-variance queries
    p_pgpr  passive GPR: N_max diagonal NBI points per level, no querying
    p_ppr   passive polynomial: same data as p_pgpr, degree-2 least squares levels

Levels are trained strictly in order k = 2..m, each finishing its budget
before the next starts.
"""

import logging
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from src.core import gpr, nbi, poly
from src.core.chain_model import ChainedPfModel, default_eq_tol
from src.core.errors import AcquisitionError, DimensionError, LevelDegenerateError, TrainingError
from src.core.testbench import Problem
from utils.config_utils import QuerySettings, TrainConfig

logger = logging.getLogger(__name__)

# placeholder until the last level is fitted
_PROVISIONAL_EQ_TOL = 1.0


@dataclass
class Timings:
    """Wall-clock split of one training run, in seconds"""

    acquisition: float = 0.0
    query_overhead: float = 0.0
    fitting: float = 0.0

    @contextmanager
    def measure(self, bucket: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            setattr(self, bucket, getattr(self, bucket) + time.perf_counter() - start)

    @property
    def total(self) -> float:
        return self.acquisition + self.query_overhead + self.fitting

    def to_dict(self) -> Dict[str, float]:
        return {"acquisition": self.acquisition, "query_overhead": self.query_overhead, "fitting": self.fitting}


@dataclass(frozen=True, eq=False)
class QueryPoint:
    f_query: np.ndarray
    sigma2: float
    f_around: np.ndarray


@dataclass
class TrainResult:
    """Trained model plus everything needed to audit or reproduce the run"""

    model: ChainedPfModel
    datasets: Dict[int, np.ndarray]
    hyper: Dict[int, gpr.GprHyperParams]
    trace: List[Dict] = field(default_factory=list)
    timings: Timings = field(default_factory=Timings)

    def points_per_level(self) -> Dict[int, int]:
        return {k: int(v.shape[0]) for k, v in self.datasets.items()}

    def trace_frame(self) -> pd.DataFrame:
        m = self.model.m
        columns = ["level", "iter", "branch", "sigma2", "residual"] + [f"f_query{i + 1}" for i in range(m - 1)]
        rows = []
        for record in self.trace:
            row = {key: record[key] for key in ("level", "iter", "branch", "sigma2", "residual")}
            for i, value in enumerate(record["f_query"]):
                row[f"f_query{i + 1}"] = value
            rows.append(row)
        return pd.DataFrame(rows, columns=columns)


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Streams:
    anchors: np.random.SeedSequence
    levels: List[np.random.SeedSequence]
    queries: List[np.random.SeedSequence]
    acquisitions: List[np.random.SeedSequence]


def _streams(seed: int, m: int) -> _Streams:
    anchors, levels, queries, acquisitions = np.random.SeedSequence(seed).spawn(4)
    return _Streams(
        anchors=anchors,
        levels=levels.spawn(m - 1),
        queries=queries.spawn(m - 1),
        acquisitions=acquisitions.spawn(m - 1),
    )


# ---------------------------------------------------------------------------
# Level fitting
# ---------------------------------------------------------------------------

def _fit_level(method: str, data: np.ndarray, hyper: Optional[gpr.GprHyperParams], cfg: TrainConfig):
    inputs, targets = data[:, :-1], data[:, -1]
    if method == "p_ppr":
        return poly.fit_poly(inputs, targets)
    return gpr.fit(
        inputs, targets, hyper,
        jitter_init=cfg.gpr.jitter_init_factor * hyper.theta1,
        jitter_max_factor=cfg.gpr.jitter_max_factor,
    )


def _level_hyper(data: np.ndarray, cfg: TrainConfig) -> gpr.GprHyperParams:
    theta2 = cfg.gpr.theta2 or gpr.median_heuristic_theta2(data[:, :-1])
    return gpr.GprHyperParams(theta1=cfg.gpr.theta1, theta2=theta2)


def _acquire_diagonal(p: Problem, F: nbi.FMatrix, k: int, count: int, cfg: TrainConfig,
                      rng: np.random.Generator) -> np.ndarray:
    """count NBI points along -F_1:k e from uniform simplex weights."""
    settings = cfg.solver.to_core()
    direction = -F.sub(k) @ np.ones(k)
    points = []
    while len(points) < count:
        for attempt in range(cfg.query.retries):
            weights = nbi.random_simplex_weights(k, rng)
            solution = nbi.solve_nbi(p, F, k, weights, direction, settings, rng)
            if solution.usable:
                break
            logger.warning("Level %d initial solve infeasible (residual %.2e), redrawing weights",
                           k, solution.residual)
        else:
            raise AcquisitionError(
                f"level {k}: no feasible initial NBI solve after {cfg.query.retries} weight draws",
                {"level": k, "collected": len(points)},
            )
        points.append(solution.f_opt)
    return np.vstack(points)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def initialize(p: Problem, cfg: TrainConfig, n: Optional[int] = None,
               hyper: Optional[Dict[int, gpr.GprHyperParams]] = None) -> TrainResult:
    """Anchors, F, and n diagonal NBI points per level with a fitted regressor each."""
    n = n or cfg.resolved_n0
    streams = _streams(cfg.seed, p.m)
    settings = cfg.solver.to_core()
    timings = Timings()

    with timings.measure("acquisition"):
        anchor_rng = np.random.default_rng(streams.anchors)
        f_min = np.empty(p.m)
        for i in range(1, p.m + 1):
            anchor = nbi.solve_anchor(p, i, settings, anchor_rng)
            if anchor.status == nbi.SolveStatus.INFEASIBLE:
                raise AcquisitionError(
                    f"anchor {i} of {p.name} did not converge from any start",
                    {"anchor": i, "f_i_min": anchor.f_i_min, "status": anchor.status.value},
                )
            if not np.isfinite(anchor.f_i_min):
                raise AcquisitionError(f"anchor {i} of {p.name} has no finite minimum", {"anchor": i})
            f_min[i - 1] = anchor.f_i_min
        logger.info("Anchors for %s: f_min = %s", p.name, np.array2string(f_min, precision=6))
        F = nbi.build_f_matrix(np.minimum(f_min, p.f_max), p.f_max)

    datasets: Dict[int, np.ndarray] = {}
    for k in range(2, p.m + 1):
        rng = np.random.default_rng(streams.levels[k - 2])
        with timings.measure("acquisition"):
            datasets[k] = _acquire_diagonal(p, F, k, n, cfg, rng)
        logger.debug("Level %d initialized with %d points", k, n)

    shared = dict(hyper or {})
    with timings.measure("fitting"):
        levels = []
        for k in range(2, p.m + 1):
            if cfg.method != "p_ppr" and k not in shared:
                shared[k] = _level_hyper(datasets[k], cfg)
            levels.append(_fit_level(cfg.method, datasets[k], shared.get(k), cfg))

    model = ChainedPfModel(
        l1=float(F.f_min[0]), levels=tuple(levels), f_min=F.f_min, f_max=F.f_max, F=F,
        eq_tol=_PROVISIONAL_EQ_TOL, problem_name=p.name, method=cfg.method,
    )
    frozen = shared if cfg.method != "p_ppr" else {}
    return TrainResult(model=_finalize_eq_tol(model, cfg), datasets=datasets, hyper=frozen, timings=timings)


def _finalize_eq_tol(model: ChainedPfModel, cfg: TrainConfig) -> ChainedPfModel:
    eq_tol = cfg.chain.eq_tol or default_eq_tol(model.levels[-1])
    return replace(model, eq_tol=eq_tol)


def _cascade_project(model: ChainedPfModel, T: np.ndarray) -> np.ndarray:
    """Clip each prefix coordinate into its cascade interval; returns row validity."""
    valid = np.ones(T.shape[0], dtype=bool)
    T[:, 0] = np.clip(T[:, 0], model.l1, model.f_max[0])
    for j in range(1, T.shape[1]):
        lower = model.mean(j + 1, T[:, :j])
        valid &= lower <= model.f_max[j]
        T[:, j] = np.clip(T[:, j], lower, model.f_max[j])
    return valid


def _cascade_candidates(model: ChainedPfModel, k: int, count: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw f_1:k-1 prefixes uniformly through the cascade intervals."""
    T = np.empty((count, k - 1))
    valid = np.ones(count, dtype=bool)
    T[:, 0] = model.l1 + rng.random(count) * (model.f_max[0] - model.l1)
    for j in range(1, k - 1):
        lower = model.mean(j + 1, T[:, :j])
        valid &= lower <= model.f_max[j]
        T[:, j] = lower + rng.random(count) * (model.f_max[j] - lower)
    return T[valid]


def _interval_widths(model: ChainedPfModel, f: np.ndarray) -> np.ndarray:
    lower = np.empty(f.size)
    lower[0] = model.l1
    for j in range(1, f.size):
        lower[j] = model.mean(j + 1, f[:j])[0]
    return np.maximum(model.f_max[:f.size] - lower, 0.0)


def _refine(model: ChainedPfModel, k: int, start: np.ndarray, best_var: float,
            steps: int):
    level = model.level(k)
    current = start.copy()
    step = 0.1 * _interval_widths(model, current)
    dim = current.size
    for _ in range(steps):
        if not np.any(step > 0):
            break
        trials = np.repeat(current.reshape(1, -1), 2 * dim, axis=0)
        for j in range(dim):
            trials[2 * j, j] += step[j]
            trials[2 * j + 1, j] -= step[j]
        valid = _cascade_project(model, trials)
        if not np.any(valid):
            step = step / 2.0
            continue
        trials = trials[valid]
        _, var = level.predict_many(trials)
        best = int(np.argmax(var))
        if var[best] > best_var:
            current, best_var = trials[best], float(var[best])
        else:
            step = step / 2.0
    return current, best_var


def query_max_variance(model: ChainedPfModel, k: int, rng: np.random.Generator,
                       settings: QuerySettings = QuerySettings()) -> QueryPoint:
    """Approximate argmax of the level-k predictive variance over the cascade-feasible region."""
    if not 2 <= k <= model.m:
        raise DimensionError(f"level {k} outside 2..{model.m}")
    level = model.level(k)
    candidates = np.empty((0, k - 1))
    for _ in range(settings.retries):
        candidates = _cascade_candidates(model, k, settings.candidates, rng)
        if candidates.shape[0]:
            break
    if not candidates.shape[0]:
        raise LevelDegenerateError(f"no cascade-feasible candidate for level {k} after {settings.retries} draws")

    _, var = level.predict_many(candidates)
    best = int(np.argmax(var))
    f_query, sigma2 = _refine(model, k, candidates[best], float(var[best]), settings.refine_steps)
    mean, var = level.predict_many(f_query.reshape(1, -1))
    return QueryPoint(f_query=f_query, sigma2=float(var[0]), f_around=np.append(f_query, mean[0]))


def max_variance_on_grid(model: ChainedPfModel, k: int, grid) -> float:
    """Largest level-k predictive variance over fixed prefix points."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid.reshape(-1, 1)
    _, var = model.level(k).predict_many(grid)
    return float(np.max(var))


def train_active(p: Problem, cfg: TrainConfig,
                 on_refit: Optional[Callable[[int, ChainedPfModel], None]] = None) -> TrainResult:
    """Initialize with n0 points per level, then query max-variance points until n_max."""
    if not cfg.is_active:
        raise TrainingError(f"train_active needs method p_agpr, got {cfg.method}")
    result = initialize(p, cfg, n=cfg.resolved_n0)
    streams = _streams(cfg.seed, p.m)
    settings = cfg.solver.to_core()
    model = result.model

    for k in range(2, p.m + 1):
        query_rng = np.random.default_rng(streams.queries[k - 2])
        acquisition_rng = np.random.default_rng(streams.acquisitions[k - 2])
        iteration = 0
        while result.datasets[k].shape[0] < cfg.n_max:
            iteration += 1
            with result.timings.measure("query_overhead"):
                query = query_max_variance(model, k, query_rng, cfg.query)
            with result.timings.measure("acquisition"):
                try:
                    solution = nbi.acquire_pf_point(p, model.F, k, query.f_around, settings, acquisition_rng)
                except AcquisitionError as e:
                    result.model = model
                    raise TrainingError(
                        f"level {k} iteration {iteration}: {e} (diagnostics: {e.diagnostics})", partial=result,
                    ) from e
            result.datasets[k] = np.vstack([result.datasets[k], solution.f_opt])
            with result.timings.measure("fitting"):
                refit = _fit_level(cfg.method, result.datasets[k], result.hyper[k], cfg)
                model = model.with_level(k, refit)
            result.trace.append({
                "level": k,
                "iter": iteration,
                "branch": solution.branch.value,
                "sigma2": query.sigma2,
                "residual": solution.residual,
                "f_query": query.f_query.tolist(),
            })
            logger.debug("Level %d iter %d: branch %s, sigma2 %.3e, residual %.1e",
                         k, iteration, solution.branch.value, query.sigma2, solution.residual)
            if on_refit is not None:
                on_refit(k, model)
        logger.info("Level %d done with %d points", k, result.datasets[k].shape[0])

    result.model = _finalize_eq_tol(model, cfg)
    return result


def train_passive_gpr(p: Problem, cfg: TrainConfig,
                      hyper: Optional[Dict[int, gpr.GprHyperParams]] = None) -> TrainResult:
    """Initialization with the whole budget; optional hyperparameters shared from an active run."""
    return initialize(p, cfg, n=cfg.n_max, hyper=hyper)


def train_passive_poly(p: Problem, cfg: TrainConfig) -> TrainResult:
    """Same data as the passive GPR; every level is a degree-2 polynomial."""
    return initialize(p, cfg, n=cfg.n_max)


def train(p: Problem, cfg: TrainConfig,
          hyper: Optional[Dict[int, gpr.GprHyperParams]] = None) -> TrainResult:
    if cfg.method == "p_agpr":
        return train_active(p, cfg)
    if cfg.method == "p_pgpr":
        return train_passive_gpr(p, cfg, hyper=hyper)
    return train_passive_poly(p, cfg)
