"""
Testbench problems - the four analytic problems (ZDT1, SCH, SPH, MAF3)

Objective bodies follow the usual published definitions; the registry
document (utils/registry/problems.yaml) carries d, m, the design box and the
metric bounds f_max. Each problem also knows its true PF analytically, which
backs the sampler and the nearest-distance oracle used by the error metric.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

import config
from src.core.errors import DimensionError, DomainError
from utils import file_utils

logger = logging.getLogger(__name__)

# box membership slack, relative to the box width
_BOX_SLACK = 1e-12

# oracle discretization: points for m=2, grid side for m=3
PF_GRID_POINTS_2D = 100_000
PF_GRID_SIDE_3D = 400


@dataclass(frozen=True, eq=False)
class Problem:
    """A testbench: box design space, metric bounds and analytic true PF"""

    name: str
    d: int
    m: int
    lower: np.ndarray
    upper: np.ndarray
    f_max: np.ndarray
    pf_equation: str
    objective: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    # residual of the implicit PF equation, row-wise
    pf_residual: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    # maps parameters in [0, 1]^(m-1) onto the PF (below f_max)
    pf_parametric: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    pf_sampler: Callable[[int, np.random.Generator], np.ndarray] = field(repr=False)

    @property
    def omega(self) -> np.ndarray:
        return np.column_stack([self.lower, self.upper])

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


# ---------------------------------------------------------------------------
# Objective bodies (batched: X has shape (n, d), result (n, m))
# ---------------------------------------------------------------------------

def _zdt1(X: np.ndarray) -> np.ndarray:
    f1 = X[:, 0]
    g = 1.0 + 9.0 * np.sum(X[:, 1:], axis=1) / (X.shape[1] - 1)
    f2 = g * (1.0 - np.sqrt(f1 / g))
    return np.column_stack([f1, f2])


def _sch(X: np.ndarray) -> np.ndarray:
    x = X[:, 0]
    return np.column_stack([x ** 2, (x - 2.0) ** 2])


def _sph(X: np.ndarray) -> np.ndarray:
    # radius shrinks away from x3 = 0.5, so the unit sphere is the outer shell
    a = 0.5 * math.pi * X[:, 0]
    b = 0.5 * math.pi * X[:, 1]
    r = 1.0 - (X[:, 2] - 0.5) ** 2
    return -np.column_stack([
        r * np.cos(a) * np.cos(b),
        r * np.cos(a) * np.sin(b),
        r * np.sin(a),
    ])


def _maf3_g(X: np.ndarray) -> np.ndarray:
    z = X[:, 2:] - 0.5
    return 100.0 * (z.shape[1] + np.sum(z ** 2 - np.cos(20.0 * math.pi * z), axis=1))


def _maf3(X: np.ndarray) -> np.ndarray:
    a = 0.5 * math.pi * X[:, 0]
    b = 0.5 * math.pi * X[:, 1]
    scale = 1.0 + _maf3_g(X)
    return np.column_stack([
        scale * (np.cos(a) * np.cos(b)) ** 4,
        scale * (np.cos(a) * np.sin(b)) ** 4,
        scale * np.sin(a) ** 2,
    ])


# ---------------------------------------------------------------------------
# True-PF descriptors
# ---------------------------------------------------------------------------

def _zdt1_residual(F: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(F[:, 0], 0.0, None)) + F[:, 1] - 1.0


def _zdt1_parametric(T: np.ndarray) -> np.ndarray:
    t = T[:, 0]
    return np.column_stack([t ** 2, 1.0 - t])


def _zdt1_sampler(n: int, rng: np.random.Generator) -> np.ndarray:
    f1 = rng.uniform(0.0, 1.0, n)
    return np.column_stack([f1, 1.0 - np.sqrt(f1)])


def _sch_residual(F: np.ndarray) -> np.ndarray:
    return (np.sqrt(np.clip(F[:, 0], 0.0, None)) - 2.0) ** 2 - F[:, 1]


def _sch_parametric(T: np.ndarray) -> np.ndarray:
    return _sch(2.0 * T[:, :1])


def _sch_sampler(n: int, rng: np.random.Generator) -> np.ndarray:
    return _sch(rng.uniform(0.0, 2.0, (n, 1)))


def _sph_residual(F: np.ndarray) -> np.ndarray:
    return np.sum(F ** 2, axis=1) - 1.0


def _sph_parametric(T: np.ndarray) -> np.ndarray:
    X = np.column_stack([T[:, 0], T[:, 1], np.full(T.shape[0], 0.5)])
    return _sph(X)


def _sph_sampler(n: int, rng: np.random.Generator) -> np.ndarray:
    # uniform on the negative octant of the unit sphere
    directions = np.abs(rng.standard_normal((n, 3)))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    return -directions / norms


def _maf3_residual(F: np.ndarray) -> np.ndarray:
    roots = np.sqrt(np.clip(F[:, :2], 0.0, None))
    return roots[:, 0] + roots[:, 1] + F[:, 2] - 1.0


def _maf3_parametric(T: np.ndarray) -> np.ndarray:
    # (sqrt f1, sqrt f2) spans [0, 0.5]^2 below f_max; distance coordinates sit on g = 0
    u = 0.5 * T[:, 0]
    w = 0.5 * T[:, 1]
    return np.column_stack([u ** 2, w ** 2, 1.0 - u - w])


def _maf3_sampler(n: int, rng: np.random.Generator) -> np.ndarray:
    return _maf3_parametric(rng.uniform(0.0, 1.0, (n, 2)))


_BODIES: Dict[str, Tuple[Callable, Callable, Callable, Callable]] = {
    "ZDT1": (_zdt1, _zdt1_residual, _zdt1_parametric, _zdt1_sampler),
    "SCH": (_sch, _sch_residual, _sch_parametric, _sch_sampler),
    "SPH": (_sph, _sph_residual, _sph_parametric, _sph_sampler),
    "MAF3": (_maf3, _maf3_residual, _maf3_parametric, _maf3_sampler),
}

_REGISTRY: Dict[str, Problem] = {}


def load_registry(path: Optional[str] = None) -> Dict[str, Problem]:
    """Read the registry document and bind each entry to its objective body."""
    registry_path = file_utils.resolve_project_path(path or config.PROBLEM_REGISTRY_FILE)
    document = file_utils.load_yaml(registry_path)
    problems = {}
    for entry in document.get("problems", []):
        name = str(entry["name"]).upper()
        if name not in _BODIES:
            raise DomainError(f"registry entry {name} has no objective body")
        objective, residual, parametric, sampler = _BODIES[name]
        omega = np.asarray(entry["omega"], dtype=float)
        f_max = np.asarray(entry["f_max"], dtype=float)
        d, m = int(entry["d"]), int(entry["m"])
        if omega.shape != (d, 2) or f_max.shape != (m,):
            raise DimensionError(f"registry entry {name}: omega/f_max do not match d={d}, m={m}")
        for arr in (omega, f_max):
            arr.setflags(write=False)
        problems[name] = Problem(
            name=name, d=d, m=m,
            lower=omega[:, 0], upper=omega[:, 1], f_max=f_max,
            pf_equation=str(entry.get("pf", "")),
            objective=objective, pf_residual=residual,
            pf_parametric=parametric, pf_sampler=sampler,
        )
    logger.debug("Loaded %d problems from %s", len(problems), registry_path)
    return problems


def registry() -> Dict[str, Problem]:
    if not _REGISTRY:
        _REGISTRY.update(load_registry())
    return _REGISTRY


def problem_names() -> list:
    return sorted(registry())


def get_problem(name: str) -> Problem:
    problems = registry()
    key = str(name).upper()
    if key not in problems:
        raise DomainError(f"unknown problem '{name}'; available: {', '.join(sorted(problems))}")
    return problems[key]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def in_box(p: Problem, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    slack = _BOX_SLACK * np.maximum(p.upper - p.lower, 1.0)
    return np.all((X >= p.lower - slack) & (X <= p.upper + slack), axis=1)


def evaluate_many(p: Problem, X: np.ndarray) -> np.ndarray:
    """Objective values for a batch of designs, shape (n, d) -> (n, m)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.d:
        raise DimensionError(f"{p.name} expects designs of length {p.d}, got {X.shape[1]}")
    if not np.all(in_box(p, X)):
        raise DomainError(f"design outside the {p.name} box")
    return p.objective(X)


def evaluate(p: Problem, x) -> np.ndarray:
    """Metric vector f(x) of one design."""
    return evaluate_many(p, np.asarray(x, dtype=float).reshape(1, -1))[0]


def sample_feasible(p: Problem, n: int, rng: np.random.Generator) -> np.ndarray:
    """Metric vectors of n designs drawn uniformly from the box."""
    X = rng.uniform(p.lower, p.upper, size=(n, p.d))
    return p.objective(X)


def true_pf_sample(p: Problem, n: int, seed=None) -> np.ndarray:
    """n points on the analytic PF below f_max, shape (n, m); raw rows, not a MetricSet."""
    if n < 1:
        raise DomainError("true_pf_sample needs n >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return p.pf_sampler(n, rng)


def _pf_grid(p: Problem) -> np.ndarray:
    if p.m == 2:
        T = np.linspace(0.0, 1.0, PF_GRID_POINTS_2D).reshape(-1, 1)
    else:
        side = np.linspace(0.0, 1.0, PF_GRID_SIDE_3D)
        A, B = np.meshgrid(side, side, indexing="ij")
        T = np.column_stack([A.ravel(), B.ravel()])
    return p.pf_parametric(T)


class _PfOracle:
    """KD-tree over a dense PF discretization plus its spacing bound"""

    def __init__(self, p: Problem):
        grid = _pf_grid(p)
        self.tree = cKDTree(grid)
        if p.m == 2:
            edges = np.linalg.norm(np.diff(grid, axis=0), axis=1)
        else:
            cube = grid.reshape(PF_GRID_SIDE_3D, PF_GRID_SIDE_3D, p.m)
            edges = np.concatenate([
                np.linalg.norm(np.diff(cube, axis=0), axis=2).ravel(),
                np.linalg.norm(np.diff(cube, axis=1), axis=2).ravel(),
            ])
        self.spacing = float(edges.max())


_ORACLES: Dict[str, _PfOracle] = {}


def _oracle(p: Problem) -> _PfOracle:
    if p.name not in _ORACLES:
        logger.debug("Building PF oracle grid for %s", p.name)
        _ORACLES[p.name] = _PfOracle(p)
    return _ORACLES[p.name]


def discretization_bound(p: Problem) -> float:
    """Largest edge of the oracle grid; bounds the oracle's distance error."""
    return _oracle(p).spacing


def distances_to_true_pf(p: Problem, F: np.ndarray) -> np.ndarray:
    """Nearest-grid-point distance to the true PF for each row of F."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape[1] != p.m:
        raise DimensionError(f"{p.name} metric vectors have length {p.m}, got {F.shape[1]}")
    dist, _ = _oracle(p).tree.query(F)
    return dist


def distance_to_true_pf(p: Problem, f) -> float:
    return float(distances_to_true_pf(p, np.asarray(f, dtype=float).reshape(1, -1))[0])


def sph_radial_distance(F: np.ndarray) -> np.ndarray:
    """Closed-form SPH distance |1 - ||f|||, exact for points in the negative octant."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    return np.abs(1.0 - np.linalg.norm(F, axis=1))


def export_true_pf_csv(p: Problem, n: int, path, seed=None):
    """Write true-PF samples with their oracle distances as CSV `f1,...,fm,distance`."""
    samples = true_pf_sample(p, n, seed)
    return file_utils.write_metric_csv(samples, path, extra={"distance": distances_to_true_pf(p, samples)})
