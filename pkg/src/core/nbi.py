"""
NBI - scalarized acquisition of PF points

All internal math runs in shifted metric coordinates f - f_min, where the
F matrix has zeros on its diagonal and f_max - f_min elsewhere. Public
outputs (f_opt, anchor values) are in the original metric units.

The scalarized subproblem

    max c   s.t.   F_k s + c n = f_{1:k}(x),   x in box,   c >= 0

is solved by an augmented Lagrangian over (x, c). Each inner minimization
is L-BFGS-B with forward-difference gradients evaluated as one batched
objective call; several starts (box midpoint plus a randomly shifted Halton
sequence) guard against local solutions.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from src.core.errors import (
    AcquisitionError,
    DegenerateDirectionError,
    DimensionError,
    DomainError,
    FMatrixError,
)
from src.core.testbench import Problem

logger = logging.getLogger(__name__)

_FD_STEP = math.sqrt(np.finfo(float).eps)
_MAX_CONDITION = 1e12


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"


class Branch(str, Enum):
    VERTICAL = "vertical"
    DIAGONAL = "diagonal"
    CLAMPED = "clamped"


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-6
    accept_tol: float = 1e-4
    n_starts: int = 8
    anchor_starts: int = 16
    max_outer: int = 500
    inner_maxiter: int = 200
    penalty_init: float = 10.0
    penalty_max: float = 1e8
    penalty_growth: float = 10.0
    stall_iters: int = 10
    neg_tol: float = -1e-9


@dataclass(frozen=True, eq=False)
class FMatrix:
    """Shifted F matrix: diagonal 0, row i off-diagonal f_max[i] - f_min[i]"""

    entries: np.ndarray
    f_min: np.ndarray
    f_max: np.ndarray
    conditions: Tuple[float, ...] = ()

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    def sub(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.m:
            raise DimensionError(f"sub-matrix size {k} outside 1..{self.m}")
        return self.entries[:k, :k]

    def shift(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return f - self.f_min[: f.shape[-1]]

    def unshift(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return f + self.f_min[: f.shape[-1]]

    def to_dict(self) -> Dict[str, Any]:
        return {"f_min": self.f_min.tolist(), "f_max": self.f_max.tolist(), "entries": self.entries.tolist()}


@dataclass(frozen=True, eq=False)
class NbiSolution:
    c_opt: float
    x_opt: np.ndarray
    f_opt: np.ndarray
    status: SolveStatus
    residual: float
    iterations: int = 0
    branch: Optional[Branch] = None
    weights: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None

    @property
    def usable(self) -> bool:
        return self.status != SolveStatus.INFEASIBLE


@dataclass(frozen=True, eq=False)
class AnchorSolution:
    x_opt: np.ndarray
    f_i_min: float
    status: SolveStatus


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def random_simplex_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the probability simplex (normalized exponentials)."""
    e = rng.exponential(size=k)
    return e / e.sum()


def multistart_points(lower: np.ndarray, upper: np.ndarray, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Box midpoint followed by n - 1 points of a randomly shifted Halton sequence."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    points = [0.5 * (lower + upper)]
    if n > 1:
        halton = qmc.Halton(d=lower.size, scramble=False).random(n)[1:]
        shifted = (halton + rng.random(lower.size)) % 1.0
        points.extend(qmc.scale(shifted, lower, upper))
    return np.vstack(points)


def _fd_value_and_grad(z: np.ndarray, batch_fun: Callable[[np.ndarray], np.ndarray],
                       upper: np.ndarray) -> Tuple[float, np.ndarray]:
    steps = _FD_STEP * np.maximum(1.0, np.abs(z))
    steps = np.where(z + steps > upper, -steps, steps)
    values = batch_fun(np.vstack([z, z + np.diag(steps)]))
    return float(values[0]), (values[1:] - values[0]) / steps


# ---------------------------------------------------------------------------
# Anchors and F
# ---------------------------------------------------------------------------

def solve_anchor(p: Problem, i: int, settings: SolverSettings = SolverSettings(),
                 rng: Optional[np.random.Generator] = None) -> AnchorSolution:
    """Minimize metric i (1-based) over the box from several starts."""
    if not 1 <= i <= p.m:
        raise DimensionError(f"anchor index {i} outside 1..{p.m}")
    rng = rng if rng is not None else np.random.default_rng()
    column = i - 1

    def batch_fun(X: np.ndarray) -> np.ndarray:
        return p.objective(X)[:, column]

    bounds = list(zip(p.lower, p.upper))
    best_x, best_f, any_success = None, math.inf, False
    for x0 in multistart_points(p.lower, p.upper, settings.anchor_starts, rng):
        res = minimize(
            _fd_value_and_grad, x0, args=(batch_fun, p.upper), jac=True,
            method="L-BFGS-B", bounds=bounds,
            options={"maxiter": settings.inner_maxiter, "ftol": 1e-12, "gtol": 1e-9},
        )
        x = np.clip(res.x, p.lower, p.upper)
        value = float(batch_fun(x.reshape(1, -1))[0])
        any_success = any_success or bool(res.success)
        if value < best_f:
            best_x, best_f = x, value
    status = SolveStatus.CONVERGED if any_success else SolveStatus.INFEASIBLE
    if not any_success:
        logger.warning("Anchor %d of %s did not converge from any start; best %.6g", i, p.name, best_f)
    return AnchorSolution(x_opt=best_x, f_i_min=best_f, status=status)


def build_f_matrix(f_min, f_max) -> FMatrix:
    """F in shifted coordinates; checks every leading sub-matrix F_{1:k}, k >= 2."""
    f_min = np.asarray(f_min, dtype=float).reshape(-1)
    f_max = np.asarray(f_max, dtype=float).reshape(-1)
    if f_min.size != f_max.size:
        raise DimensionError(f"f_min has length {f_min.size}, f_max {f_max.size}")
    if np.any(f_min > f_max):
        raise DomainError(f"f_min {f_min} exceeds f_max {f_max}")
    m = f_min.size
    span = f_max - f_min
    entries = np.repeat(span.reshape(-1, 1), m, axis=1)
    np.fill_diagonal(entries, 0.0)
    conditions = []
    for k in range(2, m + 1):
        cond = float(np.linalg.cond(entries[:k, :k]))
        if not np.isfinite(cond) or cond > _MAX_CONDITION:
            raise FMatrixError(f"leading sub-matrix F_1:{k} is singular (condition {cond:.3e})")
        conditions.append(cond)
    for arr in (entries, f_min, f_max):
        arr.setflags(write=False)
    return FMatrix(entries=entries, f_min=f_min, f_max=f_max, conditions=tuple(conditions))


# ---------------------------------------------------------------------------
# Weight recovery
# ---------------------------------------------------------------------------

def _around(F: FMatrix, k: int, f_around) -> Tuple[np.ndarray, np.ndarray]:
    if not 2 <= k <= F.m:
        raise DimensionError(f"level {k} outside 2..{F.m}")
    f_around = np.asarray(f_around, dtype=float).reshape(-1)
    if f_around.size != k:
        raise DimensionError(f"f_around has length {f_around.size}, level is {k}")
    return F.sub(k), F.shift(f_around)


def vertical_direction(k: int) -> np.ndarray:
    v = np.zeros(k)
    v[-1] = -1.0
    return v


def vertical_weights(F: FMatrix, k: int, f_around) -> Tuple[float, np.ndarray]:
    """Weights reaching f_around from the hull along v = [0, ..., 0, -1].

    The result sums to one; it may have negative entries.
    """
    Fk, fa = _around(F, k, f_around)
    v = vertical_direction(k)
    a = np.linalg.solve(Fk, fa)
    b = np.linalg.solve(Fk, v)
    denom = float(b.sum())
    if abs(denom) < 1e-14:
        raise DegenerateDirectionError(f"vertical direction is parallel to the hull of F_1:{k}")
    c_star = (float(a.sum()) - 1.0) / denom
    s_star = np.linalg.solve(Fk, fa - c_star * v)
    return c_star, s_star


def diagonal_weights(F: FMatrix, k: int, f_around) -> Tuple[float, np.ndarray]:
    """Weights reaching f_around from the hull along -F_k e."""
    Fk, fa = _around(F, k, f_around)
    a = np.linalg.solve(Fk, fa)
    c_star = (1.0 - float(a.sum())) / k
    return c_star, a + c_star


# ---------------------------------------------------------------------------
# Scalarized subproblem
# ---------------------------------------------------------------------------

def solve_nbi(p: Problem, F: FMatrix, k: int, s, n,
              settings: SolverSettings = SolverSettings(),
              rng: Optional[np.random.Generator] = None) -> NbiSolution:
    """Farthest feasible point along n from the hull point F_k s."""
    if not 2 <= k <= p.m or k > F.m:
        raise DimensionError(f"level {k} outside 2..{p.m}")
    s = np.asarray(s, dtype=float).reshape(-1)
    n = np.asarray(n, dtype=float).reshape(-1)
    if s.size != k or n.size != k:
        raise DimensionError(f"weights and direction must have length {k}")
    if not np.any(n != 0.0):
        raise DomainError("search direction must be nonzero")
    if abs(s.sum() - 1.0) > 1e-9 or np.any(s < settings.neg_tol):
        raise DomainError(f"weights must lie on the simplex, got {s}")
    rng = rng if rng is not None else np.random.default_rng()

    d = p.d
    start = F.sub(k) @ s
    f_shift = F.f_min[:k]
    upper = np.append(p.upper, np.inf)
    bounds = list(zip(p.lower, p.upper)) + [(0.0, None)]

    def residuals(Z: np.ndarray) -> np.ndarray:
        reached = p.objective(Z[:, :d])[:, :k] - f_shift
        return start + Z[:, d:d + 1] * n - reached

    def augmented(Z: np.ndarray, lam: np.ndarray, rho: float) -> np.ndarray:
        R = residuals(Z)
        return -Z[:, d] + R @ lam + 0.5 * rho * np.sum(R ** 2, axis=1)

    nn = float(n @ n)
    candidates = []
    for x0 in multistart_points(p.lower, p.upper, settings.n_starts, rng):
        reached0 = p.objective(x0.reshape(1, -1))[0, :k] - f_shift
        c0 = max(0.0, float(n @ (reached0 - start)) / nn)
        z = np.append(x0, c0)
        candidates.append(_augmented_lagrangian(z, residuals, augmented, bounds, upper, k, settings))

    converged = [c for c in candidates if c[2] <= settings.tol]
    acceptable = [c for c in candidates if c[2] <= settings.accept_tol]
    if converged:
        z, iterations, residual = max(converged, key=lambda c: c[0][d])
        status = SolveStatus.CONVERGED
    elif acceptable:
        z, iterations, residual = max(acceptable, key=lambda c: c[0][d])
        status = SolveStatus.MAX_ITER
    else:
        z, iterations, residual = min(candidates, key=lambda c: c[2])
        status = SolveStatus.INFEASIBLE

    x_opt = np.clip(z[:d], p.lower, p.upper)
    f_opt = p.objective(x_opt.reshape(1, -1))[0, :k]
    return NbiSolution(
        c_opt=float(z[d]), x_opt=x_opt, f_opt=f_opt, status=status,
        residual=float(residual), iterations=iterations, weights=s, direction=n,
    )


def _augmented_lagrangian(z, residuals, augmented, bounds, upper, k,
                          settings: SolverSettings) -> Tuple[np.ndarray, int, float]:
    d = z.size - 1
    lam = np.zeros(k)
    rho = settings.penalty_init
    c_prev = z[d]
    best_norm = math.inf
    stalled = 0
    norm = math.inf
    iteration = 0
    for iteration in range(1, settings.max_outer + 1):
        res = minimize(
            _fd_value_and_grad, z,
            args=(lambda Z, lam=lam, rho=rho: augmented(Z, lam, rho), upper),
            jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": settings.inner_maxiter, "ftol": 1e-12, "gtol": 1e-9},
        )
        z = res.x
        r = residuals(z.reshape(1, -1))[0]
        norm = float(np.max(np.abs(r)))
        lam = lam + rho * r
        if norm <= settings.tol and abs(z[d] - c_prev) <= settings.tol:
            break
        c_prev = z[d]
        if norm < 0.99 * best_norm:
            best_norm = norm
            stalled = 0
        else:
            stalled += 1
        if norm > settings.tol:
            rho = min(rho * settings.penalty_growth, settings.penalty_max)
        if stalled >= settings.stall_iters and rho >= settings.penalty_max:
            break
    return z, iteration, norm


# ---------------------------------------------------------------------------
# Rectified cascade
# ---------------------------------------------------------------------------

def acquire_pf_point(p: Problem, F: FMatrix, k: int, f_around,
                     settings: SolverSettings = SolverSettings(),
                     rng: Optional[np.random.Generator] = None) -> NbiSolution:
    """Vertical search, then the diagonal direction, then clamped weights."""
    rng = rng if rng is not None else np.random.default_rng()
    f_around = np.asarray(f_around, dtype=float).reshape(-1)
    attempts: List[Dict[str, Any]] = []

    try:
        _, s_vert = vertical_weights(F, k, f_around)
    except DegenerateDirectionError:
        s_vert = None
    if s_vert is not None and np.all(s_vert >= settings.neg_tol):
        solution = solve_nbi(p, F, k, np.clip(s_vert, 0.0, None) / np.clip(s_vert, 0.0, None).sum(),
                             vertical_direction(k), settings, rng)
        if solution.usable:
            return replace(solution, branch=Branch.VERTICAL)
        attempts.append({"branch": Branch.VERTICAL.value, "residual": solution.residual})

    diagonal = -F.sub(k) @ np.ones(k)
    _, s_diag = diagonal_weights(F, k, f_around)
    if np.all(s_diag >= settings.neg_tol):
        weights = np.clip(s_diag, 0.0, None)
        solution = solve_nbi(p, F, k, weights / weights.sum(), diagonal, settings, rng)
        if solution.usable:
            return replace(solution, branch=Branch.DIAGONAL)
        attempts.append({"branch": Branch.DIAGONAL.value, "residual": solution.residual})
    else:
        weights = np.clip(s_diag, 0.0, None)
        weights = weights / weights.sum()
        logger.warning("Clamping negative weights %s -> %s at level %d", s_diag, weights, k)
        solution = solve_nbi(p, F, k, weights, diagonal, settings, rng)
        if solution.usable:
            return replace(solution, branch=Branch.CLAMPED)
        attempts.append({"branch": Branch.CLAMPED.value, "residual": solution.residual})

    raise AcquisitionError(
        f"no branch produced a usable PF point at level {k} for {p.name}",
        {"f_around": f_around.tolist(), "attempts": attempts},
    )
