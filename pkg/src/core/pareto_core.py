"""
Pareto core - dominance, projection and brute-force front extraction

Every vector here is a metric vector (all metrics minimized). Sets are
deduplicated by exact element-wise equality; callers that need robustness
against round-off quantize first (see quantize / config.DEDUP_GRID).
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from src.core.errors import DimensionError, DomainError

ArrayLike = Union[Sequence[float], np.ndarray]

# rows per block in the pairwise dominance filter
_FRONT_BLOCK = 256


def as_metric_vector(values: ArrayLike) -> np.ndarray:
    """Validate and freeze a metric vector (1-D, finite, non-empty)"""
    vec = np.array(values, dtype=float).reshape(-1)
    if vec.size == 0:
        raise DimensionError("metric vector must have at least one entry")
    if not np.all(np.isfinite(vec)):
        raise DomainError(f"metric vector has non-finite entries: {vec}")
    vec.setflags(write=False)
    return vec


def quantize(values: ArrayLike, grid: float) -> np.ndarray:
    """Snap values to an absolute grid so exact comparison becomes round-off tolerant"""
    arr = np.asarray(values, dtype=float)
    if grid <= 0:
        return arr.copy()
    snapped = np.round(arr / grid) * grid
    # avoid -0.0 vs 0.0 surprises when rows are compared byte-wise
    return snapped + 0.0


@dataclass(frozen=True, eq=False)
class MetricSet:
    """Finite, deduplicated collection of equal-length metric vectors"""

    values: np.ndarray

    @classmethod
    def from_points(cls, points: Union[Iterable[ArrayLike], np.ndarray],
                    grid: Optional[float] = None) -> "MetricSet":
        arr = np.array(list(points) if not isinstance(points, np.ndarray) else points, dtype=float)
        if arr.size == 0:
            dim = arr.shape[1] if arr.ndim == 2 else 0
            empty = np.empty((0, dim))
            empty.setflags(write=False)
            return cls(empty)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionError("metric set members must all have the same length")
        if not np.all(np.isfinite(arr)):
            raise DomainError("metric set has non-finite entries")
        if grid is not None:
            arr = quantize(arr, grid)
        _, first = np.unique(arr, axis=0, return_index=True)
        unique = arr[np.sort(first)]
        unique.setflags(write=False)
        return cls(unique)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1]) if self.values.ndim == 2 else 0

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.values)

    def __contains__(self, f: object) -> bool:
        vec = np.asarray(f, dtype=float).reshape(-1)
        if len(self) == 0 or vec.size != self.dim:
            return False
        return bool(np.any(np.all(self.values == vec, axis=1)))

    def as_tuples(self) -> set:
        return {tuple(row) for row in self.values}


def dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """True iff a <= b element-wise and a != b somewhere"""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise DimensionError(f"cannot compare vectors of length {a.size} and {b.size}")
    return bool(np.all(a <= b) and np.any(a < b))


def project(f: ArrayLike, i: int) -> np.ndarray:
    """Keep the first i entries of f"""
    vec = as_metric_vector(f)
    if not 1 <= i <= vec.size:
        raise DimensionError(f"projection index {i} outside 1..{vec.size}")
    out = vec[:i].copy()
    out.setflags(write=False)
    return out


def project_set(A: MetricSet, i: int) -> MetricSet:
    """Project every member of A to its first i entries, then dedupe"""
    if len(A) == 0:
        return A
    if not 1 <= i <= A.dim:
        raise DimensionError(f"projection index {i} outside 1..{A.dim}")
    return MetricSet.from_points(A.values[:, :i])


def front_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of the rows of points that no other row dominates"""
    P = np.asarray(points, dtype=float)
    n = P.shape[0]
    keep = np.ones(n, dtype=bool)
    for start in range(0, n, _FRONT_BLOCK):
        block = P[start:start + _FRONT_BLOCK]
        leq = np.all(P[np.newaxis, :, :] <= block[:, np.newaxis, :], axis=2)
        lt = np.any(P[np.newaxis, :, :] < block[:, np.newaxis, :], axis=2)
        keep[start:start + _FRONT_BLOCK] = ~np.any(leq & lt, axis=1)
    return keep


def extract_front(A: MetricSet) -> MetricSet:
    """Exact pairwise dominance filter: the non-dominated subset of A"""
    if len(A) <= 1:
        return A
    front = A.values[front_mask(A.values)]
    front.setflags(write=False)
    return MetricSet(front)


def hausdorff_distance(A: ArrayLike, B: ArrayLike) -> float:
    """Symmetric Hausdorff distance between two finite point sets"""
    a = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_2d(np.asarray(B, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("Hausdorff distance needs two non-empty sets")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"sets live in R^{a.shape[1]} and R^{b.shape[1]}")
    forward, _ = cKDTree(b).query(a)
    backward, _ = cKDTree(a).query(b)
    return float(max(forward.max(), backward.max()))
