"""
Chained PF model - membership checking, generation and the model file

A model of an m-metric front is the constant L1 plus one level regressor
per metric k = 2..m, each consuming the first k - 1 metrics:

    L1 <= f1 <= f1_max
    mu_k(f_1:k-1) <= f_k <= fk_max        k = 2..m-1
    |mu_m(f_1:m-1) - f_m| <= eq_tol,  f_m <= fm_max
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import yaml

import config
from src.core.errors import (
    ConditioningError,
    DimensionError,
    DomainError,
    FMatrixError,
    ModelFileError,
    ModelInconsistencyError,
)
from src.core.gpr import GprModel
from src.core.nbi import FMatrix, build_f_matrix
from src.core.poly import PolyModel
from utils import file_utils

logger = logging.getLogger(__name__)

LevelModel = Union[GprModel, PolyModel]

DEFAULT_GENERATION_RETRIES = 20
MIN_EQ_TOL = 1e-3

# round-off allowance between batched and single-row predictions
_MEMBERSHIP_SLACK = 1e-12

_LEVEL_KINDS = {"gpr": GprModel, "poly": PolyModel}


@dataclass(frozen=True, eq=False)
class ChainedPfModel:
    l1: float
    levels: Tuple[LevelModel, ...]
    f_min: np.ndarray
    f_max: np.ndarray
    F: FMatrix
    eq_tol: float
    problem_name: str
    method: str = "p_agpr"

    def __post_init__(self):
        m = self.f_max.size
        if len(self.levels) != m - 1:
            raise DimensionError(f"{m}-metric model needs {m - 1} levels, got {len(self.levels)}")
        for j, level in enumerate(self.levels):
            if level.input_dim != j + 1:
                raise DimensionError(f"level {j + 2} consumes {level.input_dim} metrics, expected {j + 1}")
        if self.l1 > self.f_max[0]:
            raise DomainError(f"L1 = {self.l1} exceeds f1_max = {self.f_max[0]}")
        if not self.eq_tol > 0:
            raise DomainError(f"eq_tol must be positive, got {self.eq_tol}")

    @property
    def m(self) -> int:
        return int(self.f_max.size)

    @property
    def gprs(self) -> Tuple[LevelModel, ...]:
        return self.levels

    def level(self, k: int) -> LevelModel:
        """Regressor for metric k (2 <= k <= m)."""
        if not 2 <= k <= self.m:
            raise DimensionError(f"level {k} outside 2..{self.m}")
        return self.levels[k - 2]

    def with_level(self, k: int, model: LevelModel) -> "ChainedPfModel":
        levels = list(self.levels)
        levels[k - 2] = model
        return replace(self, levels=tuple(levels))

    def mean(self, k: int, prefix) -> np.ndarray:
        """Level-k mean for a batch of f_1:k-1 prefixes."""
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim == 1:
            prefix = prefix.reshape(1, -1)
        return self.level(k).predict_many(prefix)[0]


def default_eq_tol(level: LevelModel) -> float:
    """max(1e-3, 2 * RMS of the defined leave-one-out residuals of the last level)."""
    residuals = np.asarray(level.loo_residuals(), dtype=float)
    residuals = residuals[np.isfinite(residuals)]
    if residuals.size == 0:
        return MIN_EQ_TOL
    return max(MIN_EQ_TOL, 2.0 * math.sqrt(float(np.mean(residuals ** 2))))


def check_membership(model: ChainedPfModel, f) -> Tuple[bool, Optional[int]]:
    """Run the cascade on one vector; returns (on_front, first rejecting level)."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != model.m:
        raise DimensionError(f"model has {model.m} metrics, vector has {f.size}")
    on_front, levels = check_many(model, f.reshape(1, -1))
    return bool(on_front[0]), (None if on_front[0] else int(levels[0]))


def check_many(model: ChainedPfModel, F) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized cascade; rejected rows carry their first failing level, accepted rows 0."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[1] != model.m:
        raise DimensionError(f"model has {model.m} metrics, got shape {F.shape}")
    m = model.m
    reject = np.zeros(F.shape[0], dtype=int)

    ok = (F[:, 0] >= model.l1) & (F[:, 0] <= model.f_max[0])
    reject[~ok] = 1
    for k in range(2, m + 1):
        live = np.flatnonzero(reject == 0)
        if live.size == 0:
            break
        mu = model.mean(k, F[live, :k - 1])
        fk = F[live, k - 1]
        if k < m:
            ok = (fk >= mu - _MEMBERSHIP_SLACK) & (fk <= model.f_max[k - 1])
        else:
            ok = (np.abs(mu - fk) <= model.eq_tol) & (fk <= model.f_max[k - 1])
        reject[live[~ok]] = k
    return reject == 0, reject


def generate(model: ChainedPfModel, n: int, seed=None,
             retries: int = DEFAULT_GENERATION_RETRIES) -> np.ndarray:
    """n front points drawn level by level; rows come back in draw order.

    Rows whose interval is empty at some level are redrawn from f1 onward,
    at most `retries` rounds.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = model.m
    f_max = model.f_max
    out = np.empty((n, m))
    pending = np.arange(n)

    for attempt in range(retries + 1):
        rows = pending.size
        draws = np.empty((rows, m))
        valid = np.ones(rows, dtype=bool)
        draws[:, 0] = model.l1 + rng.random(rows) * (f_max[0] - model.l1)
        for k in range(2, m):
            mu = model.mean(k, draws[:, :k - 1])
            valid &= mu <= f_max[k - 1]
            u = rng.random(rows)
            draws[:, k - 1] = np.clip(mu + u * (f_max[k - 1] - mu), mu, f_max[k - 1])
        mu = model.mean(m, draws[:, :m - 1])
        valid &= mu <= f_max[m - 1]
        draws[:, m - 1] = mu

        out[pending[valid]] = draws[valid]
        pending = pending[~valid]
        if pending.size == 0:
            return out
        logger.debug("Generation round %d left %d rows with empty intervals", attempt + 1, pending.size)

    raise ModelInconsistencyError(
        f"{pending.size} of {n} rows still had an empty interval after {retries} redraws"
    )


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------

def to_document(model: ChainedPfModel) -> Dict[str, Any]:
    return {
        "format": config.MODEL_FORMAT,
        "version": config.MODEL_FORMAT_VERSION,
        "problem": model.problem_name,
        "method": model.method,
        "l1": float(model.l1),
        "eq_tol": float(model.eq_tol),
        "f_min": model.f_min.tolist(),
        "f_max": model.f_max.tolist(),
        "F": model.F.entries.tolist(),
        "levels": [level.to_dict() for level in model.levels],
    }


def from_document(doc: Dict[str, Any]) -> ChainedPfModel:
    if not isinstance(doc, dict) or doc.get("format") != config.MODEL_FORMAT:
        raise ModelFileError("not a chained PF model file")
    if doc.get("version") != config.MODEL_FORMAT_VERSION:
        raise ModelFileError(
            f"unsupported model file version {doc.get('version')!r}, expected {config.MODEL_FORMAT_VERSION}"
        )
    try:
        F = build_f_matrix(doc["f_min"], doc["f_max"])
        if not np.allclose(F.entries, np.asarray(doc["F"], dtype=float), rtol=0.0, atol=1e-12):
            raise ModelFileError("stored F matrix does not match f_min/f_max")
        levels = []
        for payload in doc["levels"]:
            kind = payload["kind"]
            if kind not in _LEVEL_KINDS:
                raise ModelFileError(f"unknown level kind {kind!r}")
            levels.append(_LEVEL_KINDS[kind].from_dict(payload))
        return ChainedPfModel(
            l1=float(doc["l1"]),
            levels=tuple(levels),
            f_min=F.f_min,
            f_max=F.f_max,
            F=F,
            eq_tol=float(doc["eq_tol"]),
            problem_name=str(doc["problem"]),
            method=str(doc.get("method", "p_agpr")),
        )
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, ConditioningError, FMatrixError) as e:
        raise ModelFileError(f"corrupt model file: {e}") from e


def save(model: ChainedPfModel, path) -> Path:
    return file_utils.save_yaml(to_document(model), path)


def load(path) -> ChainedPfModel:
    """Read a model file and refit every level from its stored data."""
    try:
        doc = file_utils.load_yaml(path)
    except yaml.YAMLError as e:
        raise ModelFileError(f"corrupt model file {path}: {e}") from e
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    model = from_document(doc)
    logger.info("Loaded %s model for %s (%d levels)", model.method, model.problem_name, len(model.levels))
    return model
