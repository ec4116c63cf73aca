"""
Noise-free GPR with zero mean and squared-exponential kernel

    kernel(p, q) = theta1 * exp(-(theta2 / 2) * ||p - q||^2)

The kernel matrix gets a small diagonal jitter; when the Cholesky factor
fails the jitter grows tenfold up to a cap. Models are immutable: every
update is a fresh fit.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist, pdist

from src.core.errors import ConditioningError, DimensionError, DomainError

logger = logging.getLogger(__name__)

JITTER_INIT_FACTOR = 1e-10
JITTER_MAX_FACTOR = 1e-4


@dataclass(frozen=True)
class GprHyperParams:
    theta1: float = 1.0
    theta2: float = 1.0
    jitter: float = 0.0

    def __post_init__(self):
        if not self.theta1 > 0 or not self.theta2 > 0:
            raise DomainError(f"theta1 and theta2 must be positive, got {self.theta1}, {self.theta2}")
        if self.jitter < 0:
            raise DomainError(f"jitter must be non-negative, got {self.jitter}")

    def to_dict(self) -> Dict[str, float]:
        return {"theta1": float(self.theta1), "theta2": float(self.theta2), "jitter": float(self.jitter)}


@dataclass(frozen=True, eq=False)
class GprModel:
    """One trained level regressor: data, hyperparameters and factorization"""

    inputs: np.ndarray
    targets: np.ndarray
    hyper: GprHyperParams
    chol: np.ndarray
    alpha: np.ndarray

    kind = "gpr"

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    def predict_many(self, F) -> Tuple[np.ndarray, np.ndarray]:
        return predict_many(self, F)

    def loo_residuals(self) -> np.ndarray:
        return loo_residuals(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
            "hyper": self.hyper.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GprModel":
        hyper = GprHyperParams(**payload["hyper"])
        # the stored jitter is the one that worked; refitting starts from it
        return fit(payload["inputs"], payload["targets"], hyper, jitter_init=hyper.jitter)


def _as_inputs(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def squared_distances(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return cdist(P, Q, metric="sqeuclidean")


def kernel(h: GprHyperParams, p, q) -> float:
    """Squared-exponential covariance of two metric vectors."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.size != q.size:
        raise DimensionError(f"kernel inputs have lengths {p.size} and {q.size}")
    return float(h.theta1 * np.exp(-0.5 * h.theta2 * np.sum((p - q) ** 2)))


def kernel_matrix(h: GprHyperParams, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return h.theta1 * np.exp(-0.5 * h.theta2 * squared_distances(P, Q))


def median_heuristic_theta2(inputs, fallback: float = 1.0) -> float:
    """theta2 = 1 / median pairwise squared distance of the inputs."""
    X = _as_inputs(inputs)
    if X.shape[0] < 2:
        return fallback
    sq = pdist(X, metric="sqeuclidean")
    sq = sq[sq > 0]
    if sq.size == 0:
        return fallback
    return float(1.0 / np.median(sq))


def fit(inputs, targets, hyper: GprHyperParams,
        jitter_init: Optional[float] = None,
        jitter_max_factor: float = JITTER_MAX_FACTOR) -> GprModel:
    """Factorize K + jitter*I, escalating jitter x10 on failure."""
    X = _as_inputs(inputs)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if X.shape[0] < 1:
        raise DomainError("GPR needs at least one training point")
    if X.shape[0] != t.size:
        raise DimensionError(f"{X.shape[0]} inputs but {t.size} targets")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(X)):
        raise DomainError("GPR training data must be finite")

    K = kernel_matrix(hyper, X, X)
    jitter = JITTER_INIT_FACTOR * hyper.theta1 if not jitter_init else jitter_init
    jitter_cap = jitter_max_factor * hyper.theta1
    while True:
        try:
            chol, _ = cho_factor(K + jitter * np.eye(X.shape[0]), lower=True)
            alpha = cho_solve((chol, True), t)
            if np.all(np.isfinite(alpha)):
                break
        except LinAlgError:
            pass
        if jitter >= jitter_cap:
            raise ConditioningError(
                f"kernel matrix of {X.shape[0]} points is not positive definite at jitter {jitter:.1e}",
                float(np.linalg.cond(K)),
            )
        jitter = min(jitter * 10.0, jitter_cap)
        logger.debug("Escalating GPR jitter to %.1e", jitter)

    chol = np.tril(chol)
    for arr in (X, t, chol, alpha):
        arr.setflags(write=False)
    return GprModel(inputs=X, targets=t, hyper=replace(hyper, jitter=jitter), chol=chol, alpha=alpha)


def predict(model: GprModel, f) -> Tuple[float, float]:
    """Predictive mean and variance at one input vector."""
    mean, var = predict_many(model, np.asarray(f, dtype=float).reshape(1, -1))
    return float(mean[0]), float(var[0])


def predict_many(model: GprModel, F) -> Tuple[np.ndarray, np.ndarray]:
    """Predictive means and variances for a batch of inputs, shape (n, input_dim)."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[1] != model.input_dim:
        raise DimensionError(f"model expects inputs of length {model.input_dim}, got shape {F.shape}")
    Ks = kernel_matrix(model.hyper, F, model.inputs)
    mean = Ks @ model.alpha
    v = solve_triangular(model.chol, Ks.T, lower=True)
    var = model.hyper.theta1 - np.sum(v ** 2, axis=0)
    return mean, np.clip(var, 0.0, None)


def dense_predict(model: GprModel, f) -> Tuple[np.ndarray, np.ndarray]:
    """Same prediction through an explicit inverse of K + jitter*I (test oracle)."""
    F = np.atleast_2d(np.asarray(f, dtype=float))
    K = kernel_matrix(model.hyper, model.inputs, model.inputs) + model.hyper.jitter * np.eye(model.n)
    K_inv = np.linalg.inv(K)
    Ks = kernel_matrix(model.hyper, F, model.inputs)
    mean = Ks @ K_inv @ model.targets
    var = model.hyper.theta1 - np.einsum("ij,jk,ik->i", Ks, K_inv, Ks)
    return mean, np.clip(var, 0.0, None)


def loo_residuals(model: GprModel) -> np.ndarray:
    """Closed-form leave-one-out residuals alpha_i / [K^-1]_ii."""
    K_inv = cho_solve((model.chol, True), np.eye(model.n))
    return model.alpha / np.diag(K_inv)
