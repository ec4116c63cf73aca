"""
Degree-2 polynomial level regressor (the passive polynomial baseline)

Basis order: constant, linear terms, pairwise products (i < j), squares.
For two inputs that is [1, f1, f2, f1*f2, f1^2, f2^2].
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from src.core.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

RIDGE = 1e-8
LEVERAGE_FLOOR = 1e-8


def basis(F) -> np.ndarray:
    """Full degree-2 basis expansion of each row of F."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    q = F.shape[1]
    columns = [np.ones(F.shape[0])]
    columns += [F[:, i] for i in range(q)]
    columns += [F[:, i] * F[:, j] for i in range(q) for j in range(i + 1, q)]
    columns += [F[:, i] ** 2 for i in range(q)]
    return np.column_stack(columns)


def basis_size(q: int) -> int:
    return 1 + 2 * q + q * (q - 1) // 2


@dataclass(frozen=True, eq=False)
class PolyModel:
    inputs: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    ridge: float

    kind = "poly"

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    def predict_many(self, F) -> Tuple[np.ndarray, np.ndarray]:
        F = np.asarray(F, dtype=float)
        if F.ndim != 2 or F.shape[1] != self.input_dim:
            raise DimensionError(f"model expects inputs of length {self.input_dim}, got shape {F.shape}")
        mean = basis(F) @ self.weights
        return mean, np.zeros_like(mean)

    def loo_residuals(self) -> np.ndarray:
        """Closed-form leave-one-out residuals; NaN where the fit interpolates the point."""
        Phi = basis(self.inputs)
        gram = Phi.T @ Phi + self.ridge * np.eye(Phi.shape[1])
        hat = Phi @ np.linalg.solve(gram, Phi.T)
        residuals = self.targets - Phi @ self.weights
        slack = 1.0 - np.diag(hat)
        defined = slack > LEVERAGE_FLOOR
        return np.where(defined, residuals / np.where(defined, slack, 1.0), np.nan)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "inputs": self.inputs.tolist(), "targets": self.targets.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PolyModel":
        return fit_poly(payload["inputs"], payload["targets"])


def fit_poly(inputs, targets) -> PolyModel:
    """Least squares on the degree-2 basis; ridge-stabilized when rank deficient."""
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if X.shape[0] < 1:
        raise DomainError("polynomial fit needs at least one point")
    if X.shape[0] != t.size:
        raise DimensionError(f"{X.shape[0]} inputs but {t.size} targets")
    Phi = basis(X)
    ridge = 0.0
    if np.linalg.matrix_rank(Phi) < Phi.shape[1]:
        gram = Phi.T @ Phi
        ridge = RIDGE * max(1.0, float(np.trace(gram)) / gram.shape[0])
        logger.warning(
            "Rank-deficient polynomial fit (%d points, %d basis terms); using ridge %.1e",
            Phi.shape[0], Phi.shape[1], ridge,
        )
        weights = np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), Phi.T @ t)
    else:
        weights, *_ = np.linalg.lstsq(Phi, t, rcond=None)
    for arr in (X, t, weights):
        arr.setflags(write=False)
    return PolyModel(inputs=X, targets=t, weights=weights, ridge=ridge)
