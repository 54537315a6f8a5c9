"""Regression dataset container shared by all model families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FitError(RuntimeError):
    """Raised when a model fit cannot proceed or fails irrecoverably."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix with an explicit all-ones first column plus response.

    X is n x p with X[:, 0] identically 1; y has length n.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(
                f"incompatible shapes X {X.shape} vs y {y.shape}"
            )
        if not np.allclose(X[:, 0], 1.0):
            raise ValueError("first column of X must be identically 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def residuals(self, beta) -> np.ndarray:
        return self.y - self.X @ np.asarray(beta, dtype=float)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx])


def check_design(data: Dataset) -> None:
    """Reject datasets a regression fit cannot handle: n < p or a
    rank-deficient design."""
    if data.n < data.p:
        raise FitError(f"need n >= p, got n={data.n}, p={data.p}")
    if np.linalg.matrix_rank(data.X) < data.p:
        raise FitError("design matrix is rank deficient")
