"""Deterministic base regressors for ensembles.

Any object with ``fit(X, y) -> model`` and ``model.predict(X)`` can serve as
a submodel specification, provided training on the same data always yields
the same predictions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularSystemError(np.linalg.LinAlgError):
    pass


def _check_2d(X, d=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if d is not None and X.size == d else X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected {d} features, got {X.shape[1]}")
    return X


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float

    @property
    def d(self) -> int:
        return int(self.weights.size)

    def predict(self, X) -> np.ndarray:
        X = _check_2d(X, self.d)
        return X @ self.weights + self.intercept


@dataclass(frozen=True)
class ConstantModel:
    value: float

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        n = 1 if X.ndim < 2 else X.shape[0]
        return np.full(n, self.value)


def train_ridge(X, y, lam: float) -> RidgeModel:
    """Closed-form ridge regression with an unpenalised intercept.

    Solves ``(Xc'Xc + lam I) w = Xc'yc`` on centred data by Cholesky
    factorisation.  Rows are put in a canonical order first, so the fit is
    bit-identical under any permutation of the training set.
    """
    X = _check_2d(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    if n < 1:
        raise ValueError("ridge regression needs at least one instance")
    if y.size != n:
        raise ValueError(f"{n} feature rows but {y.size} targets")
    if lam < 0:
        raise ValueError("lam must be nonnegative")

    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[order], y[order]
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    A = Xc.T @ Xc + lam * np.eye(d)
    b = Xc.T @ yc
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(
            f"normal equations are singular (n={n}, d={d}, lam={lam}); use lam > 0") from err
    diag = np.abs(np.diag(factor[0]))
    if lam == 0 and diag.min() <= np.sqrt(np.finfo(float).eps) * max(diag.max(), 1.0):
        raise SingularSystemError(f"normal equations are singular (n={n}, d={d}, lam=0)")
    w = scipy.linalg.cho_solve(factor, b)

    scale = max(np.abs(A).max(initial=0.0) * np.abs(w).max(initial=0.0), np.abs(b).max(initial=0.0), 1.0)
    if np.abs(A @ w - b).max(initial=0.0) > 1e-6 * scale:
        raise SingularSystemError("ridge solve failed its residual check")
    return RidgeModel(w, float(y_mean - x_mean @ w), float(lam))


@dataclass(frozen=True)
class Ridge:
    """Ridge submodel specification with weight decay ``lam``."""

    lam: float = 1.0

    def fit(self, X, y) -> RidgeModel:
        return train_ridge(X, y, self.lam)


@dataclass(frozen=True)
class Constant:
    """Submodel that ignores its data and always predicts ``value``."""

    value: float

    def fit(self, X, y) -> ConstantModel:
        return ConstantModel(float(self.value))


def predict(model, x) -> float:
    """Prediction of ``model`` at a single feature vector."""
    return float(np.asarray(model.predict(np.atleast_2d(np.asarray(x, dtype=float))))[0])
