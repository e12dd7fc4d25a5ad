"""Instance-based certified regressors predicting the median neighbour target.

Two neighbourhood rules are supported: the ``k`` nearest stored instances
(fixed population, certified under the swap paradigm) and all instances
within a radius (region based, certified under insertion/deletion).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .median import Certificate, Paradigm, VoteSet, cert_insert_delete, cert_swap, cert_two_sided, median


def default_k(n: int) -> int:
    """Odd integer nearest ``n / 2``, preferring the larger one on ties."""
    half = n / 2
    below = 2 * math.floor((half - 1) / 2) + 1
    above = below + 2
    k = above if above - half <= half - below else below
    return max(1, min(k, n if n % 2 else n - 1))


@dataclass(frozen=True)
class NeighborModel:
    X: np.ndarray          # min-max normalised training features
    y: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    k: Optional[int] = None
    radius: Optional[float] = None
    p: float = 2.0

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    @property
    def fixed_k(self) -> bool:
        return self.k is not None

    def normalize(self, X) -> np.ndarray:
        return normalize(X, self.mins, self.maxs)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([median(neighborhood(self, x)) for x in X])


def normalize(X, mins, maxs, clip: bool = True) -> np.ndarray:
    """Min-max scale each column; constant columns map to 0."""
    X = np.asarray(X, dtype=float)
    span = maxs - mins
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - mins) / safe, 0.0)
    return np.clip(Z, 0.0, 1.0) if clip else Z


def fit_neighbor_model(X, y, k: Optional[int] = None, radius: Optional[float] = None,
                       p: float = 2.0) -> NeighborModel:
    """Memorise normalised training data.

    Give ``radius`` for a region-based model; otherwise a fixed-``k`` model
    is built, with ``k`` defaulting to the odd integer nearest ``n / 2``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if n < 1:
        raise ValueError("empty training set")
    if X.shape[0] != n:
        raise ValueError(f"{X.shape[0]} feature rows but {n} targets")
    if not p > 0:
        raise ValueError("Minkowski order p must be positive")
    if k is not None and radius is not None:
        raise ValueError("give either k or radius, not both")
    if radius is not None:
        if not radius > 0:
            raise ValueError("radius must be positive")
    else:
        k = default_k(n) if k is None else int(k)
        if k < 1 or k % 2 == 0:
            raise ValueError(f"k must be a positive odd integer, got {k}")
        if k > n:
            raise ValueError(f"k={k} exceeds the training set size {n}")
    mins, maxs = X.min(axis=0), X.max(axis=0)
    Xn = normalize(X, mins, maxs)
    for arr in (Xn, y, mins, maxs):
        arr.setflags(write=False)
    return NeighborModel(Xn, y, mins, maxs, k, None if radius is None else float(radius), float(p))


def distances(model: NeighborModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.d:
        raise ValueError(f"query has {x.size} features, model expects {model.d}")
    diff = np.abs(model.X - model.normalize(x))
    if math.isinf(model.p):
        return diff.max(axis=1)
    return (diff ** model.p).sum(axis=1) ** (1.0 / model.p)


def neighbor_indices(model: NeighborModel, x) -> np.ndarray:
    """Stored-instance indices in ``x``'s neighbourhood.

    Fixed-``k`` ties at the ``k``-th distance go to the lowest indices.
    Runs in linear time (selection, no full sort).
    """
    dist = distances(model, x)
    if not model.fixed_k:
        return np.nonzero(dist <= model.radius)[0]
    k = model.k
    kth = np.partition(dist, k - 1)[k - 1]
    inside = np.nonzero(dist < kth)[0]
    on_edge = np.nonzero(dist == kth)[0][: k - inside.size]
    return np.sort(np.concatenate([inside, on_edge]))


def neighborhood(model: NeighborModel, x) -> np.ndarray:
    """Targets of ``x``'s neighbours (possibly empty for radius models)."""
    return model.y[neighbor_indices(model, x)]


def _require(model: NeighborModel, fixed: bool):
    if model.fixed_k != fixed:
        want = "fixed-k" if fixed else "radius"
        raise ValueError(f"this certifier needs a {want} neighbour model")


def cert_knn(model: NeighborModel, x, xi: float) -> Certificate:
    """Certify ``median(kNN targets) <= xi``; insertions act as swaps."""
    _require(model, fixed=True)
    return cert_swap(VoteSet(neighborhood(model, x), xi))


def cert_rnn(model: NeighborModel, x, xi: float, tight: bool = False) -> Certificate:
    """Certify ``median(radius-neighbour targets) <= xi`` under insertion/deletion."""
    _require(model, fixed=False)
    return cert_insert_delete(VoteSet(neighborhood(model, x), xi), tight=tight)


def cert_neighbors_two_sided(model: NeighborModel, x, xi_low: float, xi_up: float,
                             tight: bool = False) -> Certificate:
    paradigm = Paradigm.SWAP if model.fixed_k else Paradigm.INSERT_DELETE
    return cert_two_sided(neighborhood(model, x), xi_low, xi_up, paradigm, tight=tight)
