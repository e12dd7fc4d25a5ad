"""Per-submodel deletion costs by exhaustive retraining.

A submodel predicting at most ``xi`` gets cost ``r`` when no deletion of
fewer than ``r`` of its training instances pushes its prediction above
``xi``.  The guarantee only covers deletions, so every profile built here
is tagged ``DELETION_ONLY``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ensemble import CostProfile, EnsembleModel
from .median import ThreatModel

MAX_RETRAININGS = 50_000


@dataclass(frozen=True)
class DeletionFamily:
    """A submodel retrained on its data minus every subset of size ``< r_cap``.

    ``levels[j]`` holds the models with ``j + 1`` instances removed; a model
    that could not be trained is stored as ``None`` and treated as flipped.
    """

    full: object
    levels: tuple
    r_cap: int

    def costs(self, X, xi) -> np.ndarray:
        """Deletion costs at each query row against thresholds ``xi`` (upper side)."""
        return self._costs(X, xi, sign=1.0)

    def costs_lower(self, X, xi_low) -> np.ndarray:
        """Costs of pushing the prediction below ``xi_low``."""
        return self._costs(X, xi_low, sign=-1.0)

    def _costs(self, X, xi, sign) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        xi = np.broadcast_to(np.asarray(xi, dtype=float), (X.shape[0],))
        out = np.where(sign * self.full.predict(X) > sign * xi, 0, self.r_cap)
        for j, models in enumerate(self.levels, start=1):
            live = out > j
            if not live.any():
                break
            flipped = np.zeros(X.shape[0], dtype=bool)
            for g in models:
                if g is None:
                    flipped[:] = True
                    break
                flipped |= sign * np.asarray(g.predict(X), dtype=float) > sign * xi
            out = np.where(live & flipped, j, out)
        return out.astype(np.int64)


def _fit(trainer, X, y):
    try:
        return trainer.fit(X, y)
    except (ValueError, np.linalg.LinAlgError):
        return None


def retraining_count(n: int, r_cap: int) -> int:
    return sum(math.comb(n, j) for j in range(1, min(r_cap, n + 1)))


def deletion_family(trainer, X, y, r_cap: int = 2) -> DeletionFamily:
    """Train the full model and all models missing fewer than ``r_cap`` instances.

    The effective cap is ``min(r_cap, n)``: removing every instance leaves
    nothing to train on.
    """
    if r_cap < 1:
        raise ValueError("r_cap must be at least 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if n < 1:
        raise ValueError("empty submodel training set")
    cap = min(r_cap, n)
    count = retraining_count(n, cap)
    if count > MAX_RETRAININGS:
        raise ValueError(f"r_cap={r_cap} needs {count} retrainings for n={n} "
                         f"(limit {MAX_RETRAININGS}); lower r_cap")
    full = trainer.fit(X, y)
    levels = []
    for j in range(1, cap):
        keep_sets = (np.setdiff1d(np.arange(n), drop) for drop in
                     itertools.combinations(range(n), j))
        levels.append(tuple(_fit(trainer, X[k], y[k]) for k in keep_sets))
    return DeletionFamily(full, tuple(levels), cap)


def compute_deletion_cost(trainer, X, y, x, xi: float, r_cap: int = 2) -> int:
    """Deletions needed to push the submodel trained on ``(X, y)`` above ``xi`` at ``x``.

    Returns 0 when the full model already predicts above ``xi``, otherwise
    the smallest deletion-set size that does (capped at ``r_cap``).
    """
    family = deletion_family(trainer, X, y, r_cap)
    return int(family.costs(np.atleast_2d(np.asarray(x, dtype=float)), xi)[0])


def ensemble_families(model: EnsembleModel, X, y, r_cap: int = 2) -> list:
    """Deletion families of every submodel, built once and reused across queries."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    return [deletion_family(model.spec, X[rows], y[rows], r_cap) for rows in model.rows]


def cost_profiles(families, x, xi_low: float, xi_up: float) -> tuple:
    """``(lower, upper)`` deletion-only cost profiles for one query."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    low = np.array([f.costs_lower(x, xi_low)[0] for f in families])
    up = np.array([f.costs(x, xi_up)[0] for f in families])
    return (CostProfile(low, ThreatModel.DELETION_ONLY),
            CostProfile(up, ThreatModel.DELETION_ONLY))
