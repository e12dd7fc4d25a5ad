"""Median-of-submodels ensembles and their partitioned certifiers."""
from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

from .ibl import NeighborModel
from .median import (Certificate, Paradigm, Side, ThreatModel, VoteSet, WeightedVoteSet,
                     cert_swap, cert_two_sided, cert_weighted_swap, combine_two_sided,
                     median)
from .partition import (BlockMapping, PartitionAssignment, build_block_mapping, model_indices,
                        partition_train)


@dataclass(frozen=True)
class CostProfile:
    """Per-submodel costs ``r_t`` for one side of a bound.

    Submodels whose prediction already violates the bound carry cost 0.
    """

    costs: np.ndarray
    threat_model: ThreatModel = ThreatModel.INSERT_DELETE

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=np.int64).reshape(-1)
        if np.any(c < 0):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "costs", c)


@dataclass(frozen=True)
class EnsembleModel:
    submodels: tuple
    partition: PartitionAssignment
    mapping: BlockMapping
    spec: object
    seed: int
    rows: tuple  # training-row indices of each submodel

    @property
    def T(self) -> int:
        return len(self.submodels)

    def predictions(self, X) -> np.ndarray:
        """Submodel predictions, shape ``(n_queries, T)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([np.asarray(g.predict(X), dtype=float) for g in self.submodels])

    def predict(self, X) -> np.ndarray:
        return np.median(self.predictions(X), axis=1)


def _check_spec(spec):
    if isinstance(spec, NeighborModel) or getattr(spec, "instance_based", False):
        # an ensemble of kNN medians roughly halves robustness versus one kNN
        # model over all the data, so this combination is refused outright
        raise TypeError("instance-based learners are not supported as ensemble submodels; "
                        "certify a single neighbour model with cert_knn/cert_rnn instead")
    if not hasattr(spec, "fit"):
        raise TypeError("submodel spec must provide fit(X, y)")


def train_ensemble(X, y, partition: PartitionAssignment, mapping: BlockMapping, spec,
                   seed: int = 0) -> EnsembleModel:
    _check_spec(spec)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if mapping.T % 2 == 0:
        raise ValueError(f"ensembles need an odd submodel count, got T={mapping.T}")
    rows = model_indices(partition, mapping)
    submodels = tuple(spec.fit(X[r], y[r]) for r in rows)
    return EnsembleModel(submodels, partition, mapping, spec, int(seed), tuple(rows))


def train_partitioned(X, y, T: int, seed: int, spec) -> EnsembleModel:
    """``T`` submodels, each trained on its own disjoint block."""
    n = len(y)
    if T % 2 == 0:
        raise ValueError(f"T must be odd, got {T}")
    if T > n:
        raise ValueError(f"T={T} exceeds the training set size {n}")
    return train_ensemble(X, y, partition_train(n, T, seed), BlockMapping.disjoint(T), spec, seed)


def train_overlapping(X, y, q: int, d: int, seed: int, spec) -> EnsembleModel:
    """``T = q*d`` submodels over ``q*d`` blocks, each block shared by ``d`` submodels.

    Each submodel therefore trains on about ``1/q`` of the data.
    """
    T = q * d
    n = len(y)
    if T > n:
        raise ValueError(f"q*d={T} exceeds the training set size {n}")
    mapping = build_block_mapping(T, T, d, seed)
    return train_ensemble(X, y, partition_train(n, T, seed), mapping, spec, seed)


def ensemble_predict(model: EnsembleModel, x) -> float:
    return median(model.predictions(x)[0])


def _require_disjoint(model: EnsembleModel):
    if not model.mapping.is_disjoint:
        raise ValueError("partitioned certification needs disjoint submodel training sets")


def cert_pcr(model: EnsembleModel, x, xi: float) -> Certificate:
    """Unit-cost certificate: each modification can flip one submodel."""
    _require_disjoint(model)
    return cert_swap(VoteSet(model.predictions(x)[0], xi))


def _weighted_votes(preds, xi, costs) -> WeightedVoteSet:
    costs = np.asarray(costs, dtype=np.int64).reshape(-1)
    if costs.size != preds.size:
        raise ValueError(f"expected {preds.size} costs, got {costs.size}")
    low = preds <= xi
    if np.any(costs[low] < 1):
        raise ValueError("every submodel predicting at most xi needs a cost >= 1")
    # costs of submodels already above xi never enter the bound
    return WeightedVoteSet(VoteSet(preds, xi), np.where(low, costs, 1))


def _profile(costs) -> CostProfile:
    return costs if isinstance(costs, CostProfile) else CostProfile(costs)


def cert_wpcr(model: EnsembleModel, x, xi: float, costs) -> Certificate:
    """Weighted certificate: submodel ``t`` needs ``costs[t]`` modifications to flip."""
    _require_disjoint(model)
    profile = _profile(costs)
    cert = cert_weighted_swap(_weighted_votes(model.predictions(x)[0], xi, profile.costs))
    return replace(cert, threat_model=profile.threat_model)


def cert_pcr_two_sided(model: EnsembleModel, x, xi_low: float, xi_up: float) -> Certificate:
    _require_disjoint(model)
    return cert_two_sided(model.predictions(x)[0], xi_low, xi_up, Paradigm.SWAP)


def cert_wpcr_two_sided(model: EnsembleModel, x, xi_low: float, xi_up: float,
                        costs_low, costs_up) -> Certificate:
    """Two-sided weighted certificate from per-side cost profiles."""
    _require_disjoint(model)
    low, up = _profile(costs_low), _profile(costs_up)
    preds = model.predictions(x)[0]
    lower = cert_weighted_swap(_weighted_votes(-preds, -xi_low, low.costs))
    upper = cert_weighted_swap(_weighted_votes(preds, xi_up, up.costs))
    return combine_two_sided(replace(lower, side=Side.LOWER, threat_model=low.threat_model),
                             replace(upper, threat_model=up.threat_model))

