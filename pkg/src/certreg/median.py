"""Closed-form robustness of a median against perturbations of its votes.

Every certifier here answers the same question: how many modifications can
be made to a multiset of real-valued votes while guaranteeing its median
stays at or below a threshold ``xi``.  Lower bounds are handled by negation
and two-sided bounds by taking the weaker side.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class Status(enum.Enum):
    CERTIFIED = "certified"
    NOT_ROBUST = "not_robust"


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    TWO_SIDED = "two_sided"


class Provenance(enum.Enum):
    CLOSED_FORM = "closed_form"
    SOLVER_EXACT = "solver_exact"
    SOLVER_LOWER_BOUND = "solver_lower_bound"
    GREEDY_FACTOR = "greedy_factor"


class ThreatModel(enum.Enum):
    INSERT_DELETE = "insert_delete"
    DELETION_ONLY = "deletion_only"


class Paradigm(enum.Enum):
    SWAP = "swap"
    INSERT_DELETE = "insert_delete"
    WEIGHTED_SWAP = "weighted_swap"


@dataclass(frozen=True)
class Certificate:
    """Pointwise robustness of one prediction.

    ``R`` is ``None`` exactly when ``status`` is ``NOT_ROBUST``, i.e. the
    unperturbed prediction already violates its bound.
    """

    status: Status
    R: Optional[int] = None
    side: Side = Side.UPPER
    provenance: Provenance = Provenance.CLOSED_FORM
    threat_model: ThreatModel = ThreatModel.INSERT_DELETE
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.status is Status.CERTIFIED:
            if self.R is None or self.R < 0:
                raise ValueError(f"certified robustness must be a nonnegative int, got {self.R!r}")
        elif self.R is not None:
            raise ValueError("a non-robust certificate carries no R")

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    def at_least(self, psi: int) -> bool:
        """True if the prediction is within bounds and robust to ``psi`` modifications."""
        return self.certified and self.R >= psi

    @classmethod
    def robust(cls, R: int, **kwargs) -> "Certificate":
        return cls(Status.CERTIFIED, int(R), **kwargs)

    @classmethod
    def not_robust(cls, **kwargs) -> "Certificate":
        return cls(Status.NOT_ROBUST, None, **kwargs)


def _as_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if np.isnan(arr).any():
        raise ValueError("votes must not contain NaN")
    return arr


@dataclass(frozen=True)
class VoteSet:
    """Multiset of real votes together with an upper threshold ``xi``.

    Votes equal to ``xi`` count as low votes.
    """

    values: np.ndarray
    xi: float

    def __init__(self, values: Sequence[float], xi: float):
        arr = _as_values(values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "xi", float(xi))

    @property
    def T(self) -> int:
        return int(self.values.size)

    @property
    def low_mask(self) -> np.ndarray:
        return self.values <= self.xi

    @property
    def n_low(self) -> int:
        return int(np.count_nonzero(self.low_mask))

    @property
    def low(self) -> np.ndarray:
        return self.values[self.low_mask]

    @property
    def up(self) -> np.ndarray:
        return self.values[~self.low_mask]

    def negated(self) -> "VoteSet":
        return VoteSet(-self.values, -self.xi)

    def __len__(self):
        return self.T


@dataclass(frozen=True)
class WeightedVoteSet:
    """A :class:`VoteSet` of odd size with one positive integer cost per vote.

    ``costs[t]`` is the number of modifications needed to push vote ``t``
    above ``xi``.
    """

    votes: VoteSet
    costs: np.ndarray

    def __init__(self, votes: VoteSet, costs: Sequence[int]):
        c = np.asarray(costs).reshape(-1)
        if c.size != votes.T:
            raise ValueError(f"expected {votes.T} costs, got {c.size}")
        if c.size and not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValueError("costs must be integers")
        c = c.astype(np.int64)
        if np.any(c < 1):
            raise ValueError("costs must be positive integers")
        c.setflags(write=False)
        object.__setattr__(self, "votes", votes)
        object.__setattr__(self, "costs", c)

    @property
    def low_costs(self) -> np.ndarray:
        return self.costs[self.votes.low_mask]

    @property
    def delta(self) -> int:
        return self.votes.n_low - math.ceil(self.votes.T / 2)


def median(values) -> float:
    """Median of a real multiset; the empty multiset has median ``+inf``.

    Even-sized inputs give the exact midpoint of the two middle order
    statistics.
    """
    arr = _as_values(values)
    n = arr.size
    if n == 0:
        return math.inf
    half = n // 2
    if n % 2:
        return float(np.partition(arr, half)[half])
    part = np.partition(arr, (half - 1, half))
    return (float(part[half - 1]) + float(part[half])) / 2


def _require_odd(votes: VoteSet):
    if votes.T % 2 == 0:
        raise ValueError(f"swap paradigms need an odd number of votes, got {votes.T}")


def cert_swap(votes: VoteSet) -> Certificate:
    """Robustness to arbitrary replacement of votes (fixed odd cardinality)."""
    _require_odd(votes)
    n_low = votes.n_low
    half = math.ceil(votes.T / 2)
    # for odd T, med <= xi  <=>  at least ceil(T/2) low votes
    if n_low < half:
        return Certificate.not_robust()
    return Certificate.robust(n_low - half)


def cert_insert_delete(votes: VoteSet, tight: bool = False) -> Certificate:
    """Robustness to inserting and/or deleting votes.

    The default bound ``2|V_low| - T - 1`` can be one below the true value;
    ``tight=True`` adds the correction that makes it exact.  When the median
    sits on ``xi`` with exactly half the votes low, the default bound is
    negative and is reported as 0.
    """
    if median(votes.values) > votes.xi:
        return Certificate.not_robust()
    n_low = votes.n_low
    R = 2 * n_low - votes.T - 1
    if tight:
        up_min = float(votes.up.min()) if votes.up.size else math.inf
        low_max = float(votes.low.max())
        if median([low_max, up_min]) <= votes.xi:
            R += 1
    return Certificate.robust(max(R, 0))


def cert_weighted_swap(wvotes: WeightedVoteSet) -> Certificate:
    """Robustness to swaps when vote ``t`` costs ``costs[t]`` modifications.

    Sum of the ``delta + 1`` cheapest low-vote costs, minus one.
    """
    votes = wvotes.votes
    _require_odd(votes)
    delta = wvotes.delta
    if delta < 0:
        return Certificate.not_robust()
    low_costs = wvotes.low_costs
    cheapest = np.partition(low_costs, delta)[: delta + 1]
    return Certificate.robust(int(cheapest.sum()) - 1)


def naive_weighted_swap_bound(wvotes: WeightedVoteSet) -> Certificate:
    """Looser weighted bound: only the ``delta`` cheapest costs are counted."""
    votes = wvotes.votes
    _require_odd(votes)
    delta = wvotes.delta
    if delta < 0:
        return Certificate.not_robust()
    return Certificate.robust(int(np.sort(wvotes.low_costs)[:delta].sum()))


def binarize(votes: VoteSet) -> VoteSet:
    """Map each vote to ``+1`` if it exceeds ``xi`` and ``-1`` otherwise; threshold 0."""
    return VoteSet(np.where(votes.values > votes.xi, 1.0, -1.0), 0.0)


def _certify(votes: VoteSet, paradigm: Paradigm, costs=None, tight: bool = False) -> Certificate:
    paradigm = Paradigm(paradigm)
    if paradigm is Paradigm.SWAP:
        return cert_swap(votes)
    if paradigm is Paradigm.INSERT_DELETE:
        return cert_insert_delete(votes, tight=tight)
    if costs is None:
        raise ValueError("weighted swap certification needs per-vote costs")
    return cert_weighted_swap(WeightedVoteSet(votes, costs))


def cert_lower_side(values, xi_low: float, paradigm=Paradigm.SWAP, costs=None,
                    tight: bool = False) -> Certificate:
    """Certify ``median(values) >= xi_low`` by negating votes and threshold.

    ``costs`` here are the lower-side costs (modifications needed to push
    each vote below ``xi_low``).
    """
    cert = _certify(VoteSet(-_as_values(values), -xi_low), paradigm, costs, tight)
    return _with_side(cert, Side.LOWER)


def cert_upper_side(values, xi_up: float, paradigm=Paradigm.SWAP, costs=None,
                    tight: bool = False) -> Certificate:
    return _certify(VoteSet(values, xi_up), paradigm, costs, tight)


def _with_side(cert: Certificate, side: Side) -> Certificate:
    return Certificate(cert.status, cert.R, side, cert.provenance, cert.threat_model,
                       cert.diagnostics)


def combine_two_sided(lower: Certificate, upper: Certificate) -> Certificate:
    """The weaker of two one-sided certificates."""
    threat = (ThreatModel.DELETION_ONLY
              if ThreatModel.DELETION_ONLY in (lower.threat_model, upper.threat_model)
              else ThreatModel.INSERT_DELETE)
    provenance = _weakest_provenance(lower.provenance, upper.provenance)
    if not (lower.certified and upper.certified):
        return Certificate.not_robust(side=Side.TWO_SIDED, provenance=provenance,
                                      threat_model=threat)
    return Certificate.robust(min(lower.R, upper.R), side=Side.TWO_SIDED,
                              provenance=provenance, threat_model=threat)


_PROVENANCE_ORDER = [Provenance.CLOSED_FORM, Provenance.SOLVER_EXACT,
                     Provenance.SOLVER_LOWER_BOUND, Provenance.GREEDY_FACTOR]


def _weakest_provenance(a: Provenance, b: Provenance) -> Provenance:
    return max(a, b, key=_PROVENANCE_ORDER.index)


def cert_two_sided(values, xi_low: float, xi_up: float, paradigm=Paradigm.SWAP,
                   costs_low=None, costs_up=None, tight: bool = False) -> Certificate:
    """Certify ``xi_low <= median(values) <= xi_up``."""
    if xi_low > xi_up:
        raise ValueError(f"xi_low={xi_low} exceeds xi_up={xi_up}")
    lower = cert_lower_side(values, xi_low, paradigm, costs_low, tight)
    upper = cert_upper_side(values, xi_up, paradigm, costs_up, tight)
    return combine_two_sided(lower, upper)
