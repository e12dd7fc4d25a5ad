"""Brute-force attack enumeration on small instances.

These compute the true optimal robustness by trying every choice of which
votes to attack, so they share no code with the closed forms they check.
The only modelling shortcut is that an attacker inserts or substitutes
``+inf``: the median is monotone in every element, so no other value does
better.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .median import VoteSet, WeightedVoteSet


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AttackBudgetResult:
    """``optimal_R`` is ``None`` when the unperturbed median already violates ``xi``.

    ``witness`` describes a cheapest successful attack; it spends exactly
    ``optimal_R + 1``.
    """

    optimal_R: Optional[int]
    witness: dict = field(default_factory=dict)

    @property
    def robust(self) -> bool:
        return self.optimal_R is not None


def _guard(condition: bool, message: str):
    if not condition:
        raise InstanceTooLarge(message)


def _subset_masks(n: int) -> np.ndarray:
    """All 2**n boolean subset masks, one per row."""
    codes = np.arange(2 ** n, dtype=np.int64)[:, None]
    return ((codes >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def _row_medians(rows: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Median of each sorted row's first ``sizes[i]`` entries (empty -> inf)."""
    out = np.full(rows.shape[0], np.inf)
    nz = sizes > 0
    idx = np.nonzero(nz)[0]
    k = sizes[nz]
    lo = rows[idx, (k - 1) // 2]
    hi = rows[idx, k // 2]
    out[idx] = (lo + hi) / 2
    return out


def _swap_costs(values: np.ndarray, xi: float, costs: np.ndarray):
    """Cheapest subset whose replacement by +inf lifts the median above xi."""
    T = values.size
    masks = _subset_masks(T)
    attacked = np.where(masks, np.inf, values[None, :])
    attacked.sort(axis=1)
    med = attacked[:, T // 2]
    spend = masks.astype(np.int64) @ costs
    success = med > xi
    if success[0]:
        return None, None
    best = int(np.argmin(np.where(success, spend, np.iinfo(np.int64).max)))
    return int(spend[best]), np.nonzero(masks[best])[0]


def oracle_swap(votes: VoteSet, max_T: int = 15) -> AttackBudgetResult:
    _guard(votes.T % 2 == 1, "swap oracle needs odd T")
    _guard(votes.T <= max_T, f"T={votes.T} exceeds the swap oracle limit {max_T}")
    cost, which = _swap_costs(votes.values, votes.xi, np.ones(votes.T, dtype=np.int64))
    if cost is None:
        return AttackBudgetResult(None)
    return AttackBudgetResult(cost - 1, {"swapped": which.tolist()})


def oracle_weighted_swap(wvotes: WeightedVoteSet, max_T: int = 11,
                         max_cost: int = 6) -> AttackBudgetResult:
    votes = wvotes.votes
    _guard(votes.T % 2 == 1, "swap oracle needs odd T")
    _guard(votes.T <= max_T, f"T={votes.T} exceeds the weighted oracle limit {max_T}")
    _guard(int(wvotes.costs.max(initial=0)) <= max_cost,
           f"costs exceed the weighted oracle limit {max_cost}")
    cost, which = _swap_costs(votes.values, votes.xi, wvotes.costs)
    if cost is None:
        return AttackBudgetResult(None)
    return AttackBudgetResult(cost - 1, {"swapped": which.tolist(), "spent": cost})


def oracle_insert_delete(votes: VoteSet, max_T: int = 15) -> AttackBudgetResult:
    """Optimal robustness when each modification inserts or deletes one vote.

    Every subset of votes is tried as the deletion set; for each, +inf
    insertions are added one at a time until the median exceeds ``xi``.
    """
    T = votes.T
    _guard(T <= max_T, f"T={T} exceeds the insert/delete oracle limit {max_T}")
    xi = votes.xi
    if T == 0:
        return AttackBudgetResult(None)
    masks = _subset_masks(T)
    kept = np.where(masks, np.nan, votes.values[None, :])
    kept.sort(axis=1)  # NaN (deleted) sorts last
    n_kept = T - masks.sum(axis=1)
    n_del = masks.sum(axis=1)
    # inserted +inf values sit between the kept finite values and the NaN tail
    width = 2 * T + 2
    rows = np.full((kept.shape[0], width), np.inf)
    rows[:, :T] = kept
    col = np.arange(width)[None, :]
    rows[col >= n_kept[:, None]] = np.inf

    best_total, best = None, None
    for n_ins in range(width - T + 1):
        med = _row_medians(rows, n_kept + n_ins)
        hit = np.nonzero(med > xi)[0]
        if hit.size:
            totals = n_del[hit] + n_ins
            j = int(np.argmin(totals))
            if best_total is None or totals[j] < best_total:
                best_total = int(totals[j])
                best = (np.nonzero(masks[hit[j]])[0].tolist(), n_ins)
    assert best_total is not None  # deleting everything always succeeds
    if best_total == 0:
        return AttackBudgetResult(None)
    return AttackBudgetResult(best_total - 1, {"deleted": best[0], "inserted": best[1]})


def _cover_dp(instance):
    """Minimum total block modification reaching the required submodel cover.

    Dynamic program over per-submodel coverage vectors (each capped at its
    demand); independent of the branch-and-bound search.
    """
    models = sorted(instance.blocks_of)
    if not models:
        return 0 if instance.required_cover <= 0 else None
    demands = np.array([instance.r[t] for t in models], dtype=np.int64)
    radix = demands + 1
    n_states = int(np.prod(radix))
    strides = np.concatenate([[1], np.cumprod(radix[:-1])]).astype(np.int64)
    states = np.arange(n_states, dtype=np.int64)
    cov = (states[:, None] // strides[None, :]) % radix[None, :]

    INF = np.iinfo(np.int64).max // 4
    cost = np.full(n_states, INF, dtype=np.int64)
    cost[0] = 0
    for block in range(instance.m):
        inc = np.array([block in instance.blocks_of[t] for t in models], dtype=np.int64)
        if not inc.any():
            continue
        new_cost = cost.copy()
        for w in range(1, instance.r_max + 1):
            nxt = np.minimum(cov + w * inc[None, :], demands[None, :]) @ strides
            cand = np.where(cost < INF, cost + w, INF)
            np.minimum.at(new_cost, nxt, cand)
        cost = new_cost
    covered = (cov >= demands[None, :]).sum(axis=1)
    feasible = covered >= instance.required_cover
    best = int(cost[feasible].min()) if feasible.any() else None
    return best


def oracle_overlap(instance, max_m: int = 14, max_T: int = 11, max_r: int = 3) -> AttackBudgetResult:
    """Exact optimum of the partial set multicover program (objective minus sigma)."""
    _guard(instance.m <= max_m, f"m={instance.m} exceeds the overlap oracle limit {max_m}")
    _guard(instance.T <= max_T, f"T={instance.T} exceeds the overlap oracle limit {max_T}")
    _guard(instance.r_max <= max_r, f"r_max={instance.r_max} exceeds the overlap oracle limit {max_r}")
    best = _cover_dp(instance)
    if best is None:
        raise ValueError("cover instance is infeasible")
    return AttackBudgetResult(best - instance.sigma, {"blocks_modified": best})


def oracle_overlap_attack(predictions, xi: float, model_blocks, m: int,
                          costs=None, max_m: int = 12) -> AttackBudgetResult:
    """True worst-case robustness of a median ensemble over shared blocks.

    Enumerates every allocation of modifications to blocks (each block
    receiving at most ``max(costs)``); submodel ``t`` flips above ``xi``
    once its blocks have received ``costs[t]`` modifications in total.  The
    result is the largest budget no allocation can exploit.
    """
    preds = np.asarray(predictions, dtype=float)
    T = preds.size
    _guard(m <= max_m, f"m={m} exceeds the attack oracle limit {max_m}")
    costs = np.ones(T, dtype=np.int64) if costs is None else np.asarray(costs, dtype=np.int64)
    r_max = int(costs.max(initial=1))
    _guard((r_max + 1) ** m <= 2 ** 22, "search space too large")
    if np.median(preds) > xi:
        return AttackBudgetResult(None)
    incidence = np.zeros((m, T), dtype=np.int64)
    for t, blocks in enumerate(model_blocks):
        for j in blocks:
            incidence[j, t] = 1
    best = None
    for w in itertools.product(range(r_max + 1), repeat=m):
        total = sum(w)
        if best is not None and total >= best[0]:
            continue
        received = np.asarray(w, dtype=np.int64) @ incidence
        flipped = (preds <= xi) & (received >= costs)
        attacked = np.where(flipped, np.inf, preds)
        if np.sort(attacked)[T // 2] > xi:
            best = (total, w)
    assert best is not None
    return AttackBudgetResult(best[0] - 1, {"block_modifications": list(best[1])})



def _label_counts(labels) -> list:
    """(label, count) pairs sorted by count descending."""
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    return sorted(zip(values.tolist(), counts.tolist()), key=lambda vc: -vc[1])


def jia_knn_bound(labels) -> int:
    """Certified kNN classifier bound on a neighbourhood's labels.

    ``ceil((n_c - n_c' + [c > c']) / 2) - 1`` with ``c`` the plurality label
    (ties to the larger label) and ``c'`` the runner-up.
    """
    counts = _label_counts(labels)
    top = max(cnt for _, cnt in counts)
    c = max(lab for lab, cnt in counts if cnt == top)
    rest = [(lab, cnt) for lab, cnt in counts if lab != c]
    if not rest:
        return math.ceil((top + 1) / 2) - 1
    second = max(cnt for _, cnt in rest)
    c2 = max(lab for lab, cnt in rest if cnt == second)
    return math.ceil((top - second + (1 if c > c2 else 0)) / 2) - 1


def dpa_bound(labels) -> int:
    """Deep partition aggregation bound on submodel votes.

    ``floor((n_c - max_{c' != c} (n_c' + [c' < c])) / 2)`` with ties going to
    the smaller label.
    """
    counts = _label_counts(labels)
    top = max(cnt for _, cnt in counts)
    c = min(lab for lab, cnt in counts if cnt == top)
    others = [cnt + (1 if lab < c else 0) for lab, cnt in counts if lab != c]
    # an absent label counts as zero votes; it ties the comparison only if smaller
    runner = max(others) if others else 0
    return (top - runner) // 2
