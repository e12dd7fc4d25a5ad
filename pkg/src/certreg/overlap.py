"""Certification of ensembles whose submodels share training blocks.

The attacker chooses how many modifications ``w_j`` to spend on each block;
submodel ``t`` flips once its blocks have received ``r_t`` in total.  The
cheapest allocation flipping enough submodels is a partial set multicover
problem, solved here by a small depth-first branch and bound:

    minimise   sum_j w_j - sigma
    subject to sum_{t in T_low} x_t >= required_cover
               r_t x_t <= sum_{j in D_t} w_j
               x_t in {0, 1},  w_j in {0, ..., r_max}

with ``required_cover = |T_low| - ceil(T/2) + sigma`` and
``sigma = [r_max > 1]``.  Only proven lower bounds on the optimum are ever
reported as certificates.

With unit costs (``sigma = 0``) the plain program only asks for ``Delta``
flipped submodels, whereas the attack needs ``Delta + 1``.  On disjoint
blocks the two agree, but a block shared by several submodels can flip
them together, so the certifiers default to the strict form that demands
``Delta + 1`` and subtracts one, exactly like the weighted case.
"""
from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from .median import Certificate, Provenance, Side, ThreatModel, combine_two_sided, median
from .partition import BlockMapping

DEFAULT_TIME_LIMIT = 1200.0


class NotRobustError(ValueError):
    """The unperturbed median already exceeds the threshold."""


@dataclass(frozen=True)
class CoverInstance:
    """Partial set multicover program for one prediction.

    ``blocks_of`` maps every submodel in ``T_low`` to the blocks it trains
    on; ``r`` gives its cost.  With ``strict`` the cover requirement is one
    higher than the plain formulation and one is subtracted from the
    optimum, which also covers unit costs (see :func:`build_cover_instance`).
    """

    m: int
    T: int
    required_cover: int
    sigma: int
    r_max: int
    blocks_of: Mapping[int, frozenset]
    r: Mapping[int, int]
    strict: bool = False

    def __post_init__(self):
        if set(self.blocks_of) != set(self.r):
            raise ValueError("blocks_of and r must cover the same submodels")
        if self.sigma not in (0, 1):
            raise ValueError("sigma must be 0 or 1")
        if not self.strict and self.sigma != int(self.r_max > 1):
            raise ValueError(f"sigma={self.sigma} inconsistent with r_max={self.r_max}")
        if self.required_cover > len(self.blocks_of):
            raise ValueError("required cover exceeds the number of coverable submodels")
        for t, blocks in self.blocks_of.items():
            if not blocks:
                raise ValueError(f"submodel {t} has no blocks")
            if any(not 0 <= j < self.m for j in blocks):
                raise ValueError(f"submodel {t} references a block outside [0, {self.m})")
            if not 1 <= self.r[t] <= self.r_max:
                raise ValueError(f"cost of submodel {t} must lie in [1, r_max]")

    @property
    def T_low(self) -> list:
        return sorted(self.blocks_of)

    @property
    def delta(self) -> int:
        return self.required_cover - self.sigma

    @property
    def d_max(self) -> int:
        """Most ``T_low`` submodels sharing one block (0 for an empty instance)."""
        deg = np.zeros(self.m, dtype=np.int64)
        for blocks in self.blocks_of.values():
            deg[list(blocks)] += 1
        return int(deg.max(initial=0))

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"{self.m} {self.T} {self.required_cover} {self.sigma} {self.r_max}\n")
        for t in self.T_low:
            out.write(f"{t} {self.r[t]}  {' '.join(str(j) for j in sorted(self.blocks_of[t]))}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "CoverInstance":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty instance")
        header = lines[0].split()
        if len(header) != 5:
            raise ValueError("header must read: m T required_cover sigma r_max")
        m, T, required, sigma, r_max = (int(v) for v in header)
        blocks_of, r = {}, {}
        for lineno, line in enumerate(lines[1:], start=2):
            fields = [int(v) for v in line.split()]
            if len(fields) < 3:
                raise ValueError(f"line {lineno}: expected 't r_t b1 b2 ...'")
            t, cost, blocks = fields[0], fields[1], fields[2:]
            if t in blocks_of:
                raise ValueError(f"line {lineno}: submodel {t} listed twice")
            blocks_of[t] = frozenset(blocks)
            r[t] = cost
        strict = sigma == 1 and r_max == 1
        return cls(m, T, required, sigma, r_max, blocks_of, r, strict)


def read_instance(path) -> CoverInstance:
    with open(path) as fh:
        return CoverInstance.from_text(fh.read())


def write_instance(instance: CoverInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance.to_text())


def cover_instance_from_predictions(predictions, xi: float, mapping: BlockMapping,
                                    costs=None, strict: bool = False) -> CoverInstance:
    """Cover program for an ensemble whose submodels predicted ``predictions``.

    Unit costs give the plain program.  Set ``strict`` to demand one more
    flipped submodel than the plain program and subtract one, which equals
    the true minimum attack cost minus one even when blocks are shared.
    """
    preds = np.asarray(predictions, dtype=float).reshape(-1)
    T = preds.size
    if T != mapping.T:
        raise ValueError(f"{T} predictions for a mapping with {mapping.T} submodels")
    if median(preds) > xi:
        raise NotRobustError(f"median prediction {median(preds)} already exceeds {xi}")
    low = np.nonzero(preds <= xi)[0]
    if costs is None:
        costs = np.ones(T, dtype=np.int64)
    costs = np.asarray(costs, dtype=np.int64).reshape(-1)
    if costs.size != T:
        raise ValueError(f"expected {T} costs, got {costs.size}")
    if np.any(costs[low] < 1):
        raise ValueError("every submodel predicting at most xi needs a cost >= 1")
    r = {int(t): int(costs[t]) for t in low}
    r_max = max(r.values(), default=1)
    sigma = 1 if (r_max > 1 or strict) else 0
    required = low.size - math.ceil(T / 2) + sigma
    blocks_of = {int(t): frozenset(mapping.model_blocks[t]) for t in low}
    return CoverInstance(mapping.m, T, required, sigma, r_max, blocks_of, r, strict)


@dataclass(frozen=True)
class CoverSolution:
    certified_R: int          # proven lower bound on the optimum, sigma already subtracted
    exact: bool
    incumbent_cost: Optional[int]
    lower_bound: int          # proven bound on sum_j w_j
    elapsed: float
    node_count: int
    allocation: Optional[tuple] = field(default=None, compare=False)  # w_j of the incumbent


class _Problem:
    """Index-compressed view of a cover instance for the search."""

    def __init__(self, inst: CoverInstance):
        self.models = inst.T_low
        self.demand = np.array([inst.r[t] for t in self.models], dtype=np.int64)
        used = sorted(set().union(*inst.blocks_of.values())) if self.models else []
        inc = np.zeros((len(used), len(self.models)), dtype=bool)
        for k, t in enumerate(self.models):
            for j in inst.blocks_of[t]:
                inc[used.index(j), k] = True
        coverage = inc.sum(axis=1)
        order = sorted(range(len(used)), key=lambda b: (-coverage[b], used[b]))
        self.blocks = [used[b] for b in order]
        self.inc = inc[order]
        self.r_max = inst.r_max
        self.need = inst.required_cover
        self.m = inst.m
        # remaining[k, t]: blocks from position k onwards that feed submodel t
        self.remaining = np.vstack([np.cumsum(self.inc[::-1], axis=0)[::-1],
                                    np.zeros((1, len(self.models)), dtype=np.int64)])

    def bound(self, depth: int, cov: np.ndarray, cost: int) -> float:
        """Admissible lower bound on the total spend of any completion."""
        done = cov >= self.demand
        need = self.need - int(done.sum())
        if need <= 0:
            return cost
        deficit = self.demand - cov
        open_ = (~done) & (self.remaining[depth] * self.r_max >= deficit)
        if int(open_.sum()) < need:
            return math.inf
        # Dual prices: a unit on block j advances at most min(c_j, need) of the
        # submodels finally flipped, so pricing submodel t at deficit_t over its
        # best rate max_{j in D_t} min(c_j, need) never overcharges a unit.
        rate = np.minimum(self.inc[depth:][:, open_].sum(axis=1), need)
        feeds = self.inc[depth:][:, open_]
        best = np.where(feeds, rate[:, None], 0).max(axis=0, initial=0)
        if np.any(best == 0):
            return math.inf
        prices = np.sort(deficit[open_] / best)[:need]
        return cost + math.ceil(float(prices.sum()) - 1e-9)

    def greedy(self) -> tuple:
        """Feasible allocation: repeatedly add one unit where it helps most."""
        w = np.zeros(len(self.blocks), dtype=np.int64)
        cov = np.zeros(len(self.models), dtype=np.int64)
        while int((cov >= self.demand).sum()) < self.need:
            open_ = cov < self.demand
            # prefer units that complete a submodel, then units that reduce deficits
            completes = (self.inc & (open_ & (self.demand - cov == 1))[None, :]).sum(axis=1)
            helps = (self.inc & open_[None, :]).sum(axis=1)
            score = np.where(w < self.r_max, completes * (len(self.models) + 1) + helps, -1)
            b = int(np.argmax(score))
            if score[b] <= 0:
                raise AssertionError("cover instance is infeasible")
            w[b] += 1
            cov = cov + self.inc[b]
        return int(w.sum()), w


def _allocation(prob: _Problem, w_order) -> tuple:
    full = [0] * prob.m
    for b, j in enumerate(prob.blocks):
        full[j] = int(w_order[b])
    return tuple(full)


def solve_ilp_bb(instance: CoverInstance, time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
                 node_limit: Optional[int] = None) -> CoverSolution:
    """Exact or anytime-bounded solve of the cover program.

    The search branches on block variables in order of descending coverage.
    When the time or node limit is hit, the smallest bound among unexplored
    nodes (or the incumbent, if smaller) is reported with ``exact=False``.
    """
    start = time.perf_counter()
    sigma = instance.sigma
    if instance.required_cover <= 0:
        return CoverSolution(max(0 - sigma, 0), True, 0, 0, time.perf_counter() - start, 0,
                             (0,) * instance.m)
    prob = _Problem(instance)
    best_cost, best_w = prob.greedy()
    nb = len(prob.blocks)

    root_cov = np.zeros(len(prob.models), dtype=np.int64)
    root_lb = prob.bound(0, root_cov, 0)
    assert root_lb < math.inf, "cover instance is infeasible"
    # stack entries: (bound, depth, coverage, cost, w-prefix)
    stack = [(root_lb, 0, root_cov, 0, ())]
    nodes = 0
    stopped = False
    deadline = None if time_limit is None else start + float(time_limit)
    while stack:
        if (node_limit is not None and nodes >= node_limit) or (
                deadline is not None and nodes % 64 == 0 and time.perf_counter() > deadline):
            stopped = True
            break
        lb, depth, cov, cost, prefix = stack.pop()
        nodes += 1
        if lb >= best_cost:
            continue
        if int((cov >= prob.demand).sum()) >= prob.need:
            best_cost, best_w = cost, np.array(prefix + (0,) * (nb - depth), dtype=np.int64)
            continue
        if depth == nb:
            continue
        feeds = prob.inc[depth]
        top = int((prob.demand - cov)[feeds].clip(min=0).max(initial=0))
        children = []
        for w in range(min(prob.r_max, top), -1, -1):
            child_cov = np.minimum(cov + w * feeds, prob.demand)
            child_lb = max(prob.bound(depth + 1, child_cov, cost + w), lb)
            if child_lb < best_cost:
                children.append((child_lb, depth + 1, child_cov, cost + w, prefix + (w,)))
        # pop the most promising child first: smallest bound, then largest spend
        children.sort(key=lambda c: (-c[0], -c[3]))
        stack.extend(children)

    if stopped:
        lower = min([best_cost] + [s[0] for s in stack])
        lower = int(lower)
        exact = lower == best_cost
    else:
        lower, exact = best_cost, True
    return CoverSolution(max(lower - sigma, 0), exact, best_cost, lower,
                         time.perf_counter() - start, nodes, _allocation(prob, best_w))


def harmonic(n: int) -> float:
    return sum(1.0 / i for i in range(1, n + 1))


def greedy_factor(delta: int, d_max: int) -> float:
    """Approximation factor ``min(H_dmax, ln D - ln ln D + 3 + ln ln 32 - ln 32)``."""
    if delta < 2:
        raise ValueError("the greedy factor needs delta >= 2")
    second = math.log(delta) - math.log(math.log(delta)) + 3 + math.log(math.log(32)) - math.log(32)
    return min(harmonic(d_max), second)


@dataclass(frozen=True)
class GreedyCover:
    G: int
    bound: Optional[int]      # None when delta < 2
    factor: Optional[float]
    blocks: tuple             # chosen blocks in pick order


def greedy_partial_cover(instance: CoverInstance) -> GreedyCover:
    """Classic greedy cover and the lower bound it implies.

    Ties go to the lowest block index.  ``d_max`` is taken over the
    instance's own submodels, which is what the factor's analysis uses.
    """
    if instance.r_max != 1 or instance.sigma != 0:
        raise ValueError("greedy partial cover needs unit costs and sigma = 0")
    need = instance.required_cover
    uncovered = set(instance.T_low)
    chosen = []
    while len(instance.blocks_of) - len(uncovered) < need:
        gains = [(sum(1 for t in uncovered if j in instance.blocks_of[t]), -j)
                 for j in range(instance.m)]
        gain, neg_j = max(gains)
        if gain == 0:
            raise AssertionError("cover instance is infeasible")
        chosen.append(-neg_j)
        uncovered = {t for t in uncovered if -neg_j not in instance.blocks_of[t]}
    G = len(chosen)
    if need < 2:
        return GreedyCover(G, None, None, tuple(chosen))
    factor = greedy_factor(need, instance.d_max)
    return GreedyCover(G, math.ceil(G / factor - 1e-12), factor, tuple(chosen))


def psmc_factor(T: int, d_max: int, delta: int) -> float:
    """Reported approximation factor of a multicover algorithm, for reference only.

    ``4 lg T H_dmax ln delta + 2 lg T sqrt(T)``; nothing here certifies with it.
    """
    if T < 1 or delta < 1:
        raise ValueError("T and delta must be positive")
    lg = math.log2(T)
    return 4 * lg * harmonic(d_max) * math.log(delta) + 2 * lg * math.sqrt(T)


def certify_overlap(predictions, xi: float, mapping: BlockMapping, costs=None,
                    time_limit: Optional[float] = DEFAULT_TIME_LIMIT, strict: bool = True,
                    threat_model: ThreatModel = ThreatModel.INSERT_DELETE,
                    node_limit: Optional[int] = None) -> Certificate:
    """One-sided certificate that ``median(predictions) <= xi``."""
    try:
        instance = cover_instance_from_predictions(predictions, xi, mapping, costs, strict)
    except NotRobustError:
        return Certificate.not_robust(provenance=Provenance.SOLVER_EXACT, threat_model=threat_model)
    sol = solve_ilp_bb(instance, time_limit, node_limit)
    prov = Provenance.SOLVER_EXACT if sol.exact else Provenance.SOLVER_LOWER_BOUND
    return Certificate.robust(sol.certified_R, provenance=prov, threat_model=threat_model,
                              diagnostics={"solution": sol, "instance": instance})


def _costs_and_threat(costs):
    if costs is None:
        return None, ThreatModel.INSERT_DELETE
    if hasattr(costs, "threat_model"):
        return costs.costs, costs.threat_model
    return costs, ThreatModel.INSERT_DELETE


def build_cover_instance(model, x, xi: float, costs=None, strict: bool = False) -> CoverInstance:
    costs, _ = _costs_and_threat(costs)
    return cover_instance_from_predictions(model.predictions(x)[0], xi, model.mapping, costs, strict)


def cert_ocr(model, x, xi: float, time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
             strict: bool = True) -> Certificate:
    """Unit-cost certificate for an ensemble over shared blocks.

    ``strict=False`` solves the plain program, which can exceed the true
    robustness when several submodels share a block.
    """
    return certify_overlap(model.predictions(x)[0], xi, model.mapping, None, time_limit, strict)


def cert_wocr(model, x, xi: float, costs, time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
              strict: bool = True) -> Certificate:
    """Weighted certificate; ``costs`` is an array or a cost profile."""
    costs, threat = _costs_and_threat(costs)
    return certify_overlap(model.predictions(x)[0], xi, model.mapping, costs, time_limit,
                           strict, threat)


def cert_overlap_two_sided(model, x, xi_low: float, xi_up: float, costs_low=None, costs_up=None,
                           time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
                           strict: bool = True) -> Certificate:
    if xi_low > xi_up:
        raise ValueError(f"xi_low={xi_low} exceeds xi_up={xi_up}")
    preds = model.predictions(x)[0]
    c_low, t_low = _costs_and_threat(costs_low)
    c_up, t_up = _costs_and_threat(costs_up)
    lower = certify_overlap(-preds, -xi_low, model.mapping, c_low, time_limit, strict, t_low)
    upper = certify_overlap(preds, xi_up, model.mapping, c_up, time_limit, strict, t_up)
    return combine_two_sided(replace(lower, side=Side.LOWER), upper)
