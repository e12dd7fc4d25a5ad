import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from certreg.ensemble import cert_pcr, cert_wpcr, train_partitioned
from certreg.median import Provenance
from certreg.oracle import oracle_overlap, oracle_overlap_attack
from certreg.overlap import (CoverInstance, NotRobustError, build_cover_instance, cert_ocr,
                             cert_overlap_two_sided, cert_wocr, certify_overlap,
                             cover_instance_from_predictions, greedy_factor, greedy_partial_cover,
                             psmc_factor, read_instance, solve_ilp_bb, write_instance)
from certreg.partition import SHARED_BLOCKS_EXAMPLE, BlockMapping
from certreg.submodels import Constant
from fixtures import linear_data

SHARED = BlockMapping.from_lists(7, SHARED_BLOCKS_EXAMPLE)


@st.composite
def random_instances(draw, max_m=12, max_T=9, max_cost=4):
    seed = draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, max_m + 1))
    T = int(rng.choice([t for t in (1, 3, 5, 7, 9) if t <= max_T]))
    blocks = [rng.choice(m, size=int(rng.integers(1, min(m, 3) + 1)), replace=False)
              for _ in range(T)]
    mapping = BlockMapping.from_lists(m, blocks)
    preds = rng.integers(-3, 4, size=T).astype(float)
    xi = float(np.median(preds) + rng.integers(0, 3))
    costs = rng.integers(1, max_cost + 1, size=T) if rng.random() < 0.5 else None
    strict = bool(rng.random() < 0.5)
    return preds, xi, mapping, costs, strict


def test_shared_blocks_instance():
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.5, SHARED)
    assert inst.T_low == [0, 1, 2, 3]
    assert (inst.required_cover, inst.sigma, inst.r_max) == (1, 0, 1)
    assert inst.blocks_of[0] == {1, 3}


def test_weighted_instance_sets_sigma():
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.5, SHARED, [2] * 5)
    assert (inst.sigma, inst.required_cover) == (1, 2)


def test_not_robust_instance():
    with pytest.raises(NotRobustError):
        cover_instance_from_predictions([2, 3, 4, 5, 6], 3.5, SHARED)
    assert not certify_overlap([2, 3, 4, 5, 6], 3.5, SHARED).certified


def test_disjoint_instance_matches_pcr_value():
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.4, BlockMapping.disjoint(5))
    sol = solve_ilp_bb(inst)
    assert sol.exact and sol.certified_R == 1


def test_shared_block_plain_and_strict():
    mapping = BlockMapping.from_lists(1, [[0]] * 5)
    plain = solve_ilp_bb(cover_instance_from_predictions([0, 0, 0, 0, 0], 1.0, mapping))
    strict = solve_ilp_bb(cover_instance_from_predictions([0, 0, 0, 0, 0], 1.0, mapping, strict=True))
    assert plain.certified_R == 1  # the plain program: modify the block once
    assert strict.certified_R == 0  # one modification flips every submodel
    assert oracle_overlap_attack([0] * 5, 1.0, mapping.model_blocks, 1).optimal_R == 0


def test_instance_text_round_trip(tmp_path):
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.5, SHARED, [1, 3, 2, 1, 1])
    path = tmp_path / "inst.txt"
    write_instance(inst, path)
    assert path.read_text().splitlines()[0] == "7 5 2 1 3"
    again = read_instance(path)
    assert again == inst
    assert again.to_text() == inst.to_text()


def test_strict_unit_instance_round_trip():
    inst = cover_instance_from_predictions([2, 3, 4, 5, 6], 5.5, SHARED, strict=True)
    assert CoverInstance.from_text(inst.to_text()) == inst


def test_instance_validation():
    with pytest.raises(ValueError):
        CoverInstance.from_text("3 3 1 0\n")
    with pytest.raises(ValueError):
        CoverInstance.from_text("3 3 2 0 1\n0 1  0\n")  # more cover than submodels
    with pytest.raises(ValueError):
        CoverInstance.from_text("3 3 1 1 1\n0 1  0\n1 1  5\n")


@given(random_instances())
def test_solver_matches_oracle(case):
    preds, xi, mapping, costs, strict = case
    inst = cover_instance_from_predictions(preds, xi, mapping, costs, strict)
    sol = solve_ilp_bb(inst, time_limit=None)
    assert sol.exact
    assert sol.certified_R == oracle_overlap(inst, max_r=4).optimal_R
    # the incumbent allocation really is feasible
    w = np.array(sol.allocation)
    covered = sum(int(w[list(inst.blocks_of[t])].sum() >= inst.r[t]) for t in inst.T_low)
    assert covered >= inst.required_cover and int(w.sum()) == sol.incumbent_cost


@given(random_instances(max_m=8, max_cost=2))
def test_strict_program_is_the_true_robustness(case):
    preds, xi, mapping, costs, _ = case
    R = certify_overlap(preds, xi, mapping, costs, None, strict=True).R
    assert R == oracle_overlap_attack(preds, xi, mapping.model_blocks, mapping.m, costs).optimal_R


@given(random_instances(), st.integers(1, 30))
def test_anytime_soundness_and_monotonicity(case, limit):
    preds, xi, mapping, costs, strict = case
    inst = cover_instance_from_predictions(preds, xi, mapping, costs, strict)
    exact = solve_ilp_bb(inst, None).certified_R
    a = solve_ilp_bb(inst, None, node_limit=limit)
    b = solve_ilp_bb(inst, None, node_limit=2 * limit)
    assert a.certified_R <= b.certified_R <= exact
    if a.exact:
        assert a.certified_R == exact


def test_timeout_reports_lower_bound():
    rng = np.random.default_rng(0)
    from certreg.partition import build_block_mapping
    mapping = build_block_mapping(40, 41, 5, 0)
    preds = rng.normal(size=41)
    inst = cover_instance_from_predictions(preds, float(np.quantile(preds, 0.85)), mapping,
                                           rng.integers(1, 5, size=41))
    sol = solve_ilp_bb(inst, time_limit=0.05)
    assert not sol.exact
    assert sol.certified_R <= sol.incumbent_cost - inst.sigma
    assert sol.node_count > 0 and sol.elapsed < 1.0


def test_greedy_examples():
    inst = cover_instance_from_predictions([0, 0, 0, 0, 0], 1.0, BlockMapping.disjoint(5))
    g = greedy_partial_cover(inst)
    assert (g.G, g.bound, g.factor) == (2, 2, 1.0)
    inst = cover_instance_from_predictions([0, 0, 0, 0, 0, 0, 0], 1.0,
                                           BlockMapping.from_lists(1, [[0]] * 7))
    assert inst.required_cover == 3
    g = greedy_partial_cover(inst)
    assert (g.G, g.bound) == (1, 1)


def test_greedy_factor_constant():
    mpmath.mp.dps = 40
    ln = mpmath.log
    exact = ln(2) - ln(ln(2)) + 3 + ln(ln(32)) - ln(32)
    assert greedy_factor(2, 10) == pytest.approx(float(exact), abs=1e-12)
    assert greedy_factor(2, 10) == pytest.approx(1.8368492, abs=1e-7)
    with pytest.raises(ValueError):
        greedy_factor(1, 3)


def test_greedy_bound_omitted_below_two():
    inst = cover_instance_from_predictions([0, 0, 0], 1.0, BlockMapping.disjoint(3))
    g = greedy_partial_cover(inst)
    assert g.G == 1 and g.bound is None


@given(random_instances())
def test_greedy_sandwich(case):
    preds, xi, mapping, _, _ = case
    inst = cover_instance_from_predictions(preds, xi, mapping)
    if inst.required_cover < 1:
        return
    g = greedy_partial_cover(inst)
    exact = solve_ilp_bb(inst, None).lower_bound
    assert exact <= g.G
    if g.bound is not None:
        assert g.bound <= exact
        assert g.G / exact <= g.factor + 1e-12


def test_psmc_factor():
    expected = 4 * math.log2(25) * (1 + 1 / 2 + 1 / 3) * math.log(4) + 2 * math.log2(25) * 5
    assert psmc_factor(25, 3, 4) == pytest.approx(expected)


class _Fixed:
    def __init__(self, values):
        self.values, self.i = list(values), 0

    def fit(self, X, y):
        self.i += 1
        return Constant(self.values[self.i - 1]).fit(X, y)


@given(st.integers(0, 2 ** 31))
def test_collapse_to_partitioned(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.choice([1, 3, 5, 7, 9]))
    model = train_partitioned(*linear_data(2 * T), T, 0, _Fixed(rng.integers(-3, 4, size=T)))
    x, xi = np.zeros(3), float(rng.integers(-3, 4))
    costs = rng.integers(1, 4, size=T)
    pcr, wpcr = cert_pcr(model, x, xi), cert_wpcr(model, x, xi, costs)
    for strict in (False, True):
        ocr = cert_ocr(model, x, xi, strict=strict)
        wocr = cert_wocr(model, x, xi, costs, strict=strict)
        assert ocr == pcr.__class__(pcr.status, pcr.R, provenance=ocr.provenance)
        assert wocr.R == wpcr.R
    if pcr.certified:
        assert cert_ocr(model, x, xi).provenance is Provenance.SOLVER_EXACT


def test_build_from_model_and_two_sided():
    model = train_partitioned(*linear_data(10), 5, 0, _Fixed([2, 3, 4, 5, 6]))
    inst = build_cover_instance(model, np.zeros(3), 5.4)
    assert inst.required_cover == 1
    assert cert_overlap_two_sided(model, np.zeros(3), 2.5, 5.4).R == 1
