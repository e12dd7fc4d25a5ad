import numpy as np
import pytest
from hypothesis import given, strategies as st

from certreg.ensemble import (CostProfile, cert_pcr, cert_pcr_two_sided, cert_wpcr,
                              cert_wpcr_two_sided, ensemble_predict, train_ensemble,
                              train_overlapping, train_partitioned)
from certreg.ibl import fit_neighbor_model
from certreg.median import Side, ThreatModel, VoteSet, cert_swap
from certreg.oracle import dpa_bound
from certreg.partition import BlockMapping, partition_train
from certreg.submodels import Constant, Ridge
from fixtures import linear_data


class _Fixed:
    """Spec whose t-th fitted model predicts values[t]."""

    def __init__(self, values):
        self.values = list(values)
        self.i = 0

    def fit(self, X, y):
        v = self.values[self.i]
        self.i += 1
        return Constant(v).fit(X, y)


def _five_vote_ensemble():
    X, y = linear_data(25)
    return train_partitioned(X, y, 5, 0, _Fixed([2, 3, 4, 5, 6]))


def test_five_votes_pcr_and_wpcr():
    model = _five_vote_ensemble()
    x = np.zeros(3)
    assert ensemble_predict(model, x) == 4
    assert cert_pcr(model, x, 5.4).R == 1
    assert cert_wpcr(model, x, 5.4, [3, 4, 5, 6, 7]).R == 6


def test_wpcr_ignores_costs_above_threshold():
    model = _five_vote_ensemble()
    assert cert_wpcr(model, np.zeros(3), 5.4, [3, 4, 5, 6, 0]).R == 6
    with pytest.raises(ValueError):
        cert_wpcr(model, np.zeros(3), 5.4, [0, 4, 5, 6, 7])


def test_deletion_only_profile_is_tagged():
    model = _five_vote_ensemble()
    cert = cert_wpcr(model, np.zeros(3), 5.4, CostProfile([2] * 5, ThreatModel.DELETION_ONLY))
    assert cert.threat_model is ThreatModel.DELETION_ONLY


def test_two_sided():
    model = _five_vote_ensemble()
    x = np.zeros(3)
    assert cert_pcr_two_sided(model, x, 2.5, 5.4).R == 1
    cert = cert_wpcr_two_sided(model, x, 2.5, 5.4, [1] * 5, [3, 4, 5, 6, 7])
    assert cert.side is Side.TWO_SIDED
    # lower side: 4 votes above 2.5, delta 1, two cheapest unit costs -> 1
    assert cert.R == 1


def test_partitioned_submodels_use_disjoint_rows():
    X, y = linear_data(40)
    model = train_partitioned(X, y, 5, 1, Ridge(1.0))
    rows = np.concatenate(model.rows)
    assert sorted(rows.tolist()) == list(range(40))


def test_overlapping_training_sets():
    X, y = linear_data(60)
    model = train_overlapping(X, y, 3, 3, 0, Ridge(1.0))
    assert model.T == 9
    assert model.mapping.d_max == 3
    # each block feeds d submodels, so rows are reused exactly d times
    counts = np.bincount(np.concatenate(model.rows), minlength=60)
    assert (counts == 3).all()
    with pytest.raises(ValueError):
        cert_pcr(model, X[0], 0.0)


def test_rejects_even_T_and_instance_based_specs():
    X, y = linear_data(20)
    with pytest.raises(ValueError):
        train_partitioned(X, y, 4, 0, Ridge())
    with pytest.raises(TypeError):
        train_partitioned(X, y, 3, 0, fit_neighbor_model(X, y))
    with pytest.raises(ValueError):
        train_ensemble(X, y, partition_train(20, 2, 0), BlockMapping.disjoint(2), Ridge())


def test_deterministic_training():
    X, y = linear_data(50)
    a = train_partitioned(X, y, 5, 3, Ridge(0.5))
    b = train_partitioned(X, y, 5, 3, Ridge(0.5))
    assert np.array_equal(a.predictions(X), b.predictions(X))


@given(st.lists(st.sampled_from([-1.0, 1.0]), min_size=1, max_size=15).filter(lambda v: len(v) % 2))
def test_pcr_matches_dpa_on_binary_votes(votes):
    votes = np.array(votes)
    plurality = 1.0 if (votes > 0).sum() > (votes < 0).sum() else -1.0
    oriented = votes if plurality < 0 else -votes
    assert cert_swap(VoteSet(oriented, 0.0)).R == dpa_bound(votes)


@given(st.integers(0, 2 ** 31))
def test_wpcr_dominates_pcr(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.choice([1, 3, 5, 7, 9]))
    model = train_partitioned(*linear_data(3 * T), T, 0, _Fixed(rng.integers(-3, 4, size=T)))
    costs = rng.integers(1, 5, size=T)
    xi = float(rng.integers(-3, 4))
    p, w = cert_pcr(model, np.zeros(3), xi), cert_wpcr(model, np.zeros(3), xi, costs)
    assert p.certified == w.certified
    if p.certified:
        assert w.R >= p.R
