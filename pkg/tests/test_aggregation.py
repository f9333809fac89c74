import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hurstwave import NoDataError, PairEstimate, ShapeError
from hurstwave.aggregation import (
    WeightedCandidates,
    arithmetic_aggregate,
    candidates_from_arrays,
    normalize_weights,
    weighted_mean,
    weighted_median,
)


def cand(estimates, weights, ids=None):
    ids = ids or [(3, 4 + k) for k in range(len(estimates))]
    return WeightedCandidates(np.array(estimates, float), np.array(weights, float), tuple(ids))


def pe(j1, j2, h, v):
    return PairEstimate(j1, j2, h, v, True)


def test_normalize_examples():
    c = normalize_weights([pe(3, 4, 0.2, 0.5), pe(3, 5, 0.4, 0.5)])
    np.testing.assert_allclose(c.weights, [0.5, 0.5])
    c = normalize_weights([pe(3, 4, 0.2, 1.0), pe(3, 5, 0.4, 3.0)])
    np.testing.assert_allclose(c.weights, [0.75, 0.25], atol=1e-15)
    c = normalize_weights([pe(3, 4, 0.2, 1.0), PairEstimate(3, 5, None, None, False, "insufficient dof")])
    assert c.weights.tolist() == [1.0] and c.excluded == 1 and c.pair_ids == ((3, 4),)
    with pytest.raises(NoDataError):
        normalize_weights([PairEstimate(3, 5, None, None, False, "insufficient dof")])


def test_candidate_invariants():
    with pytest.raises(ShapeError):
        cand([0.1, 0.2], [0.6, 0.6])
    with pytest.raises(ShapeError):
        cand([0.1, 0.2], [1.0, 0.0])
    with pytest.raises(ShapeError):
        WeightedCandidates(np.array([0.1]), np.array([1.0]), ((3, 4), (3, 5)))
    with pytest.raises(NoDataError):
        cand([], [])


def test_weighted_mean_examples():
    assert weighted_mean(cand([0.2, 0.4], [0.5, 0.5])) == pytest.approx(0.3, abs=1e-16)
    assert weighted_mean(cand([0.62], [1.0])) == 0.62
    x = np.random.default_rng(0).uniform(0, 1, 17)
    assert abs(weighted_mean(cand(x, np.full(17, 1 / 17))) - x.mean()) <= 1e-14


def test_weighted_median_examples():
    assert weighted_median(cand([0.1, 0.5, 0.9], [0.7, 0.2, 0.1])) == 0.1
    assert weighted_median(cand([0.2, 0.4], [0.5, 0.5])) == pytest.approx(0.3, abs=1e-16)
    x = [0.9, 0.1, 0.5, 0.3, 0.7]
    assert weighted_median(cand(x, [0.2] * 5)) == 0.5


def brute_force_median(h, w):
    """Every k satisfying both tail conditions (with the exact-half tolerance)."""
    order = np.argsort(h, kind="stable")
    h, w = np.asarray(h)[order], np.asarray(w)[order]
    ok = [k for k in range(len(h)) if w[:k].sum() <= 0.5 + 1e-12 and w[k + 1:].sum() <= 0.5 + 1e-12]
    return [h[k] for k in ok]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 2), st.floats(0.01, 10)), min_size=1, max_size=25))
def test_weighted_median_satisfies_definition(items):
    h = np.array([a for a, _ in items])
    w = np.array([b for _, b in items])
    w = w / math.fsum(w)
    w = w / math.fsum(w)
    c = candidates_from_arrays(h, 1 / w, [(3, 4 + k) for k in range(len(h))])
    got = weighted_median(c)
    valid = brute_force_median(h, c.weights)
    assert valid
    if len(valid) == 1:
        assert got == valid[0]
    else:
        assert min(valid) <= got <= max(valid)
    assert h.min() <= got <= h.max()
    assert h.min() - 1e-12 <= weighted_mean(c) <= h.max() + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_permutation_invariance(xs, rnd):
    n = len(xs)
    var = [0.01 * (1 + (k * 7) % 5) for k in range(n)]
    ids = [(3, 4 + k) for k in range(n)]
    c1 = candidates_from_arrays(xs, var, ids)
    perm = list(range(n))
    rnd.shuffle(perm)
    c2 = candidates_from_arrays([xs[p] for p in perm], [var[p] for p in perm], [ids[p] for p in perm])
    assert weighted_mean(c1) == weighted_mean(c2)
    assert weighted_median(c1) == weighted_median(c2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=41).filter(lambda v: len(v) % 2 == 1))
def test_equal_weight_median_reduction(xs):
    c = candidates_from_arrays(xs, [1.0] * len(xs), [(1, 2 + k) for k in range(len(xs))])
    assert abs(weighted_median(c) - float(np.median(xs))) <= 1e-14
    assert abs(weighted_mean(c) - math.fsum(xs) / len(xs)) <= 1e-14 * max(1.0, max(abs(v) for v in xs))


def test_weights_sum_to_one_for_wide_variances():
    v = np.geomspace(1e-8, 1e4, 55)
    c = candidates_from_arrays(np.linspace(0, 1, 55), v, [(3, 4 + k) for k in range(55)])
    assert abs(math.fsum(c.weights) - 1) <= 1e-12


def test_tie_broken_by_pair_id():
    # equal estimates: order is decided by pair id, result is the shared value
    c = cand([0.4, 0.4, 0.1], [0.25, 0.25, 0.5], [(5, 6), (3, 9), (4, 5)])
    assert weighted_median(c) == pytest.approx(0.25)


def test_candidates_drop_nan():
    c = candidates_from_arrays([0.3, np.nan, 0.5], [1.0, np.nan, 1.0], [(3, 4), (3, 5), (4, 5)])
    assert len(c) == 2 and c.excluded == 1


def test_arithmetic_examples():
    assert arithmetic_aggregate([0.1, 0.3, 0.5], "median") == 0.3
    assert arithmetic_aggregate([0.2, 0.4], "mean") == pytest.approx(0.3)
    assert arithmetic_aggregate([0.2, 0.4], "median") == pytest.approx(0.3)
    assert arithmetic_aggregate([0.77], "median") == 0.77 == arithmetic_aggregate([0.77], "mean")
    with pytest.raises(NoDataError):
        arithmetic_aggregate([], "mean")
    with pytest.raises(ValueError):
        arithmetic_aggregate([0.1], "mode")
