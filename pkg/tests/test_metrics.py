import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sciagent.metrics import (Completion, EmptySample, LengthMismatch, ZeroReference, box_stats,
                              classify_completion, execution_success_rate, linf_error, rel_l2_error,
                              solving_success_rate, stage_metrics)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=1, max_size=30)


def test_rel_l2_hand_cases():
    assert rel_l2_error([1, 1], [1, 1]) == 0.0
    assert rel_l2_error([1, 1], [0, 0]) == 1.0
    assert rel_l2_error([1, 1], [2, 2]) == 1.0


def test_rel_l2_errors():
    with pytest.raises(LengthMismatch):
        rel_l2_error([1, 2], [1])
    with pytest.raises(ZeroReference):
        rel_l2_error([0, 0], [1, 1])


# |c| kept away from 0 so that ref + c*d is not rounded back to ref
scales = st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=100),
                   st.floats(min_value=-100, max_value=-1e-3))
small_vectors = st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=30)


@given(small_vectors, scales)
def test_rel_l2_homogeneous_in_residual(ref, c):
    ref = np.array(ref)
    if np.max(np.abs(ref)) < 1e-3:
        ref[0] = 1.0
    d = np.linspace(-1, 1, ref.size) + 0.5
    base = rel_l2_error(ref, ref + d)
    assert rel_l2_error(ref, ref + c * d) == pytest.approx(abs(c) * base, rel=1e-6, abs=1e-12)


@given(vectors)
def test_rel_l2_identity(ref):
    ref = np.array(ref)
    if not np.any(ref):
        ref[0] = 1.0
    assert rel_l2_error(ref, ref.copy()) == 0.0


def test_rel_l2_continuity():
    ref = np.array([3.0, -1.0, 2.0])
    errs = [rel_l2_error(ref, ref + eps * np.array([0, 1.0, 0])) for eps in (1e-1, 1e-4, 1e-8)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-8


def test_linf():
    assert linf_error([1] * 5, [1] * 5) == 0.0
    assert linf_error([1] * 5, [1, 1, 1, 1, 1.5]) == 0.5
    assert math.isnan(linf_error([1, 1], [1, math.nan]))


def test_classify_completion():
    assert classify_completion(math.nan, 1e-2) is Completion.CONTAINS_NAN
    assert classify_completion(5e-3, 1e-2) is Completion.BELOW_THRESHOLD
    assert classify_completion(0.5, 1e-2) is Completion.OVER_THRESHOLD


@given(st.one_of(finite, st.just(math.nan)), st.floats(min_value=1e-12, max_value=10))
def test_classify_partitions(err, thr):
    outcomes = [c for c in Completion if classify_completion(err, thr) is c]
    assert len(outcomes) == 1


def test_execution_success_rate():
    assert execution_success_rate(["bug", "success", "nan", "success"]) == 0.5
    assert execution_success_rate(["success"] * 3) == 1.0
    with pytest.raises(EmptySample):
        execution_success_rate([])


@given(st.lists(st.sampled_from(["bug", "nan", "success"]), min_size=1, max_size=40))
def test_rates_sum_to_one(labels):
    rates = {k: sum(1 for c in labels if c == k) / len(labels) for k in ("bug", "nan")}
    assert execution_success_rate(labels) + rates["bug"] + rates["nan"] == pytest.approx(1.0)


def test_solving_success_rate():
    assert solving_success_rate([5e-3, 0.5, math.nan, 1e-3], 1e-2) == 0.5
    assert solving_success_rate([math.nan] * 3, 1e-2) == 0.0
    assert solving_success_rate([1.0, 1e9, math.nan, 0.0], math.inf) == 0.75


def test_box_stats_quartiles_match_order_statistic_interpolation():
    data = [1.0, 2.0, 3.0, 4.0]

    def quantile(sorted_x, q):
        # linear interpolation between order statistics at position q*(n-1)
        pos = q * (len(sorted_x) - 1)
        lo = math.floor(pos)
        hi = min(lo + 1, len(sorted_x) - 1)
        return sorted_x[lo] + (pos - lo) * (sorted_x[hi] - sorted_x[lo])

    b = box_stats(data)
    assert (b.q1, b.median, b.q3) == (1.75, 2.5, 3.25)
    assert b.q1 == quantile(data, 0.25) and b.q3 == quantile(data, 0.75)


def test_box_stats_singleton_and_outlier():
    b = box_stats([0.7])
    assert {b.mean, b.q1, b.median, b.q3, b.whisker_low, b.whisker_high} == {0.7}
    b = box_stats([1, 2, 3, 100])
    fence = b.q3 + 1.5 * (b.q3 - b.q1)
    assert 100 > fence
    assert b.whisker_high == 3


def test_box_stats_drops_nan():
    b = box_stats([1.0, math.nan, 3.0])
    assert b.n == 2 and b.mean == 2.0
    with pytest.raises(EmptySample):
        box_stats([math.nan])


@settings(max_examples=50)
@given(st.lists(finite, min_size=1, max_size=25), st.randoms())
def test_median_permutation_invariant(data, rnd):
    shuffled = list(data)
    rnd.shuffle(shuffled)
    assert box_stats(shuffled).median == box_stats(data).median


def test_stage_metrics_counts_missing_grades_as_nan():
    s = stage_metrics("review2", ["success"] * 4, [5e-3, 0.5, None, 1e-3], 1e-2)
    assert s.n_nan == 1
    assert s.solving_success_rate == 0.5
    assert s.box.n == 3
    assert s.as_dict()["errors"][2] is None
