import math

import pytest
from hypothesis import given, settings, strategies as st

from frontiernav.harness.metrics import (
    EpisodeResult,
    ErrorClass,
    FailureEvidence,
    StopReason,
    classify_error,
    compute_metrics,
)


def ok(p, l, eid="e"):
    return EpisodeResult(eid, "closest", True, 10, p, l, StopReason.STOPPED_NEAR_TARGET, ErrorClass.NONE)


def fail(eid="f", cls=ErrorClass.EXPLORATION):
    return EpisodeResult(eid, "closest", False, 500, 12.0, 5.0, StopReason.BUDGET_EXHAUSTED, cls)


def test_optimal_path():
    rep = compute_metrics([ok(5.0, 5.0)])
    assert rep.sr == 100.0 and rep.spl == 100.0


def test_double_length_path_halves_spl():
    rep = compute_metrics([ok(10.0, 5.0)])
    assert rep.sr == 100.0 and rep.spl == pytest.approx(50.0)


def test_single_failure():
    rep = compute_metrics([fail()])
    assert rep.sr == 0.0 and rep.spl == 0.0
    assert rep.errors == {"detection": 0.0, "planning": 0.0, "exploration": 100.0}


def test_path_shorter_than_reference_caps_at_one():
    assert ok(2.0, 2.086).spl == 1.0


def test_start_inside_success_region():
    assert ok(0.0, 0.0).spl == 1.0


def test_empty_result_set_rejected():
    with pytest.raises(ValueError):
        compute_metrics([])


def test_invariant_between_success_and_error_class():
    with pytest.raises(ValueError):
        EpisodeResult("x", "p", True, 1, 0.0, 0.0, StopReason.STOPPED_NEAR_TARGET, ErrorClass.PLANNING)
    with pytest.raises(ValueError):
        EpisodeResult("x", "p", False, 1, 0.0, 0.0, StopReason.STUCK, ErrorClass.NONE)


def test_frontier_distance_is_per_decision():
    a = EpisodeResult("a", "p", False, 5, 1.0, 2.0, StopReason.STUCK, ErrorClass.PLANNING, 2, 6.0)
    b = EpisodeResult("b", "p", False, 5, 1.0, 2.0, StopReason.STUCK, ErrorClass.PLANNING, 1, 3.0)
    assert compute_metrics([a, b]).frontier_distance == pytest.approx(3.0)
    assert math.isnan(compute_metrics([fail()]).frontier_distance)


episodes = st.lists(st.tuples(st.booleans(), st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=30)


@settings(max_examples=200, deadline=None)
@given(eps=episodes)
def test_spl_never_exceeds_sr(eps):
    results = [ok(p, l, str(i)) if s else fail(str(i)) for i, (s, p, l) in enumerate(eps)]
    rep = compute_metrics(results)
    assert 0.0 <= rep.spl <= rep.sr + 1e-9 <= 100.0 + 1e-9
    assert sum(rep.errors.values()) == pytest.approx(100.0 - rep.sr)


@pytest.mark.parametrize("ev, cls", [
    # stopped far from the target after believing a false report
    (FailureEvidence(StopReason.STOPPED_FAR, false_target_stop=True, target_seen=False), ErrorClass.DETECTION),
    # seen but never reported
    (FailureEvidence(StopReason.BUDGET_EXHAUSTED, target_seen=True), ErrorClass.DETECTION),
    # mapped, then stuck
    (FailureEvidence(StopReason.STUCK, target_seen=True, target_mapped=True, planner_stuck=True), ErrorClass.PLANNING),
    (FailureEvidence(StopReason.BUDGET_EXHAUSTED, target_seen=True, target_mapped=True), ErrorClass.PLANNING),
    # never in view
    (FailureEvidence(StopReason.BUDGET_EXHAUSTED), ErrorClass.EXPLORATION),
    (FailureEvidence(StopReason.FRONTIERS_EXHAUSTED), ErrorClass.EXPLORATION),
    (FailureEvidence(StopReason.STUCK, planner_stuck=True), ErrorClass.PLANNING),
])
def test_classify_examples(ev, cls):
    assert classify_error(ev) is cls


@settings(max_examples=200, deadline=None)
@given(reason=st.sampled_from(list(StopReason)), flags=st.tuples(*[st.booleans()] * 4))
def test_every_failure_gets_exactly_one_class(reason, flags):
    cls = classify_error(FailureEvidence(reason, *flags))
    assert cls in (ErrorClass.DETECTION, ErrorClass.PLANNING, ErrorClass.EXPLORATION)
