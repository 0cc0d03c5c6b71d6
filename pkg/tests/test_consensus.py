import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontiernav.consensus import (
    ExplorationExhausted,
    Tier,
    closest_frontier_baseline,
    decide,
    find_consensus,
    majority_vote_baseline,
    select_frontier,
)

ids = st.frozensets(st.integers(0, 6), max_size=5)


@pytest.mark.parametrize("s, tier, cset", [
    (({2, 3}, {1, 3}, {3, 4}), Tier.UNANIMOUS, {3}),
    (({1, 2}, {2}, {1}), Tier.PARTIAL, {1, 2}),
    (({1}, {2}, {3}), Tier.FALLBACK, set()),
    ((set(), set(), set()), Tier.FALLBACK, set()),
])
def test_find_consensus_examples(s, tier, cset):
    assert find_consensus(*s) == (tier, frozenset(cset))


def test_select_examples():
    assert select_frontier({3, 7}, Tier.PARTIAL, [3, 7], {3: 4.0, 7: 2.5}) == 7
    assert select_frontier({3, 7}, Tier.PARTIAL, [3, 7], {3: 2.5, 7: 2.5}) == 3
    assert select_frontier(set(), Tier.FALLBACK, [1, 2, 3], {1: 5, 2: 1, 3: 9}) == 2


def test_no_candidates_is_exhaustion():
    with pytest.raises(ExplorationExhausted):
        select_frontier(set(), Tier.FALLBACK, [], {})
    with pytest.raises(ExplorationExhausted):
        closest_frontier_baseline([], {})
    with pytest.raises(ExplorationExhausted):
        majority_vote_baseline(lambda r: {1}, 3, [], {}, np.random.default_rng(0))


def test_decide_records_everything():
    out = decide({1, 2}, {2, 3}, {9}, [3, 1, 2, 9], {1: 1.0, 2: 4.0, 3: 0.5, 9: 0.1})
    assert out.tier is Tier.PARTIAL and out.consensus_set == {2}
    assert out.chosen == 2
    assert out.distances_used == {1: 1.0, 2: 4.0, 3: 0.5, 9: 0.1}


@settings(max_examples=500, deadline=None)
@given(a=ids, b=ids, c=ids)
def test_tier_logic_and_endorsement(a, b, c):
    cands = sorted(a | b | c | {0, 1})
    dist = {i: float((i * 7) % 5) for i in cands}
    out = decide(a, b, c, cands, dist)
    endorse = {i: (i in a) + (i in b) + (i in c) for i in cands}
    assert out.chosen in cands
    if a & b & c:
        assert out.tier is Tier.UNANIMOUS and out.consensus_set == a & b & c
    elif (a & b) | (a & c) | (b & c):
        assert out.tier is Tier.PARTIAL
        assert out.consensus_set == (a & b) | (a & c) | (b & c)
    else:
        assert out.tier is Tier.FALLBACK and out.consensus_set == frozenset()
        assert out.chosen == min(cands, key=lambda i: (dist[i], i))
    if out.tier is not Tier.FALLBACK:
        assert out.chosen in out.consensus_set and out.chosen in a | b | c
    if max(endorse.values()) >= 2:
        assert endorse[out.chosen] >= 2


def test_majority_examples():
    rng = np.random.default_rng(0)

    def script(samples):
        it = iter(samples)
        return lambda r: next(it)

    d = {1: 4.0, 2: 2.0, 3: 6.0, 5: 1.0}
    assert majority_vote_baseline(script([{5}, {5}, {2}]), 3, [1, 2, 3, 5], d, rng) == 5
    assert majority_vote_baseline(script([{1}, {2}, {3}]), 3, [1, 2, 3], d, rng) == 2
    assert majority_vote_baseline(script([set(), set(), set()]), 3, [1, 2, 3], d, rng) == 2
    with pytest.raises(ValueError):
        majority_vote_baseline(script([]), 0, [1], d, rng)


def test_majority_equal_distance_tie_goes_to_smaller_id():
    it = iter([{4}, {3}])
    assert majority_vote_baseline(lambda r: next(it), 2, [3, 4], {3: 1.0, 4: 1.0},
                                  np.random.default_rng(0)) == 3


def test_closest_examples():
    assert closest_frontier_baseline([1, 2], {1: 3.0, 2: 1.5}) == 2
    assert closest_frontier_baseline([4], {4: 9.0}) == 4
    assert closest_frontier_baseline([1, 2], {1: 2.0, 2: 2.0}) == 1

