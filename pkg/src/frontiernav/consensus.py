"""Consensus frontier selection over three expert recommendation sets, plus the
single-expert majority-vote and closest-frontier baselines."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping

import numpy as np


class Tier(str, Enum):
    UNANIMOUS = "Unanimous"
    PARTIAL = "Partial"
    FALLBACK = "Fallback"


class ExplorationExhausted(Exception):
    """No candidate frontier is left to choose from."""


@dataclass(frozen=True)
class ConsensusOutcome:
    tier: Tier
    consensus_set: frozenset[int]
    chosen: int
    distances_used: dict[int, float]


def find_consensus(s1: Iterable[int], s2: Iterable[int], s3: Iterable[int]) -> tuple[Tier, frozenset[int]]:
    """Unanimous intersection, else the union of pairwise intersections, else nothing."""
    a, b, c = frozenset(s1), frozenset(s2), frozenset(s3)
    unanimous = a & b & c
    if unanimous:
        return Tier.UNANIMOUS, unanimous
    partial = (a & b) | (a & c) | (b & c)
    if partial:
        return Tier.PARTIAL, partial
    return Tier.FALLBACK, frozenset()


def _nearest(ids: Iterable[int], distances: Mapping[int, float]) -> int:
    return min(ids, key=lambda i: (distances[i], i))


def select_frontier(consensus_set: Iterable[int], tier: Tier, candidates: Iterable[int],
                    distances: Mapping[int, float]) -> int:
    """Nearest frontier inside the consensus set (all candidates on fallback); ties to smaller id."""
    candidates = list(candidates)
    if not candidates:
        raise ExplorationExhausted("no candidate frontiers")
    pool = list(candidates) if Tier(tier) is Tier.FALLBACK else list(consensus_set)
    if not pool:
        raise ValueError(f"empty consensus set for tier {tier}")
    return _nearest(pool, distances)


def decide(s1: Iterable[int], s2: Iterable[int], s3: Iterable[int], candidates: Iterable[int],
           distances: Mapping[int, float]) -> ConsensusOutcome:
    candidates = sorted(candidates)
    tier, cset = find_consensus(s1, s2, s3)
    chosen = select_frontier(cset, tier, candidates, distances)
    return ConsensusOutcome(tier, cset, chosen, {i: float(distances[i]) for i in candidates})


def closest_frontier_baseline(candidates: Iterable[int], distances: Mapping[int, float]) -> int:
    candidates = list(candidates)
    if not candidates:
        raise ExplorationExhausted("no candidate frontiers")
    return _nearest(candidates, distances)


def majority_vote_baseline(expert: Callable[[np.random.Generator], Iterable[int]], k: int,
                           candidates: Iterable[int], distances: Mapping[int, float],
                           rng: np.random.Generator) -> int:
    """Query one expert ``k`` times and keep the most frequently recommended frontier.

    Frequency ties go to the nearer frontier, then the smaller id. If every
    sample is empty the closest candidate is returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    candidates = list(candidates)
    if not candidates:
        raise ExplorationExhausted("no candidate frontiers")
    votes: Counter = Counter()
    for _ in range(k):
        votes.update(set(expert(rng)))
    if not votes:
        return closest_frontier_baseline(candidates, distances)
    return min(votes, key=lambda i: (-votes[i], distances[i], i))
