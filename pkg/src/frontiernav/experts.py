"""Frontier-recommending experts: object cues, room cues, scene layout, a noisy
ground-truth oracle for reliability studies, and an HTTP adapter for remote models."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import httpx
import numpy as np

from frontiernav.mapping import Frontier, FrontierContext

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpertRecommendation:
    expert_name: str
    frontier_ids: frozenset[int]
    error: str | None = None


@dataclass(frozen=True)
class AffinityTable:
    """Commonsense co-occurrence scores keyed ``(context label, target label)``."""

    object_affinity: Mapping[tuple[str, str], float]
    room_affinity: Mapping[tuple[str, str], float]
    default: float = 0.1

    def __post_init__(self):
        scores = [self.default, *self.object_affinity.values(), *self.room_affinity.values()]
        bad = [s for s in scores if not 0.0 <= s <= 1.0]
        if bad:
            raise ValueError(f"affinity scores must lie in [0, 1], got {bad[:3]}")

    def object_score(self, obj: str, target: str) -> float:
        return self.object_affinity.get((obj, target), self.default)

    def room_score(self, room: str, target: str) -> float:
        return self.room_affinity.get((room, target), self.default)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AffinityTable":
        """Layout: ``{"default": s, "object_affinity": {target: {object: s}},
        "room_affinity": {target: {room: s}}}``."""
        obj = {(o, t): float(s) for t, row in doc.get("object_affinity", {}).items()
               for o, s in row.items()}
        room = {(r, t): float(s) for t, row in doc.get("room_affinity", {}).items()
                for r, s in row.items()}
        return cls(obj, room, float(doc.get("default", 0.1)))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AffinityTable":
        if path is None:
            text = resources.files("frontiernav.data").joinpath("affinity.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(json.loads(text))


def _select(name: str, scores: Mapping[int, float], threshold: float,
            top_k: int | None) -> ExpertRecommendation:
    ranked = sorted((i for i, s in scores.items() if s >= threshold),
                    key=lambda i: (-scores[i], i))
    if top_k is not None:
        ranked = ranked[:top_k]
    return ExpertRecommendation(name, frontier_ids=frozenset(ranked))


def object_score(table: AffinityTable, target: str, ctx: FrontierContext) -> float:
    return max((table.object_score(o, target) for o, _ in ctx.nearby_objects), default=0.0)


def room_score(table: AffinityTable, target: str, ctx: FrontierContext) -> float:
    return table.room_score(ctx.room_label, target)


def o2f_recommend(table: AffinityTable, target: str, contexts: Sequence[FrontierContext],
                  threshold: float = 0.5, top_k: int | None = 3) -> ExpertRecommendation:
    """Object-to-frontier: score each frontier by its most target-related nearby object."""
    scores = {c.frontier_id: object_score(table, target, c) for c in contexts}
    return _select("o2f", scores, threshold, top_k)


def r2f_recommend(table: AffinityTable, target: str, contexts: Sequence[FrontierContext],
                  threshold: float = 0.5, top_k: int | None = 3) -> ExpertRecommendation:
    """Room-to-frontier: score each frontier by how likely its room holds the target."""
    scores = {c.frontier_id: room_score(table, target, c) for c in contexts}
    return _select("r2f", scores, threshold, top_k)


def check_weights(weights: Sequence[float]) -> tuple[float, float, float]:
    if len(weights) != 3 or any(w < 0 for w in weights):
        raise ValueError(f"scene-layout weights must be three non-negative numbers, got {weights}")
    if not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
        raise ValueError(f"scene-layout weights must sum to 1, got {sum(weights)}")
    return tuple(float(w) for w in weights)


def sle_recommend(table: AffinityTable, target: str, contexts: Sequence[FrontierContext],
                  weights: Sequence[float] = (0.4, 0.4, 0.2), threshold: float = 0.5,
                  top_k: int | None = 3) -> ExpertRecommendation:
    """Scene-layout expert: blend of object score, room score and object density."""
    w_obj, w_room, w_density = check_weights(weights)
    scores = {c.frontier_id: w_obj * object_score(table, target, c)
              + w_room * room_score(table, target, c)
              + w_density * c.local_density for c in contexts}
    return _select("sle", scores, threshold, top_k)


def noisy_oracle_recommend(true_distances: Mapping[int, float], p: float,
                           rng: np.random.Generator, name: str = "oracle") -> ExpertRecommendation:
    """Return the frontier truly closest to the target with probability ``p``,
    otherwise one of the other frontiers uniformly at random."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be a probability, got {p}")
    if not true_distances:
        raise ValueError("noisy oracle needs at least one frontier")
    ids = sorted(true_distances)
    best = min(ids, key=lambda i: (true_distances[i], i))
    others = [i for i in ids if i != best]
    if rng.random() < p or not others:
        return ExpertRecommendation(name, frozenset({best}))
    return ExpertRecommendation(name, frozenset({others[int(rng.integers(len(others)))]}))


def request_document(target: str, frontiers: Sequence[Frontier],
                     contexts: Sequence[FrontierContext], explored_fraction: float) -> dict:
    by_id = {c.frontier_id: c for c in contexts}
    return {
        "target": target,
        "frontiers": [{
            "id": f.id,
            "centroid": [f.centroid[0], f.centroid[1]],
            "nearby_objects": [[label, n] for label, n in by_id[f.id].nearby_objects],
            "room": by_id[f.id].room_label,
            "density": by_id[f.id].local_density,
        } for f in frontiers],
        "map_summary": {"explored_fraction": explored_fraction},
    }


def http_expert_recommend(endpoint: str, target: str, frontiers: Sequence[Frontier],
                          contexts: Sequence[FrontierContext], timeout: float = 10.0,
                          explored_fraction: float = 0.0, name: str = "http",
                          client: httpx.Client | None = None) -> ExpertRecommendation:
    """POST the frontier summary to a remote expert and keep the valid ids it returns.

    Transport errors, timeouts, non-200 replies and malformed bodies yield an
    empty recommendation carrying ``error`` and a logged warning.
    """
    doc = request_document(target, frontiers, contexts, explored_fraction)
    candidates = {f.id for f in frontiers}
    try:
        if client is None:
            resp = httpx.post(endpoint, json=doc, timeout=timeout)
        else:
            resp = client.post(endpoint, json=doc, timeout=timeout)
        if resp.status_code != 200:
            raise ValueError(f"HTTP {resp.status_code}")
        ids = resp.json()["frontier_ids"]
        if not isinstance(ids, list) or not all(isinstance(i, int) and not isinstance(i, bool)
                                                for i in ids):
            raise ValueError(f"frontier_ids must be a list of integers, got {ids!r}")
    except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
        reason = f"{type(exc).__name__}: {exc}"
        log.warning("expert %s failed at %s: %s", name, endpoint, reason)
        return ExpertRecommendation(name, frozenset(), error=reason)
    dropped = sorted(set(ids) - candidates)
    if dropped:
        log.warning("expert %s returned unknown frontier ids %s", name, dropped)
    return ExpertRecommendation(name, frozenset(set(ids) & candidates))
