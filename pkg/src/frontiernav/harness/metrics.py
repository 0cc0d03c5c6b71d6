"""Episode outcomes, SR/SPL aggregation and the failure taxonomy."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence


class StopReason(str, Enum):
    STOPPED_NEAR_TARGET = "stopped_near_target"
    STOPPED_FAR = "stopped_far"
    BUDGET_EXHAUSTED = "budget_exhausted"
    FRONTIERS_EXHAUSTED = "frontiers_exhausted"
    STUCK = "stuck"


class ErrorClass(str, Enum):
    NONE = "none"
    DETECTION = "detection"
    PLANNING = "planning"
    EXPLORATION = "exploration"


@dataclass(frozen=True)
class FailureEvidence:
    """What the harness observed about a failed episode."""

    stop_reason: StopReason
    false_target_stop: bool = False  # stopped at a believed target that is not a true one
    target_seen: bool = False  # a true target cell was in some observation's visible set
    target_mapped: bool = False  # the target label was reported at a true target cell
    planner_stuck: bool = False


def classify_error(ev: FailureEvidence) -> ErrorClass:
    """Assign a failed episode to exactly one of detection, planning or exploration."""
    reason = StopReason(ev.stop_reason)
    if (reason is StopReason.STOPPED_FAR and ev.false_target_stop) or (ev.target_seen and not ev.target_mapped):
        return ErrorClass.DETECTION
    if ev.target_mapped and reason in (StopReason.STUCK, StopReason.BUDGET_EXHAUSTED, StopReason.STOPPED_FAR):
        return ErrorClass.PLANNING
    if ev.planner_stuck:
        return ErrorClass.PLANNING
    return ErrorClass.EXPLORATION


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    policy: str
    success: bool
    steps: int
    path_length: float  # meters actually moved
    shortest_path: float  # meters from start to the success region
    stop_reason: StopReason
    error_class: ErrorClass
    decisions: int = 0
    frontier_distance_sum: float = 0.0  # summed geodesic distance of chosen frontiers

    def __post_init__(self):
        if self.success and self.error_class is not ErrorClass.NONE:
            raise ValueError("a successful episode carries no error class")
        if not self.success and self.error_class is ErrorClass.NONE:
            raise ValueError("a failed episode needs an error class")

    @property
    def spl(self) -> float:
        if not self.success:
            return 0.0
        denom = max(self.path_length, self.shortest_path)
        return 1.0 if denom == 0 else self.shortest_path / denom

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stop_reason"] = self.stop_reason.value
        d["error_class"] = self.error_class.value
        d["spl"] = self.spl
        return d


@dataclass(frozen=True)
class RunReport:
    results: tuple[EpisodeResult, ...]
    sr: float  # percent
    spl: float  # percent
    errors: dict[str, float]  # percent of all episodes per class
    frontier_distance: float  # mean geodesic distance of chosen frontiers, meters

    def row(self) -> dict:
        return {
            "episodes": len(self.results),
            "SR": round(self.sr, 4),
            "SPL": round(self.spl, 4),
            **{f"err_{k}": round(v, 4) for k, v in self.errors.items()},
            "frontier_dist_m": round(self.frontier_distance, 4)
            if math.isfinite(self.frontier_distance) else "",
        }


def compute_metrics(results: Sequence[EpisodeResult]) -> RunReport:
    """SR and SPL in percent; SPL = mean of S_i * l_i / max(p_i, l_i)."""
    if not results:
        raise ValueError("compute_metrics needs at least one episode")
    results = tuple(sorted(results, key=lambda r: (r.episode_id, r.policy)))
    n = len(results)
    sr = 100.0 * sum(r.success for r in results) / n
    spl = 100.0 * sum(r.spl for r in results) / n
    errors = {c.value: 100.0 * sum(r.error_class is c for r in results) / n
              for c in ErrorClass if c is not ErrorClass.NONE}
    decisions = sum(r.decisions for r in results)
    fd = sum(r.frontier_distance_sum for r in results) / decisions if decisions else math.nan
    return RunReport(results, sr, spl, errors, fd)
