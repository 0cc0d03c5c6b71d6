"""Run configuration: one JSON document with a section per subsystem."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from frontiernav.experts import check_weights
from frontiernav.world import ActionSpec, SensorConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MappingConfig:
    min_frontier_size: int = 2
    context_radius: float = 1.5

    def __post_init__(self):
        if self.min_frontier_size < 1:
            raise ValueError("min_frontier_size must be >= 1")
        if self.context_radius <= 0:
            raise ValueError("context_radius must be > 0")


@dataclass(frozen=True)
class ExpertConfig:
    backend: str = "rules"  # rules | oracle | http
    threshold: float = 0.5
    top_k: int | None = 3
    sle_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    affinity_table: str | None = None
    oracle_p: float = 0.7
    endpoints: dict[str, str] = field(default_factory=dict)  # o2f / r2f / sle -> URL
    timeout: float = 10.0

    def __post_init__(self):
        if self.backend not in ("rules", "oracle", "http"):
            raise ValueError(f"unknown expert backend {self.backend!r}")
        object.__setattr__(self, "sle_weights", check_weights(tuple(self.sle_weights)))
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1 or null")
        if not 0.0 <= self.oracle_p <= 1.0:
            raise ValueError("oracle_p must be a probability")
        if self.backend == "http":
            missing = {"o2f", "r2f", "sle"} - set(self.endpoints)
            if missing:
                raise ValueError(f"http backend needs endpoints for {sorted(missing)}")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


@dataclass(frozen=True)
class PlannerConfig:
    inflate_obstacles: bool = True


@dataclass(frozen=True)
class HarnessConfig:
    max_steps: int = 500
    success_radius: float = 1.0
    replan_interval: int = 10
    stuck_collisions: int = 4

    def __post_init__(self):
        if self.max_steps < 1 or self.replan_interval < 1 or self.stuck_collisions < 1:
            raise ValueError("max_steps, replan_interval and stuck_collisions must be >= 1")
        if self.success_radius < 0:
            raise ValueError("success_radius must be >= 0")


_SECTIONS = {
    "sensor": SensorConfig,
    "action": ActionSpec,
    "mapping": MappingConfig,
    "experts": ExpertConfig,
    "planner": PlannerConfig,
    "harness": HarnessConfig,
}


@dataclass(frozen=True)
class Config:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    action: ActionSpec = field(default_factory=ActionSpec)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    experts: ExpertConfig = field(default_factory=ExpertConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    @classmethod
    def from_dict(cls, doc: Any) -> "Config":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        parts = {}
        for name, kind in _SECTIONS.items():
            section = doc.get(name, {})
            if not isinstance(section, dict):
                raise ConfigError(f"{name}: expected an object")
            allowed = {f.name for f in dataclasses.fields(kind)}
            extra = set(section) - allowed
            if extra:
                raise ConfigError(f"{name}: unknown keys {sorted(extra)}")
            try:
                parts[name] = kind(**section)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: {exc}") from exc
        return cls(**parts)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **sections) -> "Config":
        """Copy with some section fields overridden, e.g. ``replace(sensor={"det_tp": 0})``."""
        parts = {name: dataclasses.replace(getattr(self, name), **kw) for name, kw in sections.items()}
        return dataclasses.replace(self, **parts)
