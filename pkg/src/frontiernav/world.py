"""Ground-truth grid world, discrete agent kinematics and a noisy semantic sensor."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from frontiernav._kernels import cast_fan, segment_blocked

TWO_PI = 2.0 * math.pi

Cell = tuple[int, int]  # (row, col)


class ScenarioError(ValueError):
    """A scenario document is inconsistent; the message names the offending field."""


class Action(str, Enum):
    FORWARD = "move_forward"
    LEFT = "turn_left"
    RIGHT = "turn_right"
    STOP = "stop"


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.theta]


@dataclass(frozen=True)
class ActionSpec:
    forward_step: float = 0.25
    turn_angle: float = math.pi / 6

    def __post_init__(self):
        if not self.forward_step > 0:
            raise ValueError(f"forward_step must be > 0, got {self.forward_step}")
        if not 0 < self.turn_angle <= math.pi:
            raise ValueError(f"turn_angle must be in (0, pi], got {self.turn_angle}")


@dataclass(frozen=True)
class SensorConfig:
    fov: float = math.pi / 2
    max_range: float = 5.0
    n_rays: int = 60
    det_tp: float = 0.95
    det_fp: float = 0.02
    room_acc: float = 0.95

    def __post_init__(self):
        for name in ("det_tp", "det_fp", "room_acc"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")
        if not self.max_range > 0:
            raise ValueError(f"max_range must be > 0, got {self.max_range}")
        if self.n_rays < 3:
            raise ValueError(f"n_rays must be >= 3, got {self.n_rays}")
        if not 0 < self.fov <= TWO_PI:
            raise ValueError(f"fov must be in (0, 2*pi], got {self.fov}")

    def ray_angles(self, theta: float) -> np.ndarray:
        return theta + self.fov * (np.arange(self.n_rays) / (self.n_rays - 1) - 0.5)


@dataclass(frozen=True, eq=False)
class Environment:
    """Immutable ground truth. ``room`` and ``obj`` hold vocabulary indices, -1 for none."""

    cell_size: float
    obstacle: np.ndarray
    room: np.ndarray
    obj: np.ndarray
    room_labels: tuple[str, ...]
    object_labels: tuple[str, ...]
    target_positions: dict[str, tuple[Cell, ...]] = field(init=False)

    def __post_init__(self):
        for arr in (self.obstacle, self.room, self.obj):
            arr.setflags(write=False)
        positions: dict[str, list[Cell]] = {}
        for r, c in zip(*np.nonzero(self.obj >= 0)):
            positions.setdefault(self.object_labels[self.obj[r, c]], []).append((int(r), int(c)))
        object.__setattr__(self, "target_positions",
                           {k: tuple(v) for k, v in sorted(positions.items())})

    @property
    def height(self) -> int:
        return self.obstacle.shape[0]

    @property
    def width(self) -> int:
        return self.obstacle.shape[1]

    @property
    def free(self) -> np.ndarray:
        return ~self.obstacle

    def cell_of(self, x: float, y: float) -> Cell:
        return int(math.floor(y / self.cell_size)), int(math.floor(x / self.cell_size))

    def center(self, cell: Cell) -> tuple[float, float]:
        return (cell[1] + 0.5) * self.cell_size, (cell[0] + 0.5) * self.cell_size

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.obstacle[cell]

    def pose_valid(self, pose: Pose) -> bool:
        return self.is_free(self.cell_of(pose.x, pose.y))

    def room_label(self, cell: Cell) -> str | None:
        idx = self.room[cell]
        return self.room_labels[idx] if idx >= 0 else None

    def object_label(self, cell: Cell) -> str | None:
        idx = self.obj[cell]
        return self.object_labels[idx] if idx >= 0 else None


@dataclass(frozen=True)
class Scenario:
    env: Environment
    start: Pose
    target: str
    name: str = ""


# --------------------------------------------------------------------------
# scenario files

def _fail(where: str, msg: str):
    raise ScenarioError(f"{where}: {msg}")


def _number(doc: dict, key: str, where: str) -> float:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(f"{where}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def _index(doc: dict, key: str, where: str) -> int:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{where}.{key}", f"expected an integer cell index, got {v!r}")
    return v


def parse_scenario(doc: Any, name: str = "") -> Scenario:
    """Validate a scenario document and build the environment.

    Layout: ``grid`` rows use ``#`` for obstacles and ``.`` for free cells;
    ``rooms`` is a list of ``{"label", "rects": [[x0, y0, x1, y1], ...]}`` with
    inclusive cell-index corners (x = column, y = row); ``objects`` entries
    give integer cell indices; ``start`` is a pose in meters.
    """
    if not isinstance(doc, dict):
        _fail("<root>", "scenario must be a JSON object")
    for key in ("cell_size", "grid", "rooms", "objects", "start", "target"):
        if key not in doc:
            _fail(key, "missing required field")
    h = _number(doc, "cell_size", "<root>")
    if h <= 0:
        _fail("cell_size", f"must be > 0, got {h}")

    grid = doc["grid"]
    if not isinstance(grid, list) or not grid:
        _fail("grid", "expected a non-empty list of row strings")
    width = len(grid[0]) if isinstance(grid[0], str) else 0
    for i, row in enumerate(grid):
        if not isinstance(row, str):
            _fail(f"grid[{i}]", "expected a string")
        if len(row) != width:
            _fail(f"grid[{i}]", f"row length {len(row)} != {width}")
        bad = set(row) - {"#", "."}
        if bad:
            _fail(f"grid[{i}]", f"unexpected characters {sorted(bad)}")
    if width < 3 or len(grid) < 3:
        _fail("grid", "must be at least 3x3")
    obstacle = np.array([[ch == "#" for ch in row] for row in grid], dtype=bool)
    height = obstacle.shape[0]
    border = np.concatenate([obstacle[0], obstacle[-1], obstacle[:, 0], obstacle[:, -1]])
    if not border.all():
        for i, row in enumerate(grid):
            if (i in (0, height - 1) and "." in row) or row[0] == "." or row[-1] == ".":
                _fail(f"grid[{i}]", "boundary cells must be obstacles")

    rooms = doc["rooms"]
    if not isinstance(rooms, list):
        _fail("rooms", "expected a list")
    room_labels: list[str] = []
    room = np.full(obstacle.shape, -1, dtype=np.int16)
    for i, entry in enumerate(rooms):
        where = f"rooms[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("label"), str):
            _fail(where, "expected {\"label\": str, \"rects\": [...]}")
        label = entry["label"]
        if label not in room_labels:
            room_labels.append(label)
        ridx = room_labels.index(label)
        rects = entry.get("rects")
        if not isinstance(rects, list) or not rects:
            _fail(f"{where}.rects", "expected a non-empty list")
        for j, rect in enumerate(rects):
            rw = f"{where}.rects[{j}]"
            if (not isinstance(rect, list) or len(rect) != 4
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in rect)):
                _fail(rw, "expected [x0, y0, x1, y1] integers")
            x0, y0, x1, y1 = rect
            if not (0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height):
                _fail(rw, f"rectangle {rect} outside {width}x{height} grid")
            block = room[y0:y1 + 1, x0:x1 + 1]
            free_block = ~obstacle[y0:y1 + 1, x0:x1 + 1]
            clash = free_block & (block >= 0) & (block != ridx)
            if clash.any():
                r, c = np.argwhere(clash)[0]
                _fail(rw, f"cell (x={x0 + c}, y={y0 + r}) already labelled "
                          f"{room_labels[block[r, c]]!r}")
            block[free_block] = ridx
    unlabelled = ~obstacle & (room < 0)
    if unlabelled.any():
        r, c = np.argwhere(unlabelled)[0]
        _fail("rooms", f"free cell (x={c}, y={r}) has no room label")

    objects = doc["objects"]
    if not isinstance(objects, list):
        _fail("objects", "expected a list")
    object_labels: list[str] = []
    obj = np.full(obstacle.shape, -1, dtype=np.int16)
    for i, entry in enumerate(objects):
        where = f"objects[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("label"), str):
            _fail(where, "expected {\"label\": str, \"x\": int, \"y\": int}")
        x, y = _index(entry, "x", where), _index(entry, "y", where)
        if not (0 <= x < width and 0 <= y < height):
            _fail(where, f"cell (x={x}, y={y}) outside grid")
        if obstacle[y, x]:
            _fail(where, f"cell (x={x}, y={y}) is an obstacle")
        if obj[y, x] >= 0:
            _fail(where, f"cell (x={x}, y={y}) already holds {object_labels[obj[y, x]]!r}")
        if entry["label"] not in object_labels:
            object_labels.append(entry["label"])
        obj[y, x] = object_labels.index(entry["label"])

    target = doc["target"]
    if not isinstance(target, str) or target not in object_labels:
        _fail("target", f"{target!r} is not among the scenario objects")

    start = doc["start"]
    if not isinstance(start, dict):
        _fail("start", "expected {\"x\", \"y\", \"theta\"}")
    pose = Pose(_number(start, "x", "start"), _number(start, "y", "start"),
                _number(start, "theta", "start") % TWO_PI)
    env = Environment(h, obstacle, room, obj, tuple(room_labels), tuple(object_labels))
    if not env.pose_valid(pose):
        _fail("start", f"({pose.x}, {pose.y}) is not inside a free cell")
    return Scenario(env, pose, target, name or str(doc.get("name", "")))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(doc, name=path.stem)


# --------------------------------------------------------------------------
# kinematics

def step(env: Environment, pose: Pose, action: Action, spec: ActionSpec) -> tuple[Pose, bool]:
    """Apply one discrete action. Returns the new pose and whether the agent moved.

    A forward move whose swept segment touches an obstacle cell leaves the pose
    unchanged and reports ``moved=False``.
    """
    action = Action(action)
    if action is Action.LEFT:
        return Pose(pose.x, pose.y, (pose.theta + spec.turn_angle) % TWO_PI), False
    if action is Action.RIGHT:
        return Pose(pose.x, pose.y, (pose.theta - spec.turn_angle) % TWO_PI), False
    if action is Action.STOP:
        return pose, False
    nx = pose.x + spec.forward_step * math.cos(pose.theta)
    ny = pose.y + spec.forward_step * math.sin(pose.theta)
    if not env.is_free(env.cell_of(nx, ny)):
        return pose, False
    if segment_blocked(env.obstacle, env.cell_size, pose.x, pose.y, nx, ny):
        return pose, False
    return Pose(nx, ny, pose.theta), True


# --------------------------------------------------------------------------
# sensing

FREE_SEEN = "free"
OBSTACLE_SEEN = "obstacle"


@dataclass(frozen=True)
class Observation:
    pose: Pose
    depth: tuple[float, ...]
    visible_cells: tuple[tuple[Cell, str], ...]
    object_reports: tuple[tuple[str, Cell], ...]
    room_reports: tuple[tuple[str, Cell], ...]


def visible_cells(env: Environment, pose: Pose, sensor: SensorConfig) -> tuple[np.ndarray, list[Cell]]:
    """Ray-cast the sensor fan. Returns per-ray depths and the sorted unique cells reached."""
    depths, rows, cols = cast_fan(env.obstacle, env.cell_size, pose.x, pose.y,
                                  sensor.ray_angles(pose.theta), sensor.max_range)
    flat = np.unique(rows * env.width + cols)
    return depths, [(int(f // env.width), int(f % env.width)) for f in flat]


def observe(env: Environment, pose: Pose, sensor: SensorConfig,
            rng: np.random.Generator) -> Observation:
    """Simulated depth plus semantic detections for one pose.

    Every visible ground-truth object is reported with probability ``det_tp``;
    with probability ``det_fp`` one spurious object label is reported at a
    random visible free cell; each visible free cell receives a room report
    that is correct with probability ``room_acc``.
    """
    depths, cells = visible_cells(env, pose, sensor)
    seen = tuple((c, OBSTACLE_SEEN if env.obstacle[c] else FREE_SEEN) for c in cells)
    free_cells = [c for c in cells if not env.obstacle[c]]

    object_cells = [c for c in free_cells if env.obj[c] >= 0]
    keep = rng.random(len(object_cells)) < sensor.det_tp
    objects = [(env.object_label(c), c) for c, k in zip(object_cells, keep) if k]
    if free_cells and env.object_labels and rng.random() < sensor.det_fp:
        cell = free_cells[rng.integers(len(free_cells))]
        objects.append((env.object_labels[rng.integers(len(env.object_labels))], cell))

    rooms = []
    n_rooms = len(env.room_labels)
    correct = rng.random(len(free_cells)) < sensor.room_acc
    wrong = rng.integers(max(n_rooms - 1, 1), size=len(free_cells))
    for c, ok, w in zip(free_cells, correct, wrong):
        true_idx = int(env.room[c])
        if ok or n_rooms < 2:
            idx = true_idx
        else:
            idx = int(w) if w < true_idx else int(w) + 1
        rooms.append((env.room_labels[idx], c))

    return Observation(pose, tuple(float(d) for d in depths), seen, tuple(objects), tuple(rooms))

