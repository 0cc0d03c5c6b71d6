"""Fast-marching distance fields, descent paths and the local controller."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from frontiernav._kernels import fmm_solve
from frontiernav.mapping import FREE, OBSTACLE, UNKNOWN, BeliefMap
from frontiernav.world import Action, ActionSpec, Cell, Pose

_EIGHT = np.ones((3, 3), dtype=bool)
_NEIGHBOURS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc]


class StuckError(RuntimeError):
    """Greedy descent found no strictly lower neighbour before reaching a goal."""


@dataclass(frozen=True, eq=False)
class DistanceField:
    values: np.ndarray
    goal_cells: frozenset[Cell]
    traversable: np.ndarray
    cell_size: float
    accepted: np.ndarray  # arrival values in acceptance order

    def __getitem__(self, cell: Cell) -> float:
        return float(self.values[cell])

    def reachable(self, cell: Cell) -> bool:
        return math.isfinite(self.values[cell])


def traversable_mask(belief: BeliefMap, *, unknown_traversable: bool = False,
                     inflate: bool = False, keep: Iterable[Cell] = ()) -> np.ndarray:
    """Cells the planner may enter.

    ``inflate`` removes every cell 8-adjacent to a known obstacle; cells in
    ``keep`` (typically the agent's own cell and the goal) are always allowed
    unless they are known obstacles.
    """
    state = belief.state
    trav = state == FREE
    if unknown_traversable:
        trav |= state == UNKNOWN
    if inflate:
        trav &= ~ndimage.binary_dilation(state == OBSTACLE, structure=_EIGHT)
    for cell in keep:
        if state[cell] != OBSTACLE:
            trav[cell] = True
    return trav


def fmm_field(traversable: np.ndarray, goal_cells: Iterable[Cell], cell_size: float) -> DistanceField:
    """Arrival distance (meters, unit speed) from the goal set over traversable cells."""
    goals = frozenset(goal_cells)
    if not goals:
        raise ValueError("fmm_field needs at least one goal cell")
    blocked = [g for g in goals if not traversable[g]]
    if blocked:
        raise ValueError(f"goal cells not traversable: {sorted(blocked)[:5]}")
    ordered = sorted(goals)
    rows = np.array([g[0] for g in ordered], dtype=np.int64)
    cols = np.array([g[1] for g in ordered], dtype=np.int64)
    trav = np.ascontiguousarray(traversable, dtype=np.bool_)
    values, accepted = fmm_solve(trav, rows, cols, float(cell_size))
    return DistanceField(values, goals, trav, cell_size, accepted)


def extract_path(field: DistanceField, start: Cell) -> list[Cell]:
    """Steepest 8-neighbour descent from ``start`` to a goal cell.

    Diagonal moves need both orthogonal cells they pass between to be
    traversable.
    """
    if not field.reachable(start):
        raise StuckError(f"start {start} has no finite arrival value")
    values, trav = field.values, field.traversable
    H, W = values.shape
    path = [start]
    cur = start
    for _ in range(H * W):
        if cur in field.goal_cells:
            return path
        best, best_val = None, values[cur]
        r, c = cur
        for dr, dc in _NEIGHBOURS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < H and 0 <= nc < W) or not trav[nr, nc]:
                continue
            if dr and dc and not (trav[r + dr, c] and trav[r, c + dc]):
                continue
            if values[nr, nc] < best_val:
                best, best_val = (nr, nc), values[nr, nc]
        if best is None:
            raise StuckError(f"no descending neighbour at {cur} (value {values[cur]:.3f})")
        path.append(best)
        cur = best
    raise StuckError(f"descent from {start} exceeded {H * W} steps")


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def next_action(pose: Pose, path: list[Cell], spec: ActionSpec, cell_size: float) -> Action:
    """Turn toward, or step to, the first waypoint at least one step away.

    An exact half-turn resolves to turn_left. Never returns STOP.
    """
    if not path:
        raise ValueError("path must be non-empty")
    target = path[-1]
    for cell in path:
        x, y = (cell[1] + 0.5) * cell_size, (cell[0] + 0.5) * cell_size
        if math.hypot(x - pose.x, y - pose.y) >= spec.forward_step:
            target = cell
            break
    x, y = (target[1] + 0.5) * cell_size, (target[0] + 0.5) * cell_size
    if math.hypot(x - pose.x, y - pose.y) < 1e-12:
        return Action.FORWARD
    err = _wrap(math.atan2(y - pose.y, x - pose.x) - pose.theta)
    if abs(abs(err) - math.pi) < 1e-9:
        return Action.LEFT
    # slack keeps a waypoint sitting exactly on the band edge from flip-flopping
    if abs(err) > spec.turn_angle / 2 + 1e-6:
        return Action.LEFT if err > 0 else Action.RIGHT
    return Action.FORWARD


def geodesic_distance(belief: BeliefMap, source: Cell, to_cells: Iterable[Cell]) -> float:
    """Shortest distance through known-free cells; ``math.inf`` when unreachable."""
    to_cells = frozenset(to_cells)
    if source in to_cells:
        return 0.0
    trav = traversable_mask(belief)
    goals = [c for c in to_cells if trav[c]]
    if not goals or not trav[source]:
        return math.inf
    return fmm_field(trav, goals, belief.cell_size)[source]
