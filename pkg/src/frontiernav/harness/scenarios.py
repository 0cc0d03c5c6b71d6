"""Procedural floor plans: recursive room partition with door gaps, room-conditioned
object placement, and a reachable start pose."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from frontiernav.planner import fmm_field
from frontiernav.vocab import PLACEMENT, ROOMS, TARGETS
from frontiernav.world import ScenarioError, parse_scenario

Rect = tuple[int, int, int, int]  # inclusive (r0, c0, r1, c1)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    width: int = 32
    height: int = 32
    rooms: int = 4
    object_density: float = 0.04  # objects per free room cell
    cell_size: float = 0.25
    seed: int = 0
    min_room: int = 5
    door_width: int = 3
    min_start_distance: float = 2.0
    room_vocab: tuple[str, ...] = ROOMS
    placement: dict = field(default_factory=lambda: PLACEMENT)
    targets: tuple[str, ...] = TARGETS

    def __post_init__(self):
        if self.width < self.min_room + 2 or self.height < self.min_room + 2:
            raise ValueError(f"grid {self.width}x{self.height} too small for min_room={self.min_room}")
        if self.rooms < 1:
            raise ValueError("rooms must be >= 1")
        if not 0 < self.object_density <= 1:
            raise ValueError("object_density must be in (0, 1]")


def _area(rect: Rect) -> int:
    return (rect[2] - rect[0] + 1) * (rect[3] - rect[1] + 1)


def _split(rect: Rect, rng, p: GeneratorParams, doors: set, vertical: bool):
    """Try to split ``rect`` with one wall; returns (wall cells, door cells, a, b) or None."""
    r0, c0, r1, c1 = rect
    lo, hi = (c0, c1) if vertical else (r0, r1)
    span_lo, span_hi = (r0, r1) if vertical else (c0, c1)
    if span_hi - span_lo + 1 < p.door_width + 2:
        return None
    options = []
    for s in range(lo + p.min_room, hi - p.min_room + 1):
        ends = [(span_lo - 1, s), (span_hi + 1, s)] if vertical else [(s, span_lo - 1), (s, span_hi + 1)]
        if any(abs(dr - er) <= 2 and abs(dc - ec) <= 2 for er, ec in ends for dr, dc in doors):
            continue
        options.append(s)
    if not options:
        return None
    s = int(options[rng.integers(len(options))])
    d0 = int(rng.integers(span_lo + 1, span_hi - p.door_width + 1)) if span_hi - span_lo + 1 > p.door_width + 2 \
        else span_lo + 1
    along = range(span_lo, span_hi + 1)
    door_range = range(d0, d0 + p.door_width)
    if vertical:
        wall = [(r, s) for r in along if r not in door_range]
        door = [(r, s) for r in door_range]
        return wall, door, (r0, c0, r1, s - 1), (r0, s + 1, r1, c1)
    wall = [(s, c) for c in along if c not in door_range]
    door = [(s, c) for c in door_range]
    return wall, door, (r0, c0, s - 1, c1), (s + 1, c0, r1, c1)


def _partition(p: GeneratorParams, rng) -> tuple[np.ndarray, list[Rect], set]:
    obstacle = np.zeros((p.height, p.width), dtype=bool)
    obstacle[0, :] = obstacle[-1, :] = obstacle[:, 0] = obstacle[:, -1] = True
    rects: list[Rect] = [(1, 1, p.height - 2, p.width - 2)]
    doors: set = set()
    while len(rects) < p.rooms:
        for rect in sorted(rects, key=lambda r: (-_area(r), r)):
            h, w = rect[2] - rect[0] + 1, rect[3] - rect[1] + 1
            axes = [w >= h, w < h]
            result = None
            for vertical in axes:
                result = _split(rect, rng, p, doors, vertical)
                if result:
                    break
            if result:
                wall, door, a, b = result
                for cell in wall:
                    obstacle[cell] = True
                doors.update(door)
                rects.remove(rect)
                rects.extend([a, b])
                break
        else:
            raise GenerationError(f"cannot fit {p.rooms} rooms of size >= {p.min_room} "
                                  f"in a {p.width}x{p.height} grid")
    return obstacle, rects, doors


def generate_scenario(p: GeneratorParams, index: int = 0) -> dict:
    """One scenario document, a pure function of ``(params, index)``."""
    rng = np.random.default_rng(np.random.SeedSequence([p.seed, index]))
    obstacle, rects, doors = _partition(p, rng)

    labels = [p.room_vocab[i % len(p.room_vocab)] for i in rng.permutation(len(rects))]
    room_of = np.full(obstacle.shape, -1)
    for i, (r0, c0, r1, c1) in enumerate(rects):
        room_of[r0:r1 + 1, c0:c1 + 1] = i
    for r, c in sorted(doors):
        for dr, dc in ((0, -1), (-1, 0), (0, 1), (1, 0)):
            if room_of[r + dr, c + dc] >= 0 and (r + dr, c + dc) not in doors:
                room_of[r, c] = room_of[r + dr, c + dc]
                break

    objects: list[dict] = []
    occupied: set = set()
    for i, (r0, c0, r1, c1) in enumerate(rects):
        table = p.placement.get(labels[i], {})
        if not table:
            continue
        names = sorted(table)
        weights = np.array([table[n] for n in names], dtype=float)
        n_obj = max(1, int(round(p.object_density * _area(rects[i]))))
        cells = [(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)]
        picks = rng.choice(len(cells), size=min(n_obj, len(cells)), replace=False)
        for k in picks:
            cell = cells[int(k)]
            label = names[int(rng.choice(len(names), p=weights / weights.sum()))]
            objects.append({"label": label, "x": cell[1], "y": cell[0]})
            occupied.add(cell)

    present = sorted({o["label"] for o in objects} & set(p.targets))
    if not present:
        free_cells = [tuple(map(int, c)) for c in np.argwhere(~obstacle) if tuple(c) not in occupied]
        cell = free_cells[int(rng.integers(len(free_cells)))]
        label = p.targets[int(rng.integers(len(p.targets)))]
        objects.append({"label": label, "x": cell[1], "y": cell[0]})
        present = [label]
    free = ~obstacle
    plannable = free & ~ndimage.binary_dilation(obstacle, structure=np.ones((3, 3), bool))
    start = None
    for _ in range(100):
        target = present[int(rng.integers(len(present)))]
        target_cells = [(o["y"], o["x"]) for o in objects if o["label"] == target]
        to_target = fmm_field(free, target_cells, p.cell_size).values
        reach = plannable.copy()
        for c in target_cells:
            reach[c] = True
        planned = fmm_field(reach, target_cells, p.cell_size).values
        ok = np.argwhere(plannable & np.isfinite(planned) & (to_target >= p.min_start_distance))
        if len(ok):
            r, c = ok[int(rng.integers(len(ok)))]
            start = (int(r), int(c))
            break
    if start is None:
        raise GenerationError(f"scenario {index}: no start cell reaches a target after 100 tries")
    heading = int(rng.integers(12)) * math.pi / 6

    rooms: dict[str, list] = {}
    for i, (r0, c0, r1, c1) in enumerate(rects):
        rooms.setdefault(labels[i], []).append([c0, r0, c1, r1])
    for r, c in sorted(doors):
        rooms[labels[room_of[r, c]]].append([c, r, c, r])

    doc = {
        "name": f"gen_{p.seed}_{index:04d}",
        "cell_size": p.cell_size,
        "grid": ["".join("#" if v else "." for v in row) for row in obstacle],
        "rooms": [{"label": k, "rects": v} for k, v in rooms.items()],
        "objects": objects,
        "start": {"x": (start[1] + 0.5) * p.cell_size, "y": (start[0] + 0.5) * p.cell_size,
                  "theta": heading},
        "target": target,
    }
    try:
        parse_scenario(doc)
    except ScenarioError as exc:  # pragma: no cover - generator bug guard
        raise GenerationError(f"scenario {index} failed validation: {exc}") from exc
    return doc


def generate_scenarios(p: GeneratorParams, n: int, out_dir: str | Path | None = None) -> list[dict]:
    docs = [generate_scenario(p, i) for i in range(n)]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            (out / f"{doc['name']}.json").write_text(json.dumps(doc, indent=1) + "\n")
    return docs


def generate_maze(width: int = 21, height: int = 21, seed: int = 0, cell_size: float = 0.25,
                  target: str = "mug") -> dict:
    """Perfect maze of one-cell corridors; the target sits at the cell farthest from the start."""
    if width % 2 == 0 or height % 2 == 0:
        raise ValueError("maze dimensions must be odd")
    rng = np.random.default_rng(seed)
    grid = np.ones((height, width), dtype=bool)
    stack = [(1, 1)]
    grid[1, 1] = False
    while stack:
        r, c = stack[-1]
        nbrs = [(r + dr, c + dc, dr, dc) for dr, dc in ((-2, 0), (2, 0), (0, -2), (0, 2))
                if 0 < r + dr < height - 1 and 0 < c + dc < width - 1 and grid[r + dr, c + dc]]
        if not nbrs:
            stack.pop()
            continue
        nr, nc, dr, dc = nbrs[int(rng.integers(len(nbrs)))]
        grid[r + dr // 2, c + dc // 2] = False
        grid[nr, nc] = False
        stack.append((nr, nc))
    dist = fmm_field(~grid, [(1, 1)], cell_size).values
    far = np.unravel_index(np.argmax(np.where(np.isfinite(dist), dist, -1)), dist.shape)
    return {
        "name": f"maze_{seed}",
        "cell_size": cell_size,
        "grid": ["".join("#" if v else "." for v in row) for row in grid],
        "rooms": [{"label": "hallway", "rects": [[1, 1, width - 2, height - 2]]}],
        "objects": [{"label": target, "x": int(far[1]), "y": int(far[0])}],
        "start": {"x": 1.5 * cell_size, "y": 1.5 * cell_size, "theta": 0.0},
        "target": target,
    }
