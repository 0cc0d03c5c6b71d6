"""Agent belief map, frontier extraction and per-frontier semantic context."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from frontiernav.world import OBSTACLE_SEEN, Cell, Observation

UNKNOWN = 0
FREE = 1
OBSTACLE = 2

_GLYPHS = {UNKNOWN: "?", FREE: ".", OBSTACLE: "#"}
_EIGHT = np.ones((3, 3), dtype=bool)


class ObservationError(ValueError):
    """An observation does not fit the map it is integrated into."""


class BeliefMap:
    """Accumulated geometry plus object and room evidence, one per episode."""

    def __init__(self, height: int, width: int, cell_size: float):
        self.cell_size = cell_size
        self.state = np.zeros((height, width), dtype=np.uint8)
        self.objects: dict[Cell, Counter] = {}
        self.rooms: dict[Cell, Counter] = {}

    @property
    def shape(self) -> tuple[int, int]:
        return self.state.shape

    @property
    def height(self) -> int:
        return self.state.shape[0]

    @property
    def width(self) -> int:
        return self.state.shape[1]

    def copy(self) -> "BeliefMap":
        other = BeliefMap(self.height, self.width, self.cell_size)
        other.state = self.state.copy()
        other.objects = {c: Counter(v) for c, v in self.objects.items()}
        other.rooms = {c: Counter(v) for c, v in self.rooms.items()}
        return other

    def center(self, cell: Cell) -> tuple[float, float]:
        return (cell[1] + 0.5) * self.cell_size, (cell[0] + 0.5) * self.cell_size

    def object_at(self, cell: Cell) -> tuple[str, int] | None:
        """Plurality label at a cell and its observation count."""
        votes = self.objects.get(cell)
        if not votes:
            return None
        label = min(votes, key=lambda k: (-votes[k], k))
        return label, votes[label]

    def cells_labelled(self, label: str) -> frozenset[Cell]:
        return frozenset(c for c in self.objects if self.object_at(c)[0] == label)

    def explored_fraction(self) -> float:
        return float(np.count_nonzero(self.state)) / self.state.size

    def integrate(self, obs: Observation) -> "BeliefMap":
        """Fold one observation into the map in place and return the map.

        The whole observation is rejected if any reported cell lies off-grid.
        """
        H, W = self.shape
        for kind, items in (("visible cell", (c for c, _ in obs.visible_cells)),
                            ("object report", (c for _, c in obs.object_reports)),
                            ("room report", (c for _, c in obs.room_reports))):
            for r, c in items:
                if not (0 <= r < H and 0 <= c < W):
                    raise ObservationError(f"{kind} at (row={r}, col={c}) outside {H}x{W} map")
        if obs.visible_cells:
            rows, cols = zip(*(c for c, _ in obs.visible_cells))
            states = [OBSTACLE if s == OBSTACLE_SEEN else FREE for _, s in obs.visible_cells]
            self.state[list(rows), list(cols)] = states
        for label, cell in obs.object_reports:
            self.objects.setdefault(cell, Counter())[label] += 1
        for label, cell in obs.room_reports:
            self.rooms.setdefault(cell, Counter())[label] += 1
        return self

    def to_text(self) -> str:
        return "\n".join("".join(_GLYPHS[v] for v in row) for row in self.state) + "\n"

    def semantic_layers(self) -> dict:
        return {
            "cell_size": self.cell_size,
            "objects": [{"row": r, "col": c, "votes": dict(sorted(v.items()))}
                        for (r, c), v in sorted(self.objects.items())],
            "rooms": [{"row": r, "col": c, "votes": dict(sorted(v.items()))}
                      for (r, c), v in sorted(self.rooms.items())],
        }

    def export(self, text_path, json_path) -> None:
        with open(text_path, "w") as fh:
            fh.write(self.to_text())
        with open(json_path, "w") as fh:
            json.dump(self.semantic_layers(), fh, indent=1)


def integrate(belief: BeliefMap, obs: Observation) -> BeliefMap:
    return belief.integrate(obs)


@dataclass(frozen=True)
class Frontier:
    id: int
    cells: tuple[Cell, ...]
    centroid: tuple[float, float]
    anchor: Cell = field(compare=False)

    @property
    def size(self) -> int:
        return len(self.cells)


def frontier_mask(state: np.ndarray) -> np.ndarray:
    """Free cells with at least one Unknown cell among their 8 neighbours."""
    near_unknown = ndimage.binary_dilation(state == UNKNOWN, structure=_EIGHT)
    return (state == FREE) & near_unknown


def extract_frontiers(belief: BeliefMap, min_frontier_size: int = 2) -> list[Frontier]:
    """8-connected clusters of frontier cells, ids in row-major order of each
    cluster's first cell. ``anchor`` is the member cell closest to the centroid."""
    labels, n = ndimage.label(frontier_mask(belief.state), structure=_EIGHT)
    if n == 0:
        return []
    rows, cols = np.nonzero(labels)  # row-major order
    comp = labels[rows, cols]
    order = np.argsort(comp, kind="stable")
    rows, cols, comp = rows[order], cols[order], comp[order]
    splits = np.flatnonzero(np.diff(comp)) + 1
    groups = [g for g in zip(np.split(rows, splits), np.split(cols, splits))
              if len(g[0]) >= min_frontier_size]
    groups.sort(key=lambda g: (g[0][0], g[1][0]))
    h = belief.cell_size
    out = []
    for i, (gr, gc) in enumerate(groups):
        cy = float(np.mean((gr + 0.5) * h))
        cx = float(np.mean((gc + 0.5) * h))
        d2 = ((gc + 0.5) * h - cx) ** 2 + ((gr + 0.5) * h - cy) ** 2
        k = int(np.argmin(d2))
        cells = tuple((int(r), int(c)) for r, c in zip(gr, gc))
        out.append(Frontier(i, cells, (cx, cy), cells[k]))
    return out


@dataclass(frozen=True)
class FrontierContext:
    frontier_id: int
    nearby_objects: tuple[tuple[str, int], ...]
    room_label: str
    local_density: float


def frontier_context(belief: BeliefMap, frontier: Frontier,
                     context_radius: float = 1.5) -> FrontierContext:
    cx, cy = frontier.centroid
    h = belief.cell_size

    nearby: Counter = Counter()
    for cell in belief.objects:
        x, y = belief.center(cell)
        if math.hypot(x - cx, y - cy) <= context_radius:
            nearby[belief.object_at(cell)[0]] += 1

    votes: Counter = Counter()
    H, W = belief.shape
    region = set(frontier.cells)
    for r, c in frontier.cells:
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                nb = (r + dr, c + dc)
                if 0 <= nb[0] < H and 0 <= nb[1] < W and belief.state[nb] == FREE:
                    region.add(nb)
    for cell in region:
        votes.update(belief.rooms.get(cell, ()))
    room = min(votes, key=lambda k: (-votes[k], k)) if votes else "unknown"

    r0 = max(int(math.floor((cy - context_radius) / h)), 0)
    r1 = min(int(math.floor((cy + context_radius) / h)), H - 1)
    c0 = max(int(math.floor((cx - context_radius) / h)), 0)
    c1 = min(int(math.floor((cx + context_radius) / h)), W - 1)
    rr, cc = np.mgrid[r0:r1 + 1, c0:c1 + 1]
    inside = np.hypot((cc + 0.5) * h - cx, (rr + 0.5) * h - cy) <= context_radius
    known = inside & (belief.state[r0:r1 + 1, c0:c1 + 1] != UNKNOWN)
    n_known = int(known.sum())
    labelled = sum(1 for (r, c) in belief.objects
                   if r0 <= r <= r1 and c0 <= c <= c1 and known[r - r0, c - c0])
    density = labelled / n_known if n_known else 0.0

    return FrontierContext(frontier.id, tuple(sorted(nearby.items())), room, density)
