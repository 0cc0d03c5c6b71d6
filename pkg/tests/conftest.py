import numpy as np
import pytest
from scipy import ndimage

from frontiernav.world import parse_scenario
from oracles import FREE, OBSTACLE, UNKNOWN

_ACCEPTANCE: list[str] = []


def room_doc(rows: int = 10, cols: int = 10, objects=(), start=(0.375, 0.375, 0.0),
             target=None, walls=(), room="kitchen", cell_size=0.25) -> dict:
    """A single walled room; ``walls`` adds interior obstacle cells (row, col)."""
    grid = []
    for r in range(rows):
        line = []
        for c in range(cols):
            edge = r in (0, rows - 1) or c in (0, cols - 1)
            line.append("#" if edge or (r, c) in walls else ".")
        grid.append("".join(line))
    objs = [{"label": lab, "x": c, "y": r} for lab, (r, c) in objects]
    return {
        "cell_size": cell_size,
        "grid": grid,
        "rooms": [{"label": room, "rects": [[1, 1, cols - 2, rows - 2]]}],
        "objects": objs,
        "start": {"x": start[0], "y": start[1], "theta": start[2]},
        "target": target or (objs[0]["label"] if objs else "mug"),
    }


def room_scenario(**kw):
    return parse_scenario(room_doc(**kw))


def random_grid(rng: np.random.Generator, shape, p_obstacle=0.25) -> np.ndarray:
    """Boolean obstacle grid with a closed border."""
    obstacle = rng.random(shape) < p_obstacle
    obstacle[0, :] = obstacle[-1, :] = obstacle[:, 0] = obstacle[:, -1] = True
    return obstacle


def random_belief(rng, shape):
    """Blobby unknown/free/obstacle map: smoothed noise thresholded twice."""
    smooth = ndimage.uniform_filter(rng.random(shape), size=3, mode="nearest")
    state = np.full(shape, FREE, dtype=np.uint8)
    state[smooth < np.quantile(smooth, rng.uniform(0.2, 0.5))] = UNKNOWN
    state[rng.random(shape) < rng.uniform(0.0, 0.2)] = OBSTACLE
    return state


@pytest.fixture
def acceptance_line():
    def emit(n: int, ok: bool, text: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"
        print(line)
        _ACCEPTANCE.append(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

