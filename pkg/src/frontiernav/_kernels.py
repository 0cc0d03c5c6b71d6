"""Compiled inner loops: grid ray traversal and the fast marching solver.

Grid convention everywhere: ``array[row, col]``; world ``x`` runs along
columns and ``y`` along rows, both in meters, with cell ``(r, c)`` covering
``[c*h, (c+1)*h) x [r*h, (r+1)*h)``.
"""
import math

import numpy as np
from numba import njit

_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _traverse(obstacle, h, x0, y0, dx, dy, max_dist, rows, cols, n0):
    """Amanatides-Woo traversal from (x0, y0) along unit (dx, dy).

    Appends every cell entered at distance <= max_dist into rows/cols starting
    at index n0, stopping after the first obstacle cell. Returns
    (n, hit_distance, hit) where n is the new fill index.
    """
    H, W = obstacle.shape
    gx = x0 / h
    gy = y0 / h
    c = int(math.floor(gx))
    r = int(math.floor(gy))
    step_c = 1 if dx > 0 else -1
    step_r = 1 if dy > 0 else -1
    if dx > 0:
        t_max_c = ((c + 1) - gx) / dx
        t_delta_c = 1.0 / dx
    elif dx < 0:
        t_max_c = (gx - c) / -dx
        t_delta_c = -1.0 / dx
    else:
        t_max_c = np.inf
        t_delta_c = np.inf
    if dy > 0:
        t_max_r = ((r + 1) - gy) / dy
        t_delta_r = 1.0 / dy
    elif dy < 0:
        t_max_r = (gy - r) / -dy
        t_delta_r = -1.0 / dy
    else:
        t_max_r = np.inf
        t_delta_r = np.inf
    limit = max_dist / h
    t_entry = 0.0
    n = n0
    while True:
        if r < 0 or r >= H or c < 0 or c >= W:
            return n, max_dist, False
        rows[n] = r
        cols[n] = c
        n += 1
        if obstacle[r, c]:
            return n, t_entry * h, True
        if t_max_c < t_max_r:
            t_entry = t_max_c
            t_max_c += t_delta_c
            c += step_c
        else:
            t_entry = t_max_r
            t_max_r += t_delta_r
            r += step_r
        if t_entry > limit:
            return n, max_dist, False


@njit(cache=True)
def cast_fan(obstacle, h, x0, y0, angles, max_range):
    """Cast one ray per angle. Returns (depths, rows, cols) of all cells entered."""
    H, W = obstacle.shape
    per_ray = H + W + 4
    rows = np.empty(per_ray * len(angles), np.int64)
    cols = np.empty(per_ray * len(angles), np.int64)
    depths = np.empty(len(angles))
    n = 0
    for i in range(len(angles)):
        n, d, _ = _traverse(obstacle, h, x0, y0, math.cos(angles[i]),
                            math.sin(angles[i]), max_range, rows, cols, n)
        depths[i] = d
    return depths, rows[:n], cols[:n]


@njit(cache=True)
def segment_blocked(obstacle, h, x0, y0, x1, y1):
    """True if any cell touched by the segment p0->p1 is an obstacle."""
    length = math.hypot(x1 - x0, y1 - y0)
    H, W = obstacle.shape
    rows = np.empty(H + W + 4, np.int64)
    cols = np.empty(H + W + 4, np.int64)
    if length == 0.0:
        r = int(math.floor(y0 / h))
        c = int(math.floor(x0 / h))
        return obstacle[r, c]
    _, _, hit = _traverse(obstacle, h, x0, y0, (x1 - x0) / length,
                          (y1 - y0) / length, length, rows, cols, 0)
    return hit


@njit(cache=True)
def _solve_pair(a, b, step):
    # first-order upwind update from two orthogonal neighbour values
    if a == np.inf and b == np.inf:
        return np.inf
    if a == np.inf:
        return b + step
    if b == np.inf:
        return a + step
    diff = abs(a - b)
    if diff >= step:
        return min(a, b) + step
    return 0.5 * (a + b + math.sqrt(2.0 * step * step - diff * diff))


@njit(cache=True)
def _known(u, state, r, c):
    H, W = u.shape
    if r < 0 or r >= H or c < 0 or c >= W or state[r, c] != 2:
        return np.inf
    return u[r, c]


@njit(cache=True)
def _free(trav, r, c):
    H, W = trav.shape
    return 0 <= r < H and 0 <= c < W and trav[r, c]


@njit(cache=True)
def _diag(u, state, trav, r, c, dr, dc):
    # a diagonal neighbour counts only if neither shared orthogonal is blocked
    if not (_free(trav, r + dr, c) and _free(trav, r, c + dc)):
        return np.inf
    return _known(u, state, r + dr, c + dc)


@njit(cache=True)
def _update(u, state, trav, r, c, h):
    a = min(_known(u, state, r, c - 1), _known(u, state, r, c + 1))
    b = min(_known(u, state, r - 1, c), _known(u, state, r + 1, c))
    best = _solve_pair(a, b, h)
    a = min(_diag(u, state, trav, r, c, -1, -1), _diag(u, state, trav, r, c, 1, 1))
    b = min(_diag(u, state, trav, r, c, -1, 1), _diag(u, state, trav, r, c, 1, -1))
    return min(best, _solve_pair(a, b, _SQRT2 * h))


@njit(cache=True)
def _sift_up(keys, idx, pos, i):
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= keys[i]:
            break
        keys[parent], keys[i] = keys[i], keys[parent]
        idx[parent], idx[i] = idx[i], idx[parent]
        pos[idx[i]] = i
        pos[idx[parent]] = parent
        i = parent


@njit(cache=True)
def _pop(keys, idx, pos, size):
    top = idx[0]
    pos[top] = -1
    size -= 1
    if size > 0:
        keys[0] = keys[size]
        idx[0] = idx[size]
        pos[idx[0]] = 0
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            child = left
            if left + 1 < size and keys[left + 1] < keys[left]:
                child = left + 1
            if keys[i] <= keys[child]:
                break
            keys[child], keys[i] = keys[i], keys[child]
            idx[child], idx[i] = idx[i], idx[child]
            pos[idx[i]] = i
            pos[idx[child]] = child
            i = child
    return top, size


@njit(cache=True)
def fmm_solve(trav, goal_rows, goal_cols, h):
    """Fast marching on an 8-neighbour stencil (axis-aligned and 45-degree frames).

    The narrow band is an indexed binary min-heap with decrease-key. Returns
    (arrival, accepted) where ``accepted`` lists arrival values in the order
    cells were frozen.
    """
    H, W = trav.shape
    u = np.full((H, W), np.inf)
    state = np.zeros((H, W), np.uint8)  # 0 far, 1 trial, 2 accepted
    accepted = np.empty(H * W)
    keys = np.empty(H * W)
    idx = np.empty(H * W, np.int64)
    pos = np.full(H * W, -1, np.int64)
    size = 0
    for k in range(len(goal_rows)):
        r = goal_rows[k]
        c = goal_cols[k]
        if state[r, c] == 0:
            u[r, c] = 0.0
            state[r, c] = 1
            keys[size] = 0.0
            idx[size] = r * W + c
            pos[r * W + c] = size
            size += 1
    n = 0
    while size > 0:
        flat, size = _pop(keys, idx, pos, size)
        r = flat // W
        c = flat % W
        state[r, c] = 2
        accepted[n] = u[r, c]
        n += 1
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                nr = r + dr
                nc = c + dc
                if not _free(trav, nr, nc) or state[nr, nc] == 2:
                    continue
                cand = _update(u, state, trav, nr, nc, h)
                if cand < u[nr, nc]:
                    u[nr, nc] = cand
                    f = nr * W + nc
                    if state[nr, nc] == 0:
                        state[nr, nc] = 1
                        keys[size] = cand
                        idx[size] = f
                        pos[f] = size
                        size += 1
                        _sift_up(keys, idx, pos, size - 1)
                    else:
                        i = pos[f]
                        keys[i] = cand
                        _sift_up(keys, idx, pos, i)
    return u, accepted[:n]
