"""Pure-Python reference kernels.

Both functions mirror ``_ckernels`` exactly, including the order in which
uniform draws are taken from the bit generator, so that a seeded run gives
identical output on either backend.
"""

from __future__ import annotations

import math

import numpy as np

GRID = 11
N_CELLS = GRID * GRID

# (dx, dy) for +x, -x, +y, -y, in draw order
_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))

# Euclidean distance for offsets in [-12, 12]; off-grid destinations reach +-12
_DIST = [[math.sqrt(dx * dx + dy * dy) for dy in range(-12, 13)] for dx in range(-12, 13)]


def renewal_counts(probs: np.ndarray, support_min: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(at_least, exact)`` for the replication count within ``budget``.

    ``at_least[c] = Pr{t_1 + ... + t_c <= budget}`` and
    ``exact[c] = Pr{n = c}``, for c = 0 .. C where C is the largest count with
    nonzero (non-underflowed) probability.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    m = probs.shape[0]
    # surv[u] = Pr{t > u} for u = 0 .. budget
    tail = np.concatenate([np.cumsum(probs[::-1])[::-1], [0.0]])
    u = np.arange(budget + 1)
    idx = np.clip(u - support_min + 1, 0, m)
    surv = np.where(u < support_min, tail[0], tail[idx])

    at_least = [1.0]
    exact = [float(surv[budget])]
    dist = np.ones(1)
    lo = 0
    while True:
        lo += support_min
        if lo > budget:
            break
        dist = np.convolve(dist, probs)[: budget - lo + 1]
        mass = float(dist.sum())
        if mass == 0.0:
            break
        at_least.append(mass)
        s_surv = surv[budget - lo - np.arange(dist.shape[0])]
        exact.append(float(np.dot(dist, s_surv)))
    return np.array(at_least), np.array(exact)


def _one_response(sensor_mask, rng, horizon: int, interior: bool) -> int:
    side, off = (GRID - 2, 1) if interior else (GRID, 0)
    src = int(rng.random() * (side * side))
    if src >= side * side:
        src = side * side - 1
    x0, y0 = off + src % side, off + src // side
    if sensor_mask[y0 * GRID + x0]:
        return 1
    px: list[int] = []
    py: list[int] = []
    for t in range(1, horizon + 1):
        px.append(x0)
        py.append(y0)
        for p in range(len(px)):
            x, y = px[p], py[p]
            w = [_DIST[x + dx - x0 + 12][y + dy - y0 + 12] for dx, dy in _MOVES]
            r = rng.random() * (w[0] + w[1] + w[2] + w[3])
            d = 3
            acc = 0.0
            for k in range(3):
                acc += w[k]
                if r < acc:
                    d = k
                    break
            nx, ny = x + _MOVES[d][0], y + _MOVES[d][1]
            if 0 <= nx < GRID and 0 <= ny < GRID:
                px[p], py[p] = nx, ny
                if sensor_mask[ny * GRID + nx]:
                    return t
    return -1


def smoke_response_times(sensor_mask, n: int, bit_generator, horizon: int, interior: bool = True) -> np.ndarray:
    """Simulate ``n`` detection times; -1 marks a run censored at ``horizon``.

    With ``interior`` the fire source is uniform over the 9x9 points strictly
    inside the lattice, otherwise over all 121 points.
    """
    rng = np.random.Generator(bit_generator)
    mask = [bool(v) for v in np.asarray(sensor_mask).ravel()]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        out[r] = _one_response(mask, rng, horizon, interior)
    return out
