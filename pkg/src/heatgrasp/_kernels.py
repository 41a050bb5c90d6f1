"""Numba kernels for the point-cloud hot paths.

Distance arithmetic is kept as explicit dx*dx + dy*dy + dz*dz in scalar
order so the selected index sets match the reference implementations
bit-for-bit (no fastmath, no reassociation).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def fps_indices(points, n_sample, start):
    """Greedy farthest point sampling over an (N, 3) array.

    Returns the first `n_sample` selected indices; ties in the max-min
    distance break toward the lowest index.
    """
    n = points.shape[0]
    out = np.empty(n_sample, dtype=np.int64)
    dist = np.full(n, np.inf)
    cur = start
    for i in range(n_sample):
        out[i] = cur
        cx = points[cur, 0]
        cy = points[cur, 1]
        cz = points[cur, 2]
        best = -1.0
        nxt = cur
        for j in range(n):
            dx = points[j, 0] - cx
            dy = points[j, 1] - cy
            dz = points[j, 2] - cz
            d = dx * dx + dy * dy + dz * dz
            if d < dist[j]:
                dist[j] = d
            if dist[j] > best:
                best = dist[j]
                nxt = j
        cur = nxt
    return out


@njit(cache=True)
def fps_batch(points, counts, n_sample, out):
    """fps_indices over a padded (R, M, 3) batch with per-row valid counts,
    always starting from row-local index 0. Fills out (R, n_sample)."""
    n_regions = points.shape[0]
    max_m = points.shape[1]
    dist = np.empty(max_m)
    for r in range(n_regions):
        m = counts[r]
        for j in range(m):
            dist[j] = np.inf
        cur = 0
        for i in range(n_sample):
            out[r, i] = cur
            cx = points[r, cur, 0]
            cy = points[r, cur, 1]
            cz = points[r, cur, 2]
            best = -1.0
            nxt = cur
            for j in range(m):
                dx = points[r, j, 0] - cx
                dy = points[r, j, 1] - cy
                dz = points[r, j, 2] - cz
                d = dx * dx + dy * dy + dz * dz
                if d < dist[j]:
                    dist[j] = d
                if dist[j] > best:
                    best = dist[j]
                    nxt = j
            cur = nxt


@njit(cache=True)
def ball_scan(points, cx, cy, cz, radius_sq, out):
    """Indices of points within sqrt(radius_sq) of the center (inclusive),
    ascending. Writes into `out` and returns the count; extra in-ball
    points beyond len(out) are dropped."""
    cap = out.shape[0]
    count = 0
    for j in range(points.shape[0]):
        dx = points[j, 0] - cx
        dy = points[j, 1] - cy
        dz = points[j, 2] - cz
        if dx * dx + dy * dy + dz * dz <= radius_sq:
            if count < cap:
                out[count] = j
            count += 1
    return count
