"""Straight-from-definition reference implementations.

These are the slow twins of the fast kernels and metrics: no incremental
state, no vectorized shortcuts beyond what the definition says. They exist
to cross-check the production paths and are used heavily by the test
suite. Distance arithmetic is the same explicit dx*dx + dy*dy + dz*dz as
the production code so index sets can be compared bit-for-bit.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import GripperSpec, Grasp6D, matrix_from_quat, rotation_distance


def _sqdist(a, b) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return dx * dx + dy * dy + dz * dz


def fps_bruteforce(points: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    """Farthest point sampling by recomputing, at every step, each point's
    distance to the selected set from scratch: argmax_p min_{s in S} d(p, s)."""
    points = np.asarray(points, dtype=np.float64)
    selected = [start]
    for _ in range(n - 1):
        best_d = -1.0
        best_j = selected[0]
        for j in range(len(points)):
            dmin = math.inf
            for s in selected:
                d = _sqdist(points[j], points[s])
                if d < dmin:
                    dmin = d
            if dmin > best_d:
                best_d = dmin
                best_j = j
        selected.append(best_j)
    return np.array(selected, dtype=np.int64)


def ball_query_bruteforce(points: np.ndarray, center, radius: float,
                          cap: int | None = None) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    r2 = radius * radius
    out = []
    for j in range(len(points)):
        if _sqdist(points[j], center) <= r2:
            out.append(j)
            if cap is not None and len(out) == cap:
                break
    return np.array(out, dtype=np.int64)


def knn_bruteforce(queries: np.ndarray, points: np.ndarray, k: int) -> np.ndarray:
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    points = np.asarray(points, dtype=np.float64)
    out = np.empty((len(queries), k), dtype=np.int64)
    for qi, q in enumerate(queries):
        dists = [_sqdist(points[j], q) for j in range(len(points))]
        order = sorted(range(len(points)), key=lambda j: (dists[j], j))
        out[qi] = order[:k]
    return out


def gripper_boxes(gripper: GripperSpec, width: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """The three collision boxes in the gripper frame as (lo, hi) corner
    pairs: two fingers beside the closing region and a back plate behind it.
    x = closing axis, y = transverse, z = approach (deeper is +z)."""
    w2 = width / 2.0
    ft = gripper.finger_thickness
    h2 = gripper.height / 2.0
    fd2 = gripper.finger_depth / 2.0
    return [
        (np.array([w2, -h2, -fd2]), np.array([w2 + ft, h2, fd2])),
        (np.array([-w2 - ft, -h2, -fd2]), np.array([-w2, h2, fd2])),
        (np.array([-w2 - ft, -h2, -fd2 - ft]), np.array([w2 + ft, h2, -fd2])),
    ]


def collision_check_bruteforce(grasp: Grasp6D, points: np.ndarray,
                               gripper: GripperSpec) -> bool:
    """True iff any point lies strictly inside any gripper box; point by
    point, box by box, scalar arithmetic."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    R = matrix_from_quat(grasp.q)
    t = grasp.t
    boxes = gripper_boxes(gripper, grasp.width)
    for p in points:
        dx = p[0] - t[0]
        dy = p[1] - t[1]
        dz = p[2] - t[2]
        lx = dx * R[0, 0] + dy * R[1, 0] + dz * R[2, 0]
        ly = dx * R[0, 1] + dy * R[1, 1] + dz * R[2, 1]
        lz = dx * R[0, 2] + dy * R[1, 2] + dz * R[2, 2]
        for lo, hi in boxes:
            if lo[0] < lx < hi[0] and lo[1] < ly < hi[1] and lo[2] < lz < hi[2]:
                return True
    return False


def coverage_rate_bruteforce(pred: list[Grasp6D], gt: list[Grasp6D],
                             trans_thresh: float = 0.02,
                             rot_thresh: float = 0.1) -> float:
    """Fraction of ground-truth grasps with at least one prediction inside
    both thresholds, by double loop."""
    if not gt:
        raise ValueError("ground truth is empty")
    if not pred:
        return 0.0
    tt2 = trans_thresh * trans_thresh
    covered = 0
    for g in gt:
        for p in pred:
            if _sqdist(p.t, g.t) <= tt2 and rotation_distance(p.q, g.q) <= rot_thresh:
                covered += 1
                break
    return covered / len(gt)


def antipodal_score_bruteforce(grasp: Grasp6D, points: np.ndarray,
                               normals: np.ndarray, mu: float,
                               gripper: GripperSpec) -> tuple[float, bool]:
    """Contact-normal alignment with the closing axis, from the definition:
    scan the closing region for the points nearest each finger's inner
    face, average |n . c|, and check both contacts against the friction
    cone."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    R = matrix_from_quat(grasp.q)
    t = grasp.t
    w2 = grasp.width / 2.0
    h2 = gripper.height / 2.0
    fd2 = gripper.finger_depth / 2.0
    best_hi = None   # nearest to the +x finger face: max local x
    best_hi_x = -math.inf
    best_lo = None
    best_lo_x = math.inf
    for j, p in enumerate(points):
        if not (math.isfinite(normals[j][0]) and math.isfinite(normals[j][1])
                and math.isfinite(normals[j][2])):
            continue
        dx = p[0] - t[0]
        dy = p[1] - t[1]
        dz = p[2] - t[2]
        lx = dx * R[0, 0] + dy * R[1, 0] + dz * R[2, 0]
        ly = dx * R[0, 1] + dy * R[1, 1] + dz * R[2, 1]
        lz = dx * R[0, 2] + dy * R[1, 2] + dz * R[2, 2]
        if -w2 <= lx <= w2 and -h2 <= ly <= h2 and -fd2 <= lz <= fd2:
            if lx > best_hi_x:
                best_hi_x = lx
                best_hi = j
            if lx < best_lo_x:
                best_lo_x = lx
                best_lo = j
    if best_hi is None or best_lo is None:
        return 0.0, False
    c = R[:, 0]
    a1 = abs(normals[best_hi][0] * c[0] + normals[best_hi][1] * c[1] + normals[best_hi][2] * c[2])
    a2 = abs(normals[best_lo][0] * c[0] + normals[best_lo][1] * c[1] + normals[best_lo][2] * c[2])
    cone = 1.0 / math.sqrt(1.0 + mu * mu)
    return 0.5 * (a1 + a2), bool(a1 >= cone and a2 >= cone)


def assign_nearest_bruteforce(samples, anchors) -> np.ndarray:
    """Per-sample argmin over |sample - anchor|, lowest index on ties."""
    out = []
    for s in samples:
        best = 0
        best_d = abs(s - anchors[0])
        for i in range(1, len(anchors)):
            d = abs(s - anchors[i])
            if d < best_d:
                best_d = d
                best = i
        out.append(best)
    return np.array(out, dtype=np.int64)
