"""Deterministic point-cloud kernels: depth-to-cloud, farthest point
sampling, ball query, KNN, and normal estimation.

Every kernel has a straight-from-definition twin in `heatgrasp.reference`
that it must match bit-for-bit on index sets; distance comparisons here use
the same explicit scalar arithmetic as the twins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import CameraIntrinsics, deproject


@dataclass
class PointCloud:
    """Camera-frame point set with optional per-point normals and colors.

    Normals are unit vectors oriented toward the camera origin; rows that
    could not be estimated (degenerate neighborhoods) are NaN and count as
    flagged invalid.
    """

    points: np.ndarray
    normals: np.ndarray | None = None
    colors: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(self.normals) != len(self.points):
                raise ValueError("normals and points must have equal length")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
            if len(self.colors) != len(self.points):
                raise ValueError("colors and points must have equal length")

    def __len__(self) -> int:
        return len(self.points)

    def valid_normal_mask(self) -> np.ndarray:
        if self.normals is None:
            raise ValueError("cloud has no normals")
        return np.isfinite(self.normals).all(axis=1)


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def depth_to_cloud(depth: np.ndarray, intr: CameraIntrinsics, stride: int = 1,
                   colors: np.ndarray | None = None,
                   normal_map: np.ndarray | None = None) -> PointCloud:
    """Deproject a depth map to a point cloud on a stride lattice.

    Pixels with non-positive or non-finite depth are skipped; output order
    is row-major over the lattice. `colors` (H, W, 3) and `normal_map`
    (H, W, 3) are sampled on the same lattice and carried through.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (intr.height, intr.width):
        raise ValueError(f"depth shape {depth.shape} does not match intrinsics "
                         f"({intr.height}, {intr.width})")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    vs = np.arange(0, intr.height, stride)
    us = np.arange(0, intr.width, stride)
    vv, uu = np.meshgrid(vs, us, indexing="ij")
    z = depth[vv, uu]
    valid = np.isfinite(z) & (z > 0)
    uu, vv, z = uu[valid], vv[valid], z[valid]
    pts = np.empty((len(z), 3))
    pts[:, 0] = (uu - intr.cx) * z / intr.fx
    pts[:, 1] = (vv - intr.cy) * z / intr.fy
    pts[:, 2] = z
    cols = colors[vv, uu] if colors is not None else None
    norms = normal_map[vv, uu] if normal_map is not None else None
    return PointCloud(points=pts, normals=norms, colors=cols)


def farthest_point_sample(cloud, n: int, start: int = 0) -> np.ndarray:
    """Greedy max-min selection of n point indices, beginning at `start`.

    Deterministic: distance ties break toward the lowest index.
    """
    pts = _as_points(cloud)
    if not 1 <= n <= len(pts):
        raise ValueError(f"cannot sample {n} points from a cloud of {len(pts)}")
    if not 0 <= start < len(pts):
        raise ValueError("start index out of range")
    return _kernels.fps_indices(np.ascontiguousarray(pts), n, start)


def ball_query(cloud, center, radius: float, cap: int | None = None) -> np.ndarray:
    """Indices of points with distance <= radius from center, ascending,
    truncated to `cap` if given (None = unlimited)."""
    pts = _as_points(cloud)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if cap is not None and cap < 1:
        raise ValueError("cap must be >= 1")
    c = np.asarray(center, dtype=np.float64).reshape(3)
    dx = pts[:, 0] - c[0]
    dy = pts[:, 1] - c[1]
    dz = pts[:, 2] - c[2]
    d = dx * dx
    d += dy * dy
    d += dz * dz
    idx = np.nonzero(d <= radius * radius)[0]
    if cap is not None:
        idx = idx[:cap]
    return idx


def knn(queries, cloud, k: int) -> np.ndarray:
    """Per-query indices of the k nearest cloud points, ascending distance,
    ties toward the lowest index. Returns (Q, k)."""
    pts = _as_points(cloud)
    qs = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    if k > len(pts):
        raise ValueError(f"k={k} exceeds cloud size {len(pts)}")
    if k < 1:
        raise ValueError("k must be >= 1")
    out = np.empty((len(qs), k), dtype=np.int64)
    # chunk queries to bound the (chunk, N) distance matrix
    chunk = max(1, int(4e6) // max(len(pts), 1))
    for s in range(0, len(qs), chunk):
        q = qs[s:s + chunk]
        dx = pts[None, :, 0] - q[:, None, 0]
        dy = pts[None, :, 1] - q[:, None, 1]
        dz = pts[None, :, 2] - q[:, None, 2]
        d = dx * dx
        d += dy * dy
        d += dz * dz
        out[s:s + chunk] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def estimate_normals(cloud: PointCloud, k: int = 16) -> PointCloud:
    """Per-point normals from the k-neighborhood covariance.

    The normal is the eigenvector of the smallest covariance eigenvalue,
    oriented toward the camera origin (n . p <= 0). Neighborhoods of rank
    < 2 get a NaN normal (flagged invalid).
    """
    if k < 3:
        raise ValueError("normal estimation needs k >= 3")
    pts = _as_points(cloud)
    if k > len(pts):
        raise ValueError(f"k={k} exceeds cloud size {len(pts)}")
    nbr = knn(pts, pts, k)
    neigh = pts[nbr]                            # (N, k, 3)
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered)
    evals, evecs = np.linalg.eigh(cov)          # ascending eigenvalues
    normals = evecs[:, :, 0]
    # rank < 2: the two smallest eigenvalues both vanish relative to the largest
    degenerate = evals[:, 1] <= 1e-10 * np.maximum(evals[:, 2], 1e-300)
    dots = np.einsum("ni,ni->n", normals, pts)
    normals = np.where((dots > 0)[:, None], -normals, normals)
    normals[degenerate] = np.nan
    colors = cloud.colors if isinstance(cloud, PointCloud) else None
    return PointCloud(points=pts, normals=normals, colors=colors)
