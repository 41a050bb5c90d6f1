"""Heatmap-guided region aggregation.

The confidence map is reduced to the attribute grid, the top-confidence
cells become region seeds (peak pixel deprojected, pushed along the
optical axis by the decoded depth offset, radius = decoded width), and
each seed crops a ball of scene points that is resampled to a fixed size
by farthest point sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import CameraIntrinsics
from .heatmap import HeatmapConfig, downsample_bilinear
from .pointops import PointCloud


@dataclass
class AggregationConfig:
    k_center: int = 48
    n_region_points: int = 512        # points kept per region
    min_region_points: int = 16       # balls thinner than this are dropped
    ball_cap: int = 1024              # FPS candidate budget per ball
    fusion_k: int = 16                # grid cells mapped to each region point

    def __post_init__(self):
        if self.k_center < 1:
            raise ValueError("k_center must be >= 1")
        if not self.n_region_points >= self.min_region_points >= 1:
            raise ValueError("need n_region_points >= min_region_points >= 1")
        if self.ball_cap < self.n_region_points:
            raise ValueError("ball_cap must be >= n_region_points")


@dataclass
class RegionSeed:
    """A selected grid cell with its 3-D center and crop radius."""

    cell: tuple[int, int]
    center: np.ndarray
    radius: float


@dataclass
class Region:
    """A fixed-size local point set cropped around a seed.

    `indices` point into the scene cloud (exactly n_region_points entries,
    repeat-padded for thin balls). `pixel_knn` maps each region point to
    its nearest attribute-grid cells (flattened row-major indices) for
    semantic feature grouping.
    """

    cell: tuple[int, int]
    center: np.ndarray
    radius: float
    indices: np.ndarray
    pixel_knn: np.ndarray | None = None


def select_centers(q_conf: np.ndarray, q_width: np.ndarray, q_depth: np.ndarray,
                   depth: np.ndarray, intr: CameraIntrinsics,
                   cfg: AggregationConfig, heat_cfg: HeatmapConfig) -> list[RegionSeed]:
    """Pick the k_center highest-confidence grid cells and seed regions.

    The confidence map is bilinearly reduced to the grid, nonzero cells are
    ranked (ties in row-major order), and each cell contributes its peak
    full-resolution pixel as (u, v). Cells without valid depth at the peak
    or without a positive decoded width are skipped and replaced by the
    next-ranked cell.
    """
    q_conf = np.asarray(q_conf, dtype=np.float64)
    hr, wr = heat_cfg.grid_shape
    if q_conf.shape != (heat_cfg.height, heat_cfg.width):
        raise ValueError("confidence map shape does not match the heatmap config")
    if q_width.shape != (hr, wr) or q_depth.shape != (hr, wr):
        raise ValueError("gridded attribute shape does not match the heatmap config")
    grid = downsample_bilinear(q_conf, (hr, wr))
    flat = grid.ravel()
    ranked = np.argsort(-flat, kind="stable")
    r = heat_cfg.r
    seeds: list[RegionSeed] = []
    for f in ranked:
        if len(seeds) == cfg.k_center:
            break
        if flat[f] <= 0.0:
            break    # ranked order: everything after is zero too
        i, j = divmod(int(f), wr)
        window = q_conf[i * r:(i + 1) * r, j * r:(j + 1) * r]
        pv, pu = divmod(int(np.argmax(window)), window.shape[1])
        u, v = j * r + pu, i * r + pv
        z = depth[v, u]
        if not (np.isfinite(z) and z > 0):
            continue
        width = float(q_width[i, j]) * heat_cfg.w_norm
        if width <= 0:
            continue
        center = np.array([
            (u - intr.cx) * z / intr.fx,
            (v - intr.cy) * z / intr.fy,
            z + float(q_depth[i, j]) * heat_cfg.d_norm,
        ])
        seeds.append(RegionSeed(cell=(i, j), center=center, radius=width))
    return seeds


def _decimate(idx: np.ndarray, cap: int) -> np.ndarray:
    """Evenly spread subsample of an ascending index array down to cap."""
    if len(idx) <= cap:
        return idx
    pick = np.round(np.linspace(0, len(idx) - 1, cap)).astype(np.int64)
    return idx[pick]


def aggregate_regions(cloud: PointCloud, seeds: list[RegionSeed],
                      cfg: AggregationConfig,
                      intr: CameraIntrinsics | None = None,
                      heat_cfg: HeatmapConfig | None = None) -> list[Region]:
    """Crop a ball per seed and resample it to a fixed point count.

    Balls with at least n_region_points candidates go through farthest
    point sampling (started at their lowest scene index); thinner balls at
    or above min_region_points are repeat-padded; anything smaller drops
    the region. When `intr` and `heat_cfg` are given each region also gets
    its pixel-grid KNN map.
    """
    pts = np.ascontiguousarray(cloud.points)
    n_g = cfg.n_region_points
    buf = np.empty(len(pts), dtype=np.int64)
    kept: list[tuple[RegionSeed, np.ndarray, bool]] = []
    for seed in seeds:
        if seed.radius <= 0:
            continue
        count = _kernels.ball_scan(pts, seed.center[0], seed.center[1],
                                   seed.center[2], seed.radius * seed.radius, buf)
        idx = buf[:count].copy()
        if count < cfg.min_region_points:
            continue
        if count < n_g:
            kept.append((seed, np.resize(idx, n_g), False))
        else:
            # even decimation to the FPS budget; a plain prefix cap would
            # bias regions toward low pixel rows
            kept.append((seed, _decimate(idx, cfg.ball_cap), True))

    fps_rows = [k for k, (_, _, needs_fps) in enumerate(kept) if needs_fps]
    if fps_rows:
        max_m = max(len(kept[k][1]) for k in fps_rows)
        slab = np.zeros((len(fps_rows), max_m, 3))
        counts = np.empty(len(fps_rows), dtype=np.int64)
        for row, k in enumerate(fps_rows):
            idx = kept[k][1]
            slab[row, :len(idx)] = pts[idx]
            counts[row] = len(idx)
        picks = np.empty((len(fps_rows), n_g), dtype=np.int64)
        _kernels.fps_batch(slab, counts, n_g, picks)
    row_of = {k: row for row, k in enumerate(fps_rows)}

    regions: list[Region] = []
    for k, (seed, idx, _) in enumerate(kept):
        chosen = idx[picks[row_of[k]]] if k in row_of else idx
        region = Region(cell=seed.cell, center=seed.center, radius=seed.radius,
                        indices=chosen)
        if intr is not None and heat_cfg is not None:
            region.pixel_knn = _grid_knn(pts[chosen], intr, heat_cfg, cfg.fusion_k)
        regions.append(region)
    return regions


def _grid_knn(points: np.ndarray, intr: CameraIntrinsics, heat_cfg: HeatmapConfig,
              k: int) -> np.ndarray:
    """For each 3-D point, the k nearest attribute-grid cells by projected
    pixel distance to the cell centers (flattened row-major cell indices).

    Exploits the lattice: candidates come from a window around the
    containing cell, which always covers the true k nearest for k <= 16.
    """
    hr, wr = heat_cfg.grid_shape
    if k > hr * wr:
        raise ValueError("fusion_k exceeds the number of grid cells")
    r = heat_cfg.r
    u = points[:, 0] * intr.fx / points[:, 2] + intr.cx
    v = points[:, 1] * intr.fy / points[:, 2] + intr.cy
    ci = np.clip(v // r, 0, hr - 1).astype(np.int64)
    cj = np.clip(u // r, 0, wr - 1).astype(np.int64)
    half = 3
    offs = np.arange(-half, half + 1)
    oi, oj = np.meshgrid(offs, offs, indexing="ij")
    cand_i = np.clip(ci[:, None] + oi.ravel()[None, :], 0, hr - 1)
    cand_j = np.clip(cj[:, None] + oj.ravel()[None, :], 0, wr - 1)
    cu = (cand_j + 0.5) * r
    cv = (cand_i + 0.5) * r
    d = (cu - u[:, None]) ** 2 + (cv - v[:, None]) ** 2
    flat = cand_i * wr + cand_j
    # clamping duplicates border cells; push duplicates to the back
    order_key = np.argsort(flat, axis=1, kind="stable")
    rows = np.arange(len(points))[:, None]
    flat_sorted = flat[rows, order_key]
    d_sorted = d[rows, order_key]
    dup = np.zeros_like(flat_sorted, dtype=bool)
    dup[:, 1:] = flat_sorted[:, 1:] == flat_sorted[:, :-1]
    d_sorted[dup] = np.inf
    nearest = np.argsort(d_sorted, axis=1, kind="stable")[:, :k]
    return flat_sorted[rows, nearest]
