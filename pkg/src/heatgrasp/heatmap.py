"""Ground-truth grasp encoding into heatmaps.

Grasp centers become a full-resolution confidence map of 2-D Gaussians;
grasp attributes (theta, width, depth offset) are encoded per grid cell:
theta as counts over uniformly spaced oriented anchors squashed to [0, 1],
width and depth as normalized cell means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import Grasp2D5


def default_sigma(width_px: float) -> float:
    """Kernel spread from the grasp width in pixels: a quarter of the jaw
    span, floored at one pixel."""
    return max(width_px / 4.0, 1.0)


@dataclass
class HeatmapConfig:
    """Geometry of the heatmap encoding.

    `px_per_m` converts grasp widths (meters) to pixels for the Gaussian
    sigma rule; `w_norm` / `d_norm` scale width and depth-offset targets to
    roughly [0, 1].
    """

    height: int = 360
    width: int = 640
    r: int = 8
    k_a: int = 6
    sigma_rule: Callable[[float], float] = default_sigma
    px_per_m: float = 900.0
    w_norm: float = 0.085
    d_norm: float = 0.1

    def __post_init__(self):
        if self.height % self.r or self.width % self.r:
            raise ValueError("grid side r must divide both image dimensions")
        if self.k_a < 1:
            raise ValueError("k_a must be >= 1")

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.height // self.r, self.width // self.r


@dataclass
class HeatmapSet:
    """The four encoded maps: full-resolution confidence plus gridded
    theta / width / depth attributes."""

    q_conf: np.ndarray     # (H, W) in [0, 1]
    q_theta: np.ndarray    # (H_r, W_r, k_a) in [0, 1]
    q_width: np.ndarray    # (H_r, W_r), width / w_norm cell means
    q_depth: np.ndarray    # (H_r, W_r), d / d_norm cell means


def theta_anchor_centers(k_a: int) -> np.ndarray:
    """Midpoints of k_a uniform bins over [-pi/2, pi/2]."""
    return -math.pi / 2.0 + (np.arange(k_a) + 0.5) * math.pi / k_a


def assign_theta_anchor(thetas, k_a: int) -> np.ndarray:
    """Nearest oriented-anchor index per theta; ties go to the lower index."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    centers = theta_anchor_centers(k_a)
    return np.argmin(np.abs(thetas[:, None] - centers[None, :]), axis=1)


def theta_residual(theta: float, k_a: int) -> tuple[int, float]:
    """Anchor index and the residual theta - center normalized by half the
    anchor pitch (in [-1, 1] for in-range theta)."""
    idx = int(assign_theta_anchor([theta], k_a)[0])
    center = theta_anchor_centers(k_a)[idx]
    return idx, (theta - center) / (math.pi / (2.0 * k_a))


def _check_centers(grasps: Sequence[Grasp2D5], cfg: HeatmapConfig) -> None:
    for g in grasps:
        if not (0 <= g.u < cfg.width and 0 <= g.v < cfg.height):
            raise ValueError(f"grasp center ({g.u}, {g.v}) outside the image")


def encode_confidence(grasps: Sequence[Grasp2D5], cfg: HeatmapConfig) -> np.ndarray:
    """Render each grasp center as a 2-D Gaussian peak, max-combined.

    Centers are quantized to the nearest pixel so every encoded grasp
    contributes an exact 1.0 there; the kernel is truncated at 3 sigma.
    """
    _check_centers(grasps, cfg)
    q = np.zeros((cfg.height, cfg.width))
    for g in grasps:
        u0 = min(int(round(g.u)), cfg.width - 1)
        v0 = min(int(round(g.v)), cfg.height - 1)
        sigma = cfg.sigma_rule(g.w * cfg.px_per_m)
        rad = int(math.ceil(3.0 * sigma))
        u_lo, u_hi = max(u0 - rad, 0), min(u0 + rad, cfg.width - 1)
        v_lo, v_hi = max(v0 - rad, 0), min(v0 + rad, cfg.height - 1)
        du = np.arange(u_lo, u_hi + 1) - u0
        dv = np.arange(v_lo, v_hi + 1) - v0
        d2 = dv[:, None] ** 2 + du[None, :] ** 2
        patch = np.exp(-d2 / (2.0 * sigma * sigma))
        patch[d2 > (3.0 * sigma) ** 2] = 0.0
        region = q[v_lo:v_hi + 1, u_lo:u_hi + 1]
        np.maximum(region, patch, out=region)
    return q


def count_squash(counts: np.ndarray) -> np.ndarray:
    """Monotone map of per-anchor grasp counts to [0, 1): c / (c + 1)."""
    counts = np.asarray(counts, dtype=np.float64)
    return counts / (counts + 1.0)


def encode_attributes(grasps: Sequence[Grasp2D5],
                      cfg: HeatmapConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gridded attribute targets (q_theta, q_width, q_depth).

    Per cell: theta of each contained grasp is assigned to its nearest
    oriented anchor and the per-anchor counts are squashed to [0, 1);
    width and depth-offset targets are normalized cell means. Empty cells
    stay zero.
    """
    _check_centers(grasps, cfg)
    hr, wr = cfg.grid_shape
    counts = np.zeros((hr, wr, cfg.k_a))
    w_sum = np.zeros((hr, wr))
    d_sum = np.zeros((hr, wr))
    n_cell = np.zeros((hr, wr))
    if grasps:
        anchor_idx = assign_theta_anchor([g.theta for g in grasps], cfg.k_a)
        for g, ai in zip(grasps, anchor_idx):
            i = min(int(g.v) // cfg.r, hr - 1)
            j = min(int(g.u) // cfg.r, wr - 1)
            counts[i, j, ai] += 1
            w_sum[i, j] += g.w
            d_sum[i, j] += g.d
            n_cell[i, j] += 1
    q_theta = count_squash(counts)
    denom = np.maximum(n_cell, 1.0)
    q_width = w_sum / denom / cfg.w_norm
    q_depth = d_sum / denom / cfg.d_norm
    return q_theta, q_width, q_depth


def encode_heatmaps(grasps: Sequence[Grasp2D5], cfg: HeatmapConfig) -> HeatmapSet:
    """Full encoding: confidence plus gridded attributes."""
    q_theta, q_width, q_depth = encode_attributes(grasps, cfg)
    return HeatmapSet(
        q_conf=encode_confidence(grasps, cfg),
        q_theta=q_theta,
        q_width=q_width,
        q_depth=q_depth,
    )


def downsample_bilinear(src: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Bilinear reduction to `target` (align_corners = False semantics).

    The target must divide the source shape; constant maps are preserved
    and outputs stay within [min, max] of the input.
    """
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    th, tw = target
    if h % th or w % tw:
        raise ValueError(f"target {target} must divide source shape {src.shape}")
    sy, sx = h / th, w / tw
    ys = (np.arange(th) + 0.5) * sy - 0.5
    xs = (np.arange(tw) + 0.5) * sx - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    top = src[y0][:, x0] * (1 - wx)[None, :] + src[y0][:, x1] * wx[None, :]
    bot = src[y1][:, x0] * (1 - wx)[None, :] + src[y1][:, x1] * wx[None, :]
    return top * (1 - wy)[:, None] + bot * wy[:, None]
