"""Turning per-region rotation scores and offsets into metric grasps.

Rotation candidates are the k_r x k_r combinations of the gamma and beta
anchors, scored as a multi-label classification; each selected class
contributes one grasp at the region center plus its per-class 3-D offset.
Also hosts grasp-level NMS and the teacher oracle that stands in for the
trained predictor so the whole decoding path can be driven from ground
truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import Region
from .anchors import AnchorSet, assign_nearest
from .geometry import (Grasp6D, angles_from_rotation, matrix_from_quat,
                       quat_from_matrix, rotation_distance, rotation_from_angles)


@dataclass
class RegionPrediction:
    """Per-region decoding inputs.

    class_scores has k_r^2 entries indexed i * k_r + j over the
    (gamma_i, beta_j) anchor pairs; offsets holds one 3-D center correction
    per class. theta and width are shared by the region's grasps.
    `sources` optionally records which ground-truth label produced each hot
    class (teacher bookkeeping; not used by the decoder).
    """

    class_scores: np.ndarray
    offsets: np.ndarray
    theta: float
    width: float
    region: Region
    depth_offset: float = 0.0
    sources: dict = field(default_factory=dict)

    def __post_init__(self):
        self.class_scores = np.asarray(self.class_scores, dtype=np.float64).ravel()
        self.offsets = np.asarray(self.offsets, dtype=np.float64).reshape(-1, 3)
        if len(self.offsets) != len(self.class_scores):
            raise ValueError("offsets and class_scores must have equal length")
        k2 = len(self.class_scores)
        k = int(round(k2 ** 0.5))
        if k * k != k2:
            raise ValueError("class count must be a perfect square (k_r^2)")


def decode_region(pred: RegionPrediction, anchors: AnchorSet,
                  threshold: float = 0.5, max_per_region: int = 8) -> list[Grasp6D]:
    """Emit one grasp per class scoring at or above the threshold (highest
    first, up to max_per_region); if none qualify, the argmax class alone.

    Class (i, j) decodes to gamma_i / beta_j with the region's theta, at
    the region center plus the class offset.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0, 1)")
    if max_per_region < 1:
        raise ValueError("max_per_region must be >= 1")
    k_r = anchors.k_r
    if len(pred.class_scores) != k_r * k_r:
        raise ValueError("prediction class count does not match the anchor set")
    order = np.argsort(-pred.class_scores, kind="stable")
    selected = [c for c in order if pred.class_scores[c] >= threshold][:max_per_region]
    if not selected:
        selected = [order[0]]
    grasps = []
    for c in selected:
        i, j = divmod(int(c), k_r)
        R = rotation_from_angles(pred.theta, float(anchors.gamma[i]), float(anchors.beta[j]))
        t = pred.region.center + pred.offsets[c]
        grasps.append(Grasp6D(t=t, q=quat_from_matrix(R), width=pred.width,
                              score=float(pred.class_scores[c])))
    return grasps


def grasp_nms(grasps: list[Grasp6D], trans_thresh: float = 0.02,
              rot_thresh: float = 0.1) -> list[Grasp6D]:
    """Greedy non-maximum suppression over poses.

    Grasps are visited by descending score (stable on ties); a grasp is
    suppressed iff some kept grasp is within BOTH thresholds (inclusive).
    """
    if trans_thresh <= 0 or rot_thresh <= 0:
        raise ValueError("NMS thresholds must be positive")
    if not grasps:
        return []
    order = np.argsort([-g.score for g in grasps], kind="stable")
    tt2 = trans_thresh * trans_thresh
    kept: list[Grasp6D] = []
    for gi in order:
        g = grasps[gi]
        suppressed = False
        for k in kept:
            dx = g.t[0] - k.t[0]
            dy = g.t[1] - k.t[1]
            dz = g.t[2] - k.t[2]
            if (dx * dx + dy * dy + dz * dz <= tt2
                    and rotation_distance(g.q, k.q) <= rot_thresh):
                suppressed = True
                break
        if not suppressed:
            kept.append(g)
    return kept


def teacher_predictions(gt_poses: list[Grasp6D], regions: list[Region],
                        anchors: AnchorSet,
                        exact_offsets: bool = True) -> list[RegionPrediction]:
    """Oracle predictions derived from ground truth (teacher forcing).

    Every label whose center lies inside a region's ball scores 1.0 at its
    nearest (gamma, beta) anchor pair in that region. Labels are grouped by
    their exact (theta, width) so each group forms one prediction (theta
    and width are shared per prediction). With exact_offsets each hot class
    carries the true center residual, otherwise zero. When two grouped
    labels claim the same class, the one nearer the region center wins.
    Regions containing no label emit all-zero scores (the decoder's argmax
    fallback applies); their width falls back to the region radius.
    """
    k_r = anchors.k_r
    n_cls = k_r * k_r
    gt_angles = []
    for g in gt_poses:
        theta, gamma, beta = angles_from_rotation(matrix_from_quat(g.q))
        gt_angles.append((theta, gamma, beta))
    preds: list[RegionPrediction] = []
    for region in regions:
        r2 = region.radius * region.radius
        groups: dict[tuple[float, float], list[int]] = {}
        for gi, g in enumerate(gt_poses):
            dx = g.t[0] - region.center[0]
            dy = g.t[1] - region.center[1]
            dz = g.t[2] - region.center[2]
            if dx * dx + dy * dy + dz * dz <= r2:
                groups.setdefault((gt_angles[gi][0], g.width), []).append(gi)
        if not groups:
            preds.append(RegionPrediction(
                class_scores=np.zeros(n_cls), offsets=np.zeros((n_cls, 3)),
                theta=0.0, width=region.radius, region=region))
            continue
        for (theta, width), members in groups.items():
            scores = np.zeros(n_cls)
            offsets = np.zeros((n_cls, 3))
            sources: dict[int, int] = {}
            claimed_d2: dict[int, float] = {}
            for gi in members:
                _, gamma, beta = gt_angles[gi]
                ci = int(assign_nearest([gamma], anchors.gamma)[0])
                cj = int(assign_nearest([beta], anchors.beta)[0])
                c = ci * k_r + cj
                resid = gt_poses[gi].t - region.center
                d2 = float(resid @ resid)
                if c in sources and claimed_d2[c] <= d2:
                    continue
                scores[c] = 1.0
                offsets[c] = resid if exact_offsets else 0.0
                sources[c] = gi
                claimed_d2[c] = d2
            preds.append(RegionPrediction(
                class_scores=scores, offsets=offsets, theta=theta, width=width,
                region=region, sources=sources))
    return preds
