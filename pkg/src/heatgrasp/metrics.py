"""Grasp-set quality metrics.

Coverage Rate counts ground-truth grasps matched by a prediction within
both a translation and a quaternion threshold; the Collision-Free Ratio
checks predicted gripper volumes against the scene cloud; the Antipodal
Score measures contact-normal alignment with the closing axis as a force
closure proxy. Quality-vs-coverage curves evaluate score-ranked prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Grasp6D, GripperSpec, matrix_from_quat
from .pointops import PointCloud
from .reference import gripper_boxes

COVERAGE_TRANS_THRESH = 0.02
COVERAGE_ROT_THRESH = 0.1


@dataclass
class MetricsReport:
    cr: float
    cfr: float
    antipodal: float
    covered_gt: np.ndarray          # per ground-truth flag
    collision_free: np.ndarray      # per prediction flag
    antipodal_scores: np.ndarray    # per prediction score
    force_closure: np.ndarray       # per prediction friction-cone flag
    curves: list = field(default_factory=list)   # rows (k, CR, CFR, AS)

    def to_dict(self) -> dict:
        return {
            "CR": self.cr,
            "CFR": self.cfr,
            "AS": self.antipodal,
            "n_pred": int(len(self.collision_free)),
            "n_gt": int(len(self.covered_gt)),
            "curves": [list(map(float, row)) for row in self.curves],
        }


def covered_mask(pred: list[Grasp6D], gt: list[Grasp6D],
                 trans_thresh: float = COVERAGE_TRANS_THRESH,
                 rot_thresh: float = COVERAGE_ROT_THRESH) -> np.ndarray:
    """Per ground-truth flag: some prediction within both thresholds
    (inclusive; distances compared squared, rotation as 1 - |q . q'|)."""
    if not gt:
        raise ValueError("ground truth is empty")
    if not pred:
        return np.zeros(len(gt), dtype=bool)
    tp = np.array([p.t for p in pred])
    tg = np.array([g.t for g in gt])
    qp = np.array([p.q for p in pred])
    qg = np.array([g.q for g in gt])
    dx = tp[:, None, 0] - tg[None, :, 0]
    dy = tp[:, None, 1] - tg[None, :, 1]
    dz = tp[:, None, 2] - tg[None, :, 2]
    d2 = dx * dx
    d2 += dy * dy
    d2 += dz * dz
    qdot = np.abs(qp @ qg.T)
    ok = (d2 <= trans_thresh * trans_thresh) & (1.0 - qdot <= rot_thresh)
    return ok.any(axis=0)


def coverage_rate(pred: list[Grasp6D], gt: list[Grasp6D],
                  trans_thresh: float = COVERAGE_TRANS_THRESH,
                  rot_thresh: float = COVERAGE_ROT_THRESH) -> float:
    """Fraction of ground truth covered by at least one prediction."""
    return float(covered_mask(pred, gt, trans_thresh, rot_thresh).mean())


def _local_frame(grasp: Grasp6D, points: np.ndarray) -> np.ndarray:
    """Scene points expressed in the gripper frame of `grasp`."""
    R = matrix_from_quat(grasp.q)
    d = points - grasp.t
    local = np.empty_like(d)
    for axis in range(3):
        lx = d[:, 0] * R[0, axis]
        lx += d[:, 1] * R[1, axis]
        lx += d[:, 2] * R[2, axis]
        local[:, axis] = lx
    return local


def collision_check(grasp: Grasp6D, cloud, gripper: GripperSpec) -> bool:
    """True iff any cloud point lies strictly inside one of the gripper's
    three boxes (two fingers and the back plate). The closing region
    between the fingers is free space."""
    points = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
    points = points.reshape(-1, 3)
    if len(points) == 0:
        return False
    local = _local_frame(grasp, points)
    for lo, hi in gripper_boxes(gripper, grasp.width):
        inside = ((local[:, 0] > lo[0]) & (local[:, 0] < hi[0])
                  & (local[:, 1] > lo[1]) & (local[:, 1] < hi[1])
                  & (local[:, 2] > lo[2]) & (local[:, 2] < hi[2]))
        if inside.any():
            return True
    return False


def antipodal_score(grasp: Grasp6D, cloud: PointCloud, mu: float,
                    gripper: GripperSpec) -> tuple[float, bool]:
    """Contact-normal alignment with the closing axis, in [0, 1].

    The two contacts are the closing-region points nearest each finger's
    inner face (largest and smallest coordinate along the closing axis).
    Returns (score, force_closure): score = (|n1.c| + |n2.c|) / 2 and the
    flag is True iff both contacts are inside the friction cone
    (|n.c| >= cos(arctan mu)). Missing contacts give (0.0, False).
    Points with invalid (NaN) normals are ignored.
    """
    if cloud.normals is None:
        raise ValueError("antipodal score needs normals")
    if mu <= 0:
        raise ValueError("friction coefficient must be positive")
    points = cloud.points
    local = _local_frame(grasp, points)
    w2 = grasp.width / 2.0
    h2 = gripper.height / 2.0
    fd2 = gripper.finger_depth / 2.0
    in_region = ((np.abs(local[:, 0]) <= w2) & (np.abs(local[:, 1]) <= h2)
                 & (np.abs(local[:, 2]) <= fd2) & cloud.valid_normal_mask())
    idx = np.nonzero(in_region)[0]
    if len(idx) == 0:
        return 0.0, False
    lx = local[idx, 0]
    hi = idx[np.argmax(lx)]
    lo = idx[np.argmin(lx)]
    c = matrix_from_quat(grasp.q)[:, 0]
    a1 = abs(float(cloud.normals[hi] @ c))
    a2 = abs(float(cloud.normals[lo] @ c))
    cone = 1.0 / np.sqrt(1.0 + mu * mu)
    return 0.5 * (a1 + a2), bool(a1 >= cone and a2 >= cone)


def evaluate_grasps(pred: list[Grasp6D], gt: list[Grasp6D], cloud: PointCloud,
                    gripper: GripperSpec, mu: float = 0.5,
                    trans_thresh: float = COVERAGE_TRANS_THRESH,
                    rot_thresh: float = COVERAGE_ROT_THRESH,
                    ks: list[int] | None = None) -> MetricsReport:
    """Full per-scene report: CR over the ground truth, CFR / AS over the
    predictions, and prefix curves at the requested k values."""
    covered = covered_mask(pred, gt, trans_thresh, rot_thresh)
    free = np.array([not collision_check(p, cloud, gripper) for p in pred], dtype=bool)
    as_flags = [antipodal_score(p, cloud, mu, gripper) for p in pred]
    scores = np.array([s for s, _ in as_flags]) if as_flags else np.empty(0)
    closure = np.array([f for _, f in as_flags], dtype=bool) if as_flags else np.empty(0, bool)
    report = MetricsReport(
        cr=float(covered.mean()),
        cfr=float(free.mean()) if len(pred) else 0.0,
        antipodal=float(scores.mean()) if len(pred) else 0.0,
        covered_gt=covered,
        collision_free=free,
        antipodal_scores=scores,
        force_closure=closure,
    )
    if ks:
        report.curves = quality_curves(pred, gt, cloud, ks, gripper, mu,
                                       trans_thresh, rot_thresh,
                                       _per_grasp=(free, scores))
    return report


def quality_curves(pred: list[Grasp6D], gt: list[Grasp6D], cloud: PointCloud,
                   ks: list[int], gripper: GripperSpec, mu: float = 0.5,
                   trans_thresh: float = COVERAGE_TRANS_THRESH,
                   rot_thresh: float = COVERAGE_ROT_THRESH,
                   _per_grasp=None) -> list[tuple[int, float, float, float]]:
    """(k, CR, CFR, AS) rows over the top-k score-ranked predictions.

    Predictions are (re)ranked by descending score (stable), so passing an
    already sorted list keeps its order; k values beyond len(pred) clamp.
    """
    order = np.argsort([-p.score for p in pred], kind="stable")
    ranked = [pred[i] for i in order]
    if _per_grasp is None:
        free = np.array([not collision_check(p, cloud, gripper) for p in ranked], dtype=bool)
        scores = np.array([antipodal_score(p, cloud, mu, gripper)[0] for p in ranked])
    else:
        free, scores = _per_grasp
        free = free[order]
        scores = scores[order]
    rows = []
    for k in ks:
        kk = min(int(k), len(ranked))
        top = ranked[:kk]
        cr = coverage_rate(top, gt, trans_thresh, rot_thresh) if top else 0.0
        cfr = float(free[:kk].mean()) if kk else 0.0
        a = float(scores[:kk].mean()) if kk else 0.0
        rows.append((kk, cr, cfr, a))
    return rows
