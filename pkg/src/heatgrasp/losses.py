"""Training losses as pure scalar functions with closed-form gradients.

There is no autograd here: each loss has a hand-derived gradient w.r.t.
the predictions, cross-checked against finite differences in the tests.
The confidence loss is the penalty-reduced focal form used with Gaussian
keypoint targets: pixels at exactly 1 in the target are positives, all
others are negatives down-weighted by (1 - target)^beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-7


@dataclass
class LossConfig:
    a: float = 1.0            # multi-label theta classification weight
    b: float = 1.0            # heatmap regression weight
    c: float = 1.0            # center offset weight
    focal_alpha: float = 2.0
    focal_beta: float = 4.0
    smooth_l1_delta: float = 1.0

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.focal_alpha < 0 or self.focal_beta < 0:
            raise ValueError("focal exponents must be >= 0")
        if self.smooth_l1_delta <= 0:
            raise ValueError("smooth L1 delta must be positive")


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, EPS, 1.0 - EPS)


def confidence_focal(pred: np.ndarray, target: np.ndarray,
                     alpha: float = 2.0, beta: float = 4.0) -> float:
    """Penalty-reduced focal loss between a predicted confidence map and a
    Gaussian-encoded target, averaged over all pixels.

    Positives (target == 1): -(1 - p)^alpha * log(p).
    Negatives: -(1 - target)^beta * p^alpha * log(1 - p).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("prediction and target shapes differ")
    p = _clamp(pred)
    pos = target == 1.0
    loss = np.where(
        pos,
        -((1.0 - p) ** alpha) * np.log(p),
        -((1.0 - target) ** beta) * (p ** alpha) * np.log1p(-p),
    )
    return float(loss.mean())


def confidence_focal_grad(pred: np.ndarray, target: np.ndarray,
                          alpha: float = 2.0, beta: float = 4.0) -> np.ndarray:
    """d(confidence_focal)/d(pred), elementwise (zero inside the clamp)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    p = _clamp(pred)
    pos = target == 1.0
    g_pos = alpha * (1.0 - p) ** (alpha - 1.0) * np.log(p) - (1.0 - p) ** alpha / p
    g_neg = -((1.0 - target) ** beta) * (
        alpha * p ** (alpha - 1.0) * np.log1p(-p) - (p ** alpha) / (1.0 - p)
    )
    grad = np.where(pos, g_pos, g_neg) / pred.size
    grad[(pred < EPS) | (pred > 1.0 - EPS)] = 0.0
    return grad


def masked_smooth_l1(pred: np.ndarray, target: np.ndarray, mask: np.ndarray,
                     delta: float = 1.0) -> float:
    """Smooth L1 (Huber-style) averaged over masked elements; 0 for an
    empty mask. Quadratic 0.5 x^2 / delta below delta, |x| - delta/2 above."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if not (pred.shape == target.shape == mask.shape):
        raise ValueError("pred, target and mask shapes differ")
    if not mask.any():
        return 0.0
    x = pred[mask] - target[mask]
    ax = np.abs(x)
    loss = np.where(ax < delta, 0.5 * x * x / delta, ax - 0.5 * delta)
    return float(loss.mean())


def masked_smooth_l1_grad(pred: np.ndarray, target: np.ndarray, mask: np.ndarray,
                          delta: float = 1.0) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    grad = np.zeros_like(pred)
    if not mask.any():
        return grad
    x = pred[mask] - target[mask]
    g = np.where(np.abs(x) < delta, x / delta, np.sign(x))
    grad[mask] = g / mask.sum()
    return grad


def multilabel_focal(scores: np.ndarray, targets: np.ndarray,
                     alpha: float = 2.0) -> float:
    """Focal binary cross-entropy averaged over classes, for {0,1} targets."""
    scores = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if scores.shape != targets.shape:
        raise ValueError("scores and targets shapes differ")
    s = _clamp(scores)
    loss = np.where(
        targets == 1.0,
        -((1.0 - s) ** alpha) * np.log(s),
        -(s ** alpha) * np.log1p(-s),
    )
    return float(loss.mean())


def multilabel_focal_grad(scores: np.ndarray, targets: np.ndarray,
                          alpha: float = 2.0) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    s = _clamp(scores)
    g_pos = alpha * (1.0 - s) ** (alpha - 1.0) * np.log(s) - (1.0 - s) ** alpha / s
    g_neg = -(alpha * s ** (alpha - 1.0) * np.log1p(-s) - (s ** alpha) / (1.0 - s))
    grad = np.where(targets == 1.0, g_pos, g_neg) / scores.size
    grad[(scores < EPS) | (scores > 1.0 - EPS)] = 0.0
    return grad


def total_loss(l_conf: float, l_cls: float, l_reg: float, l_anchor: float,
               l_offset: float, cfg: LossConfig = LossConfig()) -> float:
    """Weighted sum of the five components:
    conf + a * cls + b * reg + anchor + c * offset."""
    parts = (l_conf, l_cls, l_reg, l_anchor, l_offset)
    if not all(np.isfinite(parts)):
        raise ValueError("loss parts must be finite")
    return float(l_conf + cfg.a * l_cls + cfg.b * l_reg + l_anchor + cfg.c * l_offset)
