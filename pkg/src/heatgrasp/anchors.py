"""Non-uniform rotation-anchor optimization.

Rotation angles gamma and beta are quantized against k_r anchors each.
Instead of keeping the anchors uniform, they are shifted toward the
observed angle distribution by alternating nearest-anchor assignment with
a least-squares update (each anchor moves to the mean of its assigned
samples), streamed through a fixed-size buffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HALF_PI = math.pi / 2.0


def uniform_anchors(k_r: int) -> np.ndarray:
    """k_r uniform bin midpoints over [-pi/2, pi/2] (pitch pi / k_r)."""
    if k_r < 1:
        raise ValueError("k_r must be >= 1")
    return -HALF_PI + (np.arange(k_r) + 0.5) * math.pi / k_r


def assign_nearest(samples, anchors) -> np.ndarray:
    """Index of the nearest anchor per sample; ties go to the lower index.

    These are the one-hot rows of the assignment matrix, stored sparse.
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    if anchors.size < 1:
        raise ValueError("need at least one anchor")
    samples = np.atleast_1d(np.asarray(samples, dtype=np.float64))
    return np.argmin(np.abs(samples[:, None] - anchors[None, :]), axis=1)


def fitting_error(anchors, samples) -> float:
    """Sum of squared residuals between samples and their nearest anchors."""
    samples = np.atleast_1d(np.asarray(samples, dtype=np.float64))
    if samples.size == 0:
        return 0.0
    anchors = np.asarray(anchors, dtype=np.float64)
    assigned = anchors[assign_nearest(samples, anchors)]
    return float(np.sum((assigned - samples) ** 2))


def shift_step(anchors, samples, T: int = 1) -> np.ndarray:
    """T rounds of {assign samples to nearest anchors; move each anchor
    with assignments to the mean of its cluster}.

    The mean is the closed form of the least-squares update: with one-hot
    assignments the normal matrix is diagonal with the cluster counts.
    Anchors with empty clusters keep their value (the update is singular
    there). The result is re-sorted and clamped to [-pi/2, pi/2].
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    anchors = np.asarray(anchors, dtype=np.float64).copy()
    samples = np.atleast_1d(np.asarray(samples, dtype=np.float64))
    if samples.size == 0:
        return np.sort(anchors)
    k = anchors.size
    for _ in range(T):
        idx = assign_nearest(samples, anchors)
        counts = np.bincount(idx, minlength=k).astype(np.float64)
        sums = np.bincount(idx, weights=samples, minlength=k)
        occupied = counts > 0
        anchors[occupied] = sums[occupied] / counts[occupied]
    return np.clip(np.sort(anchors), -HALF_PI, HALF_PI)


@dataclass
class AnchorSet:
    """k_r anchors for gamma and beta plus the streaming sample buffer.

    gamma and beta are treated as two independent 1-D problems. Incoming
    (gamma, beta) samples accumulate in the buffer; once it exceeds K the
    anchors take T shift steps on the buffered samples and the buffer is
    cleared. Single writer: callers must serialize buffer_update.
    """

    gamma: np.ndarray
    beta: np.ndarray
    K: int = 10000
    T: int = 1
    buffer: list = field(default_factory=list)

    def __post_init__(self):
        self.gamma = np.sort(np.asarray(self.gamma, dtype=np.float64))
        self.beta = np.sort(np.asarray(self.beta, dtype=np.float64))
        if self.gamma.size != self.beta.size:
            raise ValueError("gamma and beta must hold the same anchor count")

    @classmethod
    def uniform(cls, k_r: int = 7, K: int = 10000, T: int = 1) -> "AnchorSet":
        return cls(gamma=uniform_anchors(k_r), beta=uniform_anchors(k_r), K=K, T=T)

    @property
    def k_r(self) -> int:
        return int(self.gamma.size)

    def buffer_update(self, region_grasps) -> "AnchorSet":
        """Extend the buffer with (gamma, beta) pairs; flush through
        shift_step for both axes once the buffer exceeds K."""
        self.buffer.extend((float(g), float(b)) for g, b in region_grasps)
        if len(self.buffer) > self.K:
            gs = np.array([g for g, _ in self.buffer])
            bs = np.array([b for _, b in self.buffer])
            self.gamma = shift_step(self.gamma, gs, self.T)
            self.beta = shift_step(self.beta, bs, self.T)
            self.buffer.clear()
        return self

    def to_dict(self) -> dict:
        return {
            "gamma": [float(x) for x in self.gamma],
            "beta": [float(x) for x in self.beta],
            "k_r": self.k_r,
            "K": self.K,
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnchorSet":
        aset = cls(gamma=np.array(d["gamma"]), beta=np.array(d["beta"]),
                   K=int(d.get("K", 10000)), T=int(d.get("T", 1)))
        if "k_r" in d and int(d["k_r"]) != aset.k_r:
            raise ValueError("k_r field disagrees with anchor array length")
        return aset
