"""Grasp representations, pinhole camera math, and rotation utilities.

A grasp is carried in one of two equivalent forms:

* image-plane form: center pixel (u, v), in-plane angle theta, jaw width w,
  depth offset d from the observed surface point, and two gripper-frame
  Euler angles (gamma, beta);
* metric form: translation t, unit quaternion q (scalar first), width, score.

The rotation convention is fixed once here and used everywhere:
``R = Rz(theta) @ Ry(beta) @ Rz(gamma)`` in the camera frame, where the
un-rotated gripper has its approach axis along +z (the optical axis) and
its jaw closing axis along +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HALF_PI = math.pi / 2.0

# sin(beta) below this is treated as the degenerate planar case where only
# theta + gamma is observable from the rotation matrix
_GIMBAL_EPS = 1e-12


@dataclass
class CameraIntrinsics:
    """Pinhole intrinsics. Focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], int(d["width"]), int(d["height"]))


@dataclass
class Grasp2D5:
    """Image-plane grasp: (u, v, theta, w, d, gamma, beta).

    u, v are continuous pixel coordinates of the grasp center projection,
    theta is the in-plane jaw angle in [-pi/2, pi/2), w is the jaw opening
    in meters, d the offset from the observed surface point to the grasp
    center along the approach axis, and gamma / beta are the gripper-frame
    Euler angles in [-pi/2, pi/2].
    """

    u: float
    v: float
    theta: float
    w: float
    d: float
    gamma: float
    beta: float

    def __post_init__(self):
        if self.w <= 0:
            raise ValueError("grasp width must be positive")
        if not (-HALF_PI <= self.theta < HALF_PI + 1e-12):
            raise ValueError(f"theta {self.theta} outside [-pi/2, pi/2)")
        for name in ("gamma", "beta"):
            val = getattr(self, name)
            if not (-HALF_PI - 1e-9 <= val <= HALF_PI + 1e-9):
                raise ValueError(f"{name} {val} outside [-pi/2, pi/2]")

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "v": self.v,
            "theta": self.theta,
            "w": self.w,
            "d": self.d,
            "gamma": self.gamma,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grasp2D5":
        return cls(d["u"], d["v"], d["theta"], d["w"], d["d"], d["gamma"], d["beta"])


@dataclass
class Grasp6D:
    """Metric grasp pose: translation, scalar-first unit quaternion, width, score."""

    t: np.ndarray
    q: np.ndarray
    width: float
    score: float = 1.0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64).reshape(3)
        self.q = np.asarray(self.q, dtype=np.float64).reshape(4)
        n = np.linalg.norm(self.q)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} not within 1e-6 of 1")
        self.q = canonicalize_quat(self.q / n)
        if self.width <= 0:
            raise ValueError("grasp width must be positive")

    @property
    def rotation(self) -> np.ndarray:
        return matrix_from_quat(self.q)

    @property
    def approach_axis(self) -> np.ndarray:
        return matrix_from_quat(self.q)[:, 2]

    @property
    def closing_axis(self) -> np.ndarray:
        return matrix_from_quat(self.q)[:, 0]

    def to_dict(self) -> dict:
        return {
            "t": [float(x) for x in self.t],
            "q": [float(x) for x in self.q],
            "width": float(self.width),
            "score": float(self.score),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grasp6D":
        return cls(np.array(d["t"]), np.array(d["q"]), d["width"], d.get("score", 1.0))


@dataclass
class GripperSpec:
    """Parallel-jaw gripper dimensions used for collision and contact checks.

    The collision model is three boxes: two fingers of cross-section
    finger_thickness x height, extending finger_depth along the approach
    axis, plus a back plate of thickness finger_thickness spanning the jaw.
    """

    height: float = 0.02
    finger_depth: float = 0.046
    finger_thickness: float = 0.01
    max_width: float = 0.085

    def __post_init__(self):
        for name in ("height", "finger_depth", "finger_thickness", "max_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def inflated(self, margin: float) -> "GripperSpec":
        """Gripper with every box face pushed outward by `margin` (for
        conservative collision filtering against sampled surfaces)."""
        return GripperSpec(
            height=self.height + 2 * margin,
            finger_depth=self.finger_depth + 2 * margin,
            finger_thickness=self.finger_thickness + 2 * margin,
            max_width=self.max_width,
        )


# ---------------------------------------------------------------------------
# pinhole projection
# ---------------------------------------------------------------------------

def deproject(u, v, z, intr: CameraIntrinsics) -> np.ndarray:
    """Back-project pixel (u, v) at depth z to a 3-D camera-frame point.

    Accepts scalars or equal-shaped arrays; depth must be positive.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("depth must be positive")
    x = (np.asarray(u, dtype=np.float64) - intr.cx) * z / intr.fx
    y = (np.asarray(v, dtype=np.float64) - intr.cy) * z / intr.fy
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def project(p, intr: CameraIntrinsics):
    """Project camera-frame point(s) to (u, v, z). Inverse of deproject."""
    p = np.asarray(p, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= 0):
        raise ValueError("point depth must be positive")
    u = p[..., 0] * intr.fx / z + intr.cx
    v = p[..., 1] * intr.fy / z + intr.cy
    return u, v, z


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_from_angles(theta: float, gamma: float, beta: float) -> np.ndarray:
    """Rotation matrix for the grasp angle triple (see module docstring)."""
    return rot_z(theta) @ rot_y(beta) @ rot_z(gamma)


def wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def angles_from_rotation(R: np.ndarray) -> tuple[float, float, float]:
    """Recover (theta, gamma, beta) with theta in [-pi/2, pi/2) and
    gamma, beta in [-pi/2, pi/2] such that rotation_from_angles rebuilds R.

    Of the two z-y-z decompositions of a rotation, exactly one has theta in
    the half-open range; that branch is returned. At sin(beta) ~ 0 the
    split between theta and gamma is unobservable (R collapses to a single
    z-rotation); gamma is folded into theta, saturating gamma at +-pi/2
    when the combined angle leaves the theta range. Raises ValueError for
    rotations whose approach axis points back toward the camera
    (not representable in this parameterization).
    """
    R = np.asarray(R, dtype=np.float64)
    sb = math.hypot(R[0, 2], R[1, 2])

    if sb < _GIMBAL_EPS:
        if R[2, 2] < 0:
            raise ValueError("approach axis anti-parallel to the optical axis")
        alpha = math.atan2(R[1, 0], R[0, 0])
        if -HALF_PI <= alpha < HALF_PI:
            return alpha, 0.0, 0.0
        if alpha >= HALF_PI:
            return alpha - HALF_PI, HALF_PI, 0.0
        return alpha + HALF_PI, -HALF_PI, 0.0

    beta = math.atan2(sb, R[2, 2])
    theta = math.atan2(R[1, 2], R[0, 2])
    gamma = math.atan2(R[2, 1], -R[2, 0])
    if not (-HALF_PI <= theta < HALF_PI):
        # switch to the mirrored decomposition (theta-pi, -beta, gamma-pi)
        theta = wrap_pi(theta - math.pi)
        beta = -beta
        gamma = wrap_pi(gamma - math.pi)
    if abs(beta) > HALF_PI + 1e-9:
        raise ValueError("rotation tilts the approach axis beyond pi/2 from the optical axis")
    if abs(gamma) > HALF_PI + 1e-9:
        raise ValueError("rotation not representable with gamma in [-pi/2, pi/2]")
    beta = min(max(beta, -HALF_PI), HALF_PI)
    gamma = min(max(gamma, -HALF_PI), HALF_PI)
    return theta, gamma, beta


def canonicalize_quat(q: np.ndarray) -> np.ndarray:
    """Flip sign so the scalar part is non-negative (ties: first nonzero
    vector component positive). q and -q encode the same rotation."""
    q = np.asarray(q, dtype=np.float64)
    if q[0] < 0:
        return -q
    if q[0] == 0:
        for i in (1, 2, 3):
            if q[i] != 0:
                return q if q[i] > 0 else -q
    return q


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Scalar-first unit quaternion from a rotation matrix (Shepperd)."""
    R = np.asarray(R, dtype=np.float64)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (R[2, 1] - R[1, 2]) / s,
            (R[0, 2] - R[2, 0]) / s,
            (R[1, 0] - R[0, 1]) / s,
        ])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([
            (R[2, 1] - R[1, 2]) / s,
            0.25 * s,
            (R[0, 1] + R[1, 0]) / s,
            (R[0, 2] + R[2, 0]) / s,
        ])
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([
            (R[0, 2] - R[2, 0]) / s,
            (R[0, 1] + R[1, 0]) / s,
            0.25 * s,
            (R[1, 2] + R[2, 1]) / s,
        ])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([
            (R[1, 0] - R[0, 1]) / s,
            (R[0, 2] + R[2, 0]) / s,
            (R[1, 2] + R[2, 1]) / s,
            0.25 * s,
        ])
    return canonicalize_quat(q / np.linalg.norm(q))


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from a scalar-first unit quaternion."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotation_distance(q1: np.ndarray, q2: np.ndarray) -> float:
    """1 - |q1 . q2|, in [0, 1]; 0 for identical rotations, 1 at 180 deg.

    Both inputs must be unit quaternions (within 1e-6). Invariant to the
    sign of either argument.
    """
    q1 = np.asarray(q1, dtype=np.float64).reshape(4)
    q2 = np.asarray(q2, dtype=np.float64).reshape(4)
    for q in (q1, q2):
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise ValueError("rotation_distance requires unit quaternions")
    dot = abs(q1[0] * q2[0] + q1[1] * q2[1] + q1[2] * q2[2] + q1[3] * q2[3])
    return 1.0 - min(dot, 1.0)


# ---------------------------------------------------------------------------
# grasp form conversions
# ---------------------------------------------------------------------------

def grasp_to_pose(g: Grasp2D5, surface_z: float, intr: CameraIntrinsics,
                  score: float = 1.0) -> Grasp6D:
    """Lift an image-plane grasp to a metric pose.

    The grasp center is the surface point deprojected at (u, v, surface_z)
    displaced by d along the approach axis.
    """
    if surface_z <= 0:
        raise ValueError("surface depth must be positive")
    R = rotation_from_angles(g.theta, g.gamma, g.beta)
    t = deproject(g.u, g.v, surface_z, intr) + g.d * R[:, 2]
    return Grasp6D(t=t, q=quat_from_matrix(R), width=g.w, score=score)


def pose_to_grasp(p: Grasp6D, intr: CameraIntrinsics,
                  surface_z: float | None = None) -> Grasp2D5:
    """Project a metric grasp back to the image-plane form.

    With `surface_z` given this is the exact inverse of grasp_to_pose: the
    depth offset d is solved so the displaced center lands on the plane
    z = surface_z. Without it d is reported as 0 and (u, v) is the direct
    projection of the center. When the approach axis is perpendicular to
    the optical axis the d / (u, v) split is ambiguous and d is
    canonicalized to 0.
    """
    R = matrix_from_quat(p.q)
    theta, gamma, beta = angles_from_rotation(R)
    approach = R[:, 2]
    if surface_z is None or abs(approach[2]) < _GIMBAL_EPS:
        d = 0.0
        ps = p.t
    else:
        d = (p.t[2] - surface_z) / approach[2]
        ps = p.t - d * approach
    u, v, _ = project(ps, intr)
    return Grasp2D5(u=float(u), v=float(v), theta=theta, w=p.width, d=float(d),
                    gamma=gamma, beta=beta)
