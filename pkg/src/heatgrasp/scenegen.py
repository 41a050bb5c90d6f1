"""Synthetic cluttered tabletop scenes with analytic ground truth.

Primitives (boxes, cylinders, spheres) are placed on a table plane by
rejection sampling, antipodal grasp labels are derived in closed form, and
depth images are rendered by exact ray casting, so every downstream
quantity (clouds, normals, contacts) is verifiable against geometry.

Frames: the world has the table plane at z = 0 with +z up; the camera uses
the usual vision convention (x right, y down, +z optical) and sits above
the table looking down at a configurable tilt. Labels are stored in the
camera frame, ready for projection and evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (CameraIntrinsics, Grasp6D, GripperSpec,
                       angles_from_rotation, matrix_from_quat, project,
                       quat_from_matrix)
from .pointops import PointCloud
from .reference import gripper_boxes

# clearances used when posing grasp labels (meters)
JAW_CLEARANCE = 0.010      # finger inner face to object surface
TABLE_CLEAR = 0.0125       # fingertip plane above the table
PLATE_CLEAR = 0.0125       # back plate above the object top

# label collision filtering is run with the gripper boxes inflated so the
# labels stay collision-free under depth noise up to a few millimeters;
# depth noise moves points along (mostly vertical) camera rays, so the
# vertical margin is the larger one
FILTER_LATERAL = 0.0075
FILTER_VERTICAL = 0.011


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=np.float64)
    kx, ky, kz = axis
    K = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


@dataclass
class Box:
    center: np.ndarray      # world, z = size[2] / 2 when resting on the table
    size: np.ndarray        # full extents (sx, sy, sz)
    yaw: float = 0.0

    def bound_radius(self) -> float:
        return float(math.hypot(self.size[0], self.size[1]) / 2.0)

    def top_z(self) -> float:
        return float(self.center[2] + self.size[2] / 2.0)

    def ray_hits(self, origin, dirs):
        R = _rot_z(self.yaw)
        o = R.T @ (np.asarray(origin) - self.center)
        d = dirs @ R                      # row-vectors: R.T @ dir per ray
        half = self.size / 2.0
        tmin = np.full(len(dirs), -np.inf)
        tmax = np.full(len(dirs), np.inf)
        enter_axis = np.zeros(len(dirs), dtype=np.int64)
        for axis in range(3):
            da = d[:, axis]
            oa = o[axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (-half[axis] - oa) / da
                t2 = (half[axis] - oa) / da
            lo = np.minimum(t1, t2)
            hi = np.maximum(t1, t2)
            parallel = da == 0.0
            inside = abs(oa) <= half[axis]
            lo = np.where(parallel, np.where(inside, -np.inf, np.inf), lo)
            hi = np.where(parallel, np.where(inside, np.inf, -np.inf), hi)
            update = lo > tmin
            enter_axis = np.where(update, axis, enter_axis)
            tmin = np.maximum(tmin, lo)
            tmax = np.minimum(tmax, hi)
        hit = (tmax >= tmin) & (tmin > 1e-9)
        s = np.where(hit, tmin, np.inf)
        n_local = np.zeros((len(dirs), 3))
        rows = np.arange(len(dirs))
        n_local[rows, enter_axis] = -np.sign(d[rows, enter_axis])
        normals = n_local @ R.T           # R @ n_local per ray
        return s, normals

    def surface_points(self, spacing: float):
        half = self.size / 2.0
        pts, nrm = [], []
        for axis in range(3):
            a1, a2 = (axis + 1) % 3, (axis + 2) % 3
            g1 = _face_grid(-half[a1], half[a1], spacing)
            g2 = _face_grid(-half[a2], half[a2], spacing)
            v1, v2 = np.meshgrid(g1, g2, indexing="ij")
            for sign in (-1.0, 1.0):
                p = np.zeros((v1.size, 3))
                p[:, axis] = sign * half[axis]
                p[:, a1] = v1.ravel()
                p[:, a2] = v2.ravel()
                n = np.zeros((v1.size, 3))
                n[:, axis] = sign
                pts.append(p)
                nrm.append(n)
        p = np.concatenate(pts)
        n = np.concatenate(nrm)
        R = _rot_z(self.yaw)
        return p @ R.T + self.center, n @ R.T


@dataclass
class Cylinder:
    center: np.ndarray      # world, z = height / 2 on the table
    radius: float
    height: float

    def bound_radius(self) -> float:
        return float(self.radius)

    def top_z(self) -> float:
        return float(self.center[2] + self.height / 2.0)

    def ray_hits(self, origin, dirs):
        o = np.asarray(origin) - self.center
        d = np.asarray(dirs)
        z_lo, z_hi = -self.height / 2.0, self.height / 2.0
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = 2.0 * (o[0] * d[:, 0] + o[1] * d[:, 1])
        c = o[0] ** 2 + o[1] ** 2 - self.radius ** 2
        disc = b * b - 4.0 * a * c
        s_best = np.full(len(d), np.inf)
        n_best = np.zeros((len(d), 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = np.sqrt(np.maximum(disc, 0.0))
            for sign in (-1.0, 1.0):
                s = (-b + sign * sq) / (2.0 * a)
                z = o[2] + s * d[:, 2]
                ok = (disc >= 0) & (a > 0) & (s > 1e-9) & (z >= z_lo) & (z <= z_hi) & (s < s_best)
                n = np.zeros((len(d), 3))
                n[:, 0] = o[0] + s * d[:, 0]
                n[:, 1] = o[1] + s * d[:, 1]
                n_best = np.where(ok[:, None], n / self.radius, n_best)
                s_best = np.where(ok, s, s_best)
            for z_cap, n_cap in ((z_hi, 1.0), (z_lo, -1.0)):
                s = (z_cap - o[2]) / d[:, 2]
                x = o[0] + s * d[:, 0]
                y = o[1] + s * d[:, 1]
                ok = (d[:, 2] != 0) & (s > 1e-9) & (x * x + y * y <= self.radius ** 2) & (s < s_best)
                n_best = np.where(ok[:, None], np.array([0.0, 0.0, n_cap]), n_best)
                s_best = np.where(ok, s, s_best)
        return s_best, n_best

    def surface_points(self, spacing: float):
        n_az = max(8, int(math.ceil(2.0 * math.pi * self.radius / spacing)))
        az = np.arange(n_az) * 2.0 * math.pi / n_az
        zs = _face_grid(-self.height / 2.0, self.height / 2.0, spacing)
        aa, zz = np.meshgrid(az, zs, indexing="ij")
        side = np.stack([self.radius * np.cos(aa).ravel(),
                         self.radius * np.sin(aa).ravel(), zz.ravel()], axis=1)
        side_n = np.stack([np.cos(aa).ravel(), np.sin(aa).ravel(),
                           np.zeros(aa.size)], axis=1)
        pts, nrm = [side], [side_n]
        for z_cap, sign in ((self.height / 2.0, 1.0), (-self.height / 2.0, -1.0)):
            rr = np.arange(spacing, self.radius + 1e-12, spacing)
            cap = [np.array([[0.0, 0.0, z_cap]])]
            for r in rr:
                m = max(6, int(math.ceil(2.0 * math.pi * r / spacing)))
                a = np.arange(m) * 2.0 * math.pi / m
                cap.append(np.stack([r * np.cos(a), r * np.sin(a),
                                     np.full(m, z_cap)], axis=1))
            cap = np.concatenate(cap)
            pts.append(cap)
            n = np.zeros_like(cap)
            n[:, 2] = sign
            nrm.append(n)
        return np.concatenate(pts) + self.center, np.concatenate(nrm)


@dataclass
class Sphere:
    center: np.ndarray      # world, z = radius on the table
    radius: float

    def bound_radius(self) -> float:
        return float(self.radius)

    def top_z(self) -> float:
        return float(self.center[2] + self.radius)

    def ray_hits(self, origin, dirs):
        o = np.asarray(origin) - self.center
        d = np.asarray(dirs)
        a = (d * d).sum(axis=1)
        b = 2.0 * (d @ o)
        c = o @ o - self.radius ** 2
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        s = (-b - sq) / (2.0 * a)
        hit = (disc >= 0) & (s > 1e-9)
        s = np.where(hit, s, np.inf)
        p = o[None, :] + s[:, None] * d
        normals = np.where(hit[:, None], p / self.radius, 0.0)
        return s, normals

    def surface_points(self, spacing: float):
        n_pol = max(6, int(math.ceil(math.pi * self.radius / spacing)))
        pts, nrm = [], []
        for i in range(n_pol + 1):
            pol = i * math.pi / n_pol
            ring_r = self.radius * math.sin(pol)
            m = max(1, int(math.ceil(2.0 * math.pi * ring_r / spacing)))
            a = np.arange(m) * 2.0 * math.pi / m
            n = np.stack([math.sin(pol) * np.cos(a), math.sin(pol) * np.sin(a),
                          np.full(m, math.cos(pol))], axis=1)
            pts.append(self.radius * n)
            nrm.append(n)
        return np.concatenate(pts) + self.center, np.concatenate(nrm)


def _face_grid(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = max(2, int(math.ceil((hi - lo) / spacing)) + 1)
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# scene spec / scene
# ---------------------------------------------------------------------------

def _default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=450.0, fy=450.0, cx=320.0, cy=180.0, width=640, height=360)


def _default_size_ranges() -> dict:
    return {
        "box_xy": (0.025, 0.060),
        "box_z": (0.045, 0.080),
        "cylinder_r": (0.014, 0.030),
        "cylinder_h": (0.045, 0.080),
        "sphere_r": (0.012, 0.016),
    }


@dataclass
class SceneSpec:
    n_objects: tuple[int, int] = (6, 8)
    palette: tuple[str, ...] = ("box", "cylinder", "sphere")
    size_ranges: dict = field(default_factory=_default_size_ranges)
    table_extent: tuple[float, float] = (0.48, 0.34)
    seed: int = 0
    noise_sigma: float = 0.0
    intrinsics: CameraIntrinsics = field(default_factory=_default_intrinsics)
    cam_tilt: float = math.radians(25.0)   # from straight down
    cam_dist: float = 0.62
    gripper: GripperSpec = field(default_factory=GripperSpec)
    sample_spacing: float = 0.0025


@dataclass
class Scene:
    objects: list
    intrinsics: CameraIntrinsics
    cam_rot: np.ndarray        # camera-to-world rotation
    cam_pos: np.ndarray        # camera origin in world
    labels: list               # Grasp6D in the camera frame
    table_extent: tuple[float, float]
    seed: int
    noise_sigma: float = 0.0
    gripper: GripperSpec = field(default_factory=GripperSpec)
    sample_spacing: float = 0.0025
    _complete: PointCloud | None = field(default=None, repr=False)

    def world_to_cam(self, p: np.ndarray) -> np.ndarray:
        return (np.asarray(p) - self.cam_pos) @ self.cam_rot

    def complete_cloud(self) -> PointCloud:
        """Dense analytic sampling of every surface (camera frame, with
        exact normals oriented toward the camera). Used for contact
        metrics and label filtering; a rendered cloud only sees one side
        of each object."""
        if self._complete is None:
            pts, nrm = sample_scene_surfaces(self, self.sample_spacing)
            self._complete = PointCloud(points=pts, normals=nrm)
        return self._complete

    def to_dict(self) -> dict:
        objs = []
        for o in self.objects:
            if isinstance(o, Box):
                objs.append({"kind": "box", "center": list(map(float, o.center)),
                             "size": list(map(float, o.size)), "yaw": float(o.yaw)})
            elif isinstance(o, Cylinder):
                objs.append({"kind": "cylinder", "center": list(map(float, o.center)),
                             "radius": float(o.radius), "height": float(o.height)})
            else:
                objs.append({"kind": "sphere", "center": list(map(float, o.center)),
                             "radius": float(o.radius)})
        return {
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "table_extent": list(self.table_extent),
            "intrinsics": self.intrinsics.to_dict(),
            "camera": {"rotation": [float(x) for x in self.cam_rot.ravel()],
                       "position": [float(x) for x in self.cam_pos]},
            "objects": objs,
            "gripper": {"height": self.gripper.height,
                        "finger_depth": self.gripper.finger_depth,
                        "finger_thickness": self.gripper.finger_thickness,
                        "max_width": self.gripper.max_width},
            "sample_spacing": self.sample_spacing,
        }

    @classmethod
    def from_dict(cls, d: dict, labels: list | None = None) -> "Scene":
        objs = []
        for o in d["objects"]:
            if o["kind"] == "box":
                objs.append(Box(np.array(o["center"]), np.array(o["size"]), o["yaw"]))
            elif o["kind"] == "cylinder":
                objs.append(Cylinder(np.array(o["center"]), o["radius"], o["height"]))
            else:
                objs.append(Sphere(np.array(o["center"]), o["radius"]))
        g = d.get("gripper", {})
        return cls(
            objects=objs,
            intrinsics=CameraIntrinsics.from_dict(d["intrinsics"]),
            cam_rot=np.array(d["camera"]["rotation"]).reshape(3, 3),
            cam_pos=np.array(d["camera"]["position"]),
            labels=labels or [],
            table_extent=tuple(d["table_extent"]),
            seed=int(d["seed"]),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
            gripper=GripperSpec(**g) if g else GripperSpec(),
            sample_spacing=float(d.get("sample_spacing", 0.0025)),
        )


def make_camera(tilt: float, dist: float) -> tuple[np.ndarray, np.ndarray]:
    """Camera-to-world rotation and position: the optical axis points at
    the table center, tilted `tilt` radians from straight down."""
    nadir = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    c, s = math.cos(tilt), math.sin(tilt)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    rot = rx @ nadir
    pos = -dist * rot[:, 2]       # back off along the optical axis from origin
    return rot, pos


# ---------------------------------------------------------------------------
# ground-truth grasps
# ---------------------------------------------------------------------------

def _grasp_rotation(closing: np.ndarray, approach: np.ndarray) -> np.ndarray:
    """World rotation with x = closing axis, z = approach axis."""
    x = np.asarray(closing, dtype=np.float64)
    z = np.asarray(approach, dtype=np.float64)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def _grasp_center_height(top: float, gripper: GripperSpec) -> float:
    """Grasp center height keeping fingertips off the table and the back
    plate clear of the object top."""
    fd2 = gripper.finger_depth / 2.0
    return max(fd2 + TABLE_CLEAR, top - (fd2 - PLATE_CLEAR))


def ground_truth_grasps(obj, gripper: GripperSpec,
                        jaw_clearance: float = JAW_CLEARANCE,
                        tilts: tuple[float, ...] = (-0.35, 0.0, 0.35)) -> list[Grasp6D]:
    """Analytic antipodal grasp labels for one primitive, in the world frame.

    Boxes get grasps across each face pair that fits the jaw (sampled along
    the face and, for horizontal closing axes, tilted about the closing
    axis); cylinders get diametral grasps at several azimuths; spheres get
    diametral grasps over a sampled great circle. Contacts sit on parallel
    opposed surfaces, so every label has antipodal score 1 by construction.
    All labels carry score 1.0.
    """
    down = np.array([0.0, 0.0, -1.0])
    grasps: list[Grasp6D] = []

    def emit(closing, approach, center, width):
        R = _grasp_rotation(closing, approach)
        grasps.append(Grasp6D(t=np.asarray(center, dtype=np.float64),
                              q=quat_from_matrix(R), width=width, score=1.0))

    def emit_tilted(closing, center, width):
        for tau in tilts:
            approach = _axis_angle(closing, tau) @ down
            emit(closing, approach, center, width)

    if isinstance(obj, Box):
        R = _rot_z(obj.yaw)
        ex, ey = R[:, 0], R[:, 1]
        cz = _grasp_center_height(obj.top_z(), gripper)
        base = np.array([obj.center[0], obj.center[1], cz])
        for closing, dim, transverse, t_dim in ((ex, obj.size[0], ey, obj.size[1]),
                                                (ey, obj.size[1], ex, obj.size[0])):
            width = dim + 2.0 * jaw_clearance
            if width > gripper.max_width:
                continue
            m = max(t_dim / 2.0 - gripper.height / 2.0 - 0.002, 0.0)
            offsets = (0.0,) if m <= 0 else (-m, 0.0, m)
            for off in offsets:
                emit_tilted(closing, base + off * transverse, width)
        # closing across the vertical extent: approach must be horizontal
        width = obj.size[2] + 2.0 * jaw_clearance
        if width <= gripper.max_width:
            for approach in (ex, -ex, ey, -ey):
                emit(np.array([0.0, 0.0, 1.0]), approach, obj.center, width)
    elif isinstance(obj, Cylinder):
        width = 2.0 * obj.radius + 2.0 * jaw_clearance
        if width <= gripper.max_width:
            cz = _grasp_center_height(obj.top_z(), gripper)
            center = np.array([obj.center[0], obj.center[1], cz])
            for psi in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
                closing = np.array([math.cos(psi), math.sin(psi), 0.0])
                emit_tilted(closing, center, width)
    elif isinstance(obj, Sphere):
        width = 2.0 * obj.radius + 2.0 * jaw_clearance
        if width <= gripper.max_width:
            cz = _grasp_center_height(obj.top_z(), gripper)
            # the closing region must still contain the equator
            cz = min(cz, obj.center[2] + gripper.finger_depth / 2.0 - 1e-6)
            center = np.array([obj.center[0], obj.center[1], cz])
            for psi in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
                closing = np.array([math.cos(psi), math.sin(psi), 0.0])
                emit_tilted(closing, center, width)
    else:
        raise TypeError(f"unknown primitive {type(obj)!r}")
    return grasps


# ---------------------------------------------------------------------------
# rendering and sampling
# ---------------------------------------------------------------------------

def render_depth(scene: Scene, intr: CameraIntrinsics | None = None,
                 cam_rot: np.ndarray | None = None,
                 cam_pos: np.ndarray | None = None,
                 noise_sigma: float = 0.0, seed: int = 0,
                 with_normals: bool = False):
    """Exact ray-cast depth of the scene (z-buffer over the primitives and
    the finite table plane). Invalid pixels (rays that miss everything)
    are 0. With noise_sigma > 0 valid depths get seeded additive Gaussian
    noise. `with_normals` also returns the camera-frame analytic normal
    map (NaN where invalid), oriented toward the camera.
    """
    intr = intr or scene.intrinsics
    rot = scene.cam_rot if cam_rot is None else cam_rot
    pos = scene.cam_pos if cam_pos is None else cam_pos
    if pos[2] <= 0:
        raise ValueError("camera must be above the table plane")
    h, w = intr.height, intr.width
    us, vs = np.meshgrid(np.arange(w), np.arange(h))
    d_cam = np.stack([(us - intr.cx) / intr.fx, (vs - intr.cy) / intr.fy,
                      np.ones((h, w))], axis=-1).reshape(-1, 3)
    d_world = d_cam @ rot.T
    s_best = np.full(h * w, np.inf)
    n_best = np.full((h * w, 3), np.nan)

    # finite table plane z = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        s_tab = -pos[2] / d_world[:, 2]
    px = pos[0] + s_tab * d_world[:, 0]
    py = pos[1] + s_tab * d_world[:, 1]
    ok = ((d_world[:, 2] < 0) & (s_tab > 0)
          & (np.abs(px) <= scene.table_extent[0] / 2.0)
          & (np.abs(py) <= scene.table_extent[1] / 2.0))
    s_best = np.where(ok, s_tab, s_best)
    n_best[ok] = [0.0, 0.0, 1.0]

    for obj in scene.objects:
        s, normals = obj.ray_hits(pos, d_world)
        closer = s < s_best
        s_best = np.where(closer, s, s_best)
        n_best[closer] = normals[closer]

    valid = np.isfinite(s_best)
    depth = np.where(valid, s_best, 0.0).reshape(h, w)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, noise_sigma, size=depth.shape)
        depth = np.where(valid.reshape(h, w), depth + noise, depth)
    if not with_normals:
        return depth
    # face the camera, then express in the camera frame
    flip = np.einsum("ij,ij->i", n_best, d_world) > 0
    n_best[flip] *= -1.0
    n_cam = (n_best @ rot).reshape(h, w, 3)
    return depth, n_cam


def sample_scene_surfaces(scene: Scene, spacing: float = 0.0025):
    """Dense analytic surface sampling (objects + table) in the camera
    frame with exact normals oriented toward the camera."""
    pts = []
    nrm = []
    ex, ey = scene.table_extent
    gx = _face_grid(-ex / 2.0, ex / 2.0, spacing * 1.2)
    gy = _face_grid(-ey / 2.0, ey / 2.0, spacing * 1.2)
    xx, yy = np.meshgrid(gx, gy, indexing="ij")
    tab = np.stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)], axis=1)
    pts.append(tab)
    n = np.zeros_like(tab)
    n[:, 2] = 1.0
    nrm.append(n)
    for obj in scene.objects:
        p, nn = obj.surface_points(spacing)
        pts.append(p)
        nrm.append(nn)
    p_w = np.concatenate(pts)
    n_w = np.concatenate(nrm)
    p_c = (p_w - scene.cam_pos) @ scene.cam_rot
    n_c = n_w @ scene.cam_rot
    flip = np.einsum("ij,ij->i", n_c, p_c) > 0
    n_c[flip] *= -1.0
    return p_c, n_c


# ---------------------------------------------------------------------------
# label filtering and scene assembly
# ---------------------------------------------------------------------------

def label_collides(grasp: Grasp6D, points: np.ndarray, gripper: GripperSpec,
                   lateral: float = FILTER_LATERAL,
                   vertical: float = FILTER_VERTICAL) -> bool:
    """Collision test with each gripper box inflated by `lateral` along the
    closing/transverse axes and `vertical` along the approach axis."""
    points = np.asarray(points).reshape(-1, 3)
    R = matrix_from_quat(grasp.q)
    local = (points - grasp.t) @ R
    pad = np.array([lateral, lateral, vertical])
    for lo, hi in gripper_boxes(gripper, grasp.width):
        lo = lo - pad
        hi = hi + pad
        inside = ((local[:, 0] > lo[0]) & (local[:, 0] < hi[0])
                  & (local[:, 1] > lo[1]) & (local[:, 1] < hi[1])
                  & (local[:, 2] > lo[2]) & (local[:, 2] < hi[2]))
        if inside.any():
            return True
    return False


def generate_scene(spec: SceneSpec) -> Scene:
    """Place primitives on the table without interpenetration and attach
    camera-frame grasp labels that survive visibility and (inflated)
    collision filtering, deduplicated at the coverage thresholds.

    Deterministic for a given spec; raises with the seed echoed if no
    valid arrangement is found in the retry budget.
    """
    rng = np.random.default_rng(spec.seed)
    cam_rot, cam_pos = make_camera(spec.cam_tilt, spec.cam_dist)
    for _ in range(25):
        objects = _place_objects(spec, rng)
        scene = Scene(objects=objects, intrinsics=spec.intrinsics,
                      cam_rot=cam_rot, cam_pos=cam_pos, labels=[],
                      table_extent=spec.table_extent, seed=spec.seed,
                      noise_sigma=spec.noise_sigma, gripper=spec.gripper,
                      sample_spacing=spec.sample_spacing)
        labels = _scene_labels(scene, spec)
        if labels is not None:
            scene.labels = labels
            return scene
    raise RuntimeError(f"scene generation failed after 25 attempts (seed={spec.seed})")


def _place_objects(spec: SceneSpec, rng: np.random.Generator) -> list:
    n = int(rng.integers(spec.n_objects[0], spec.n_objects[1] + 1))
    sizes = spec.size_ranges
    objects: list = []
    for _ in range(n):
        kind = spec.palette[int(rng.integers(len(spec.palette)))]
        if kind == "box":
            sx = rng.uniform(*sizes["box_xy"])
            sy = rng.uniform(*sizes["box_xy"])
            sz = rng.uniform(*sizes["box_z"])
            proto = Box(np.zeros(3), np.array([sx, sy, sz]), yaw=rng.uniform(-math.pi, math.pi))
            proto.center = np.array([0.0, 0.0, sz / 2.0])
        elif kind == "cylinder":
            r = rng.uniform(*sizes["cylinder_r"])
            h = rng.uniform(*sizes["cylinder_h"])
            proto = Cylinder(np.array([0.0, 0.0, h / 2.0]), r, h)
        else:
            r = rng.uniform(*sizes["sphere_r"])
            proto = Sphere(np.array([0.0, 0.0, r]), r)
        placed = False
        for _ in range(60):
            rb = proto.bound_radius()
            mx = spec.table_extent[0] / 2.0 - rb - 0.02
            my = spec.table_extent[1] / 2.0 - rb - 0.02
            x = rng.uniform(-mx, mx)
            y = rng.uniform(-my, my)
            if all(math.hypot(x - o.center[0], y - o.center[1])
                   >= rb + o.bound_radius() + 0.012 for o in objects):
                proto.center = np.array([x, y, proto.center[2]])
                objects.append(proto)
                placed = True
                break
        if not placed:
            continue    # drop the object; the count check below handles shortfalls
    return objects


def _scene_labels(scene: Scene, spec: SceneSpec) -> list | None:
    """Camera-frame labels after visibility, collision, and NMS filtering;
    None if any object ends up with no collision-free label."""
    if len(scene.objects) < spec.n_objects[0]:
        return None
    complete = scene.complete_cloud()
    margin = 6.0
    kept: list[Grasp6D] = []
    owners: list[int] = []
    survivors_per_obj = [0] * len(scene.objects)
    for oi, obj in enumerate(scene.objects):
        for g_w in ground_truth_grasps(obj, spec.gripper):
            R_c = scene.cam_rot.T @ matrix_from_quat(g_w.q)
            t_c = scene.world_to_cam(g_w.t)
            if t_c[2] <= 0:
                continue
            try:
                g_c = Grasp6D(t=t_c, q=quat_from_matrix(R_c), width=g_w.width, score=1.0)
                angles_from_rotation(R_c)
            except ValueError:
                continue
            u, v, _ = project(t_c, scene.intrinsics)
            if not (margin <= u < scene.intrinsics.width - margin
                    and margin <= v < scene.intrinsics.height - margin):
                continue
            if label_collides(g_c, complete.points, spec.gripper):
                continue
            kept.append(g_c)
            owners.append(oi)
            survivors_per_obj[oi] += 1
    if any(s == 0 for s in survivors_per_obj):
        return None
    # dedupe at the coverage thresholds; all scores are 1 so insertion
    # order keeps the first label of each duplicate cluster
    return _nms_labels(kept)


def _nms_labels(labels: list[Grasp6D]) -> list[Grasp6D]:
    kept: list[Grasp6D] = []
    for g in labels:
        dominated = False
        for k in kept:
            dx = g.t[0] - k.t[0]
            dy = g.t[1] - k.t[1]
            dz = g.t[2] - k.t[2]
            if dx * dx + dy * dy + dz * dz <= 0.02 * 0.02:
                qd = abs(float(g.q @ k.q))
                if 1.0 - qd <= 0.1:
                    dominated = True
                    break
        if not dominated:
            kept.append(g)
    return kept
