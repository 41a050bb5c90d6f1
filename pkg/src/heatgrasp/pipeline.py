"""End-to-end teacher-forcing pipeline.

Ground-truth labels are encoded to heatmaps, the (optionally noise
perturbed) depth is lifted to a cloud, heatmap peaks aggregate point
regions, oracle predictions derived from the labels drive the decoder,
and the resulting grasps are deduplicated and scored. Running the decode
path from oracles isolates the non-learned machinery: with exact offsets
the pipeline must reproduce every label.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .aggregation import AggregationConfig, aggregate_regions, select_centers
from .anchors import AnchorSet, shift_step
from .decode import decode_region, grasp_nms, teacher_predictions
from .geometry import Grasp2D5, Grasp6D, angles_from_rotation, matrix_from_quat, \
    pose_to_grasp, project
from .heatmap import HeatmapConfig, HeatmapSet, encode_heatmaps
from .metrics import MetricsReport, evaluate_grasps
from .pointops import depth_to_cloud
from .scenegen import Scene, render_depth


class PipelineStageError(RuntimeError):
    """Failure wrapped with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    """Flat, JSON-round-trippable pipeline settings.

    Image size comes from the scene intrinsics; everything else defaults
    to the reference operating point (r=8, k_a=6, k_r=7, T=1, N_g=512,
    k_center=48).
    """

    grid_r: int = 8
    k_a: int = 6
    px_per_m: float = 900.0
    w_norm: float = 0.085
    d_norm: float = 0.1
    k_r: int = 7
    anchor_K: int = 10000
    anchor_T: int = 1
    anchor_shift_iters: int = 10
    shift_anchors: bool = True
    k_center: int = 48
    n_region_points: int = 512
    min_region_points: int = 16
    ball_cap: int = 1024
    fusion_k: int = 16
    cloud_stride: int = 2
    score_threshold: float = 0.5
    max_per_region: int = 8
    nms_trans: float = 0.02
    nms_rot: float = 0.1
    coverage_trans: float = 0.02
    coverage_rot: float = 0.1
    friction_mu: float = 0.5
    curve_ks: tuple = (8, 16, 32, 64, 128)
    exact_offsets: bool = True
    noise_sigma: float = 0.0
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curve_ks"] = list(self.curve_ks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = cls().to_dict()
        merged.update(d)
        merged["curve_ks"] = tuple(merged["curve_ks"])
        return cls(**merged)

    def heatmap_config(self, intr) -> HeatmapConfig:
        return HeatmapConfig(height=intr.height, width=intr.width, r=self.grid_r,
                             k_a=self.k_a, px_per_m=self.px_per_m,
                             w_norm=self.w_norm, d_norm=self.d_norm)

    def aggregation_config(self) -> AggregationConfig:
        return AggregationConfig(k_center=self.k_center,
                                 n_region_points=self.n_region_points,
                                 min_region_points=self.min_region_points,
                                 ball_cap=self.ball_cap, fusion_k=self.fusion_k)


@dataclass
class PipelineResult:
    grasps: list                 # kept after NMS, descending score
    report: MetricsReport
    heatmaps: HeatmapSet
    seeds: list
    regions: list
    predictions: list
    anchors: AnchorSet
    grasps_raw: list
    labels_2d: list
    timings: dict = field(default_factory=dict)


def perturb_depth(depth: np.ndarray, sigma: float, seed) -> np.ndarray:
    """Seeded additive Gaussian depth noise on valid (positive) pixels."""
    if sigma <= 0:
        return depth
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=depth.shape)
    return np.where(depth > 0, depth + noise, depth)


def project_labels(labels: list[Grasp6D], depth: np.ndarray, intr) -> list[Grasp2D5]:
    """Ground-truth poses to image-plane grasps, reading the surface depth
    under each projected center (center depth fallback where invalid)."""
    out = []
    for g in labels:
        u, v, z = project(g.t, intr)
        ui = min(max(int(round(float(u))), 0), intr.width - 1)
        vi = min(max(int(round(float(v))), 0), intr.height - 1)
        surf = depth[vi, ui]
        if not (np.isfinite(surf) and surf > 0):
            surf = float(z)
        out.append(pose_to_grasp(g, intr, surface_z=float(surf)))
    return out


def shifted_anchor_set(labels: list[Grasp6D], cfg: PipelineConfig) -> AnchorSet:
    """Anchors started uniform and shifted onto the label angle
    distribution (the converged stand-in for streaming updates)."""
    aset = AnchorSet.uniform(cfg.k_r, K=cfg.anchor_K, T=cfg.anchor_T)
    if cfg.shift_anchors and labels:
        gammas, betas = [], []
        for g in labels:
            _, gamma, beta = angles_from_rotation(matrix_from_quat(g.q))
            gammas.append(gamma)
            betas.append(beta)
        aset.gamma = shift_step(aset.gamma, np.array(gammas), T=cfg.anchor_shift_iters)
        aset.beta = shift_step(aset.beta, np.array(betas), T=cfg.anchor_shift_iters)
    return aset


def run_pipeline(scene: Scene, cfg: PipelineConfig,
                 depth: np.ndarray | None = None,
                 normal_map: np.ndarray | None = None) -> PipelineResult:
    """Run encode -> perturb -> select -> aggregate -> teacher -> decode ->
    NMS -> evaluate on one scene. Any stage failure raises
    PipelineStageError tagged with the stage name.

    `depth` / `normal_map` can be passed in (e.g. loaded from files);
    otherwise the scene is rendered noise-free first. Collision metrics run
    against the observed (possibly noisy) cloud, contact metrics against
    the scene's complete analytic sampling.
    """
    timings: dict[str, float] = {}

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
        return result

    intr = scene.intrinsics
    if depth is None:
        depth, normal_map = stage(
            "render", lambda: render_depth(scene, with_normals=True))
    elif normal_map is None:
        _, normal_map = stage(
            "render", lambda: render_depth(scene, with_normals=True))

    heat_cfg = cfg.heatmap_config(intr)
    agg_cfg = cfg.aggregation_config()

    labels_2d = stage("project_labels",
                      lambda: project_labels(scene.labels, depth, intr))
    maps = stage("encode", lambda: encode_heatmaps(labels_2d, heat_cfg))
    noisy = stage("perturb",
                  lambda: perturb_depth(depth, cfg.noise_sigma, (cfg.seed, scene.seed)))
    cloud = stage("cloud", lambda: depth_to_cloud(noisy, intr, cfg.cloud_stride,
                                                  normal_map=normal_map))
    seeds = stage("select", lambda: select_centers(maps.q_conf, maps.q_width,
                                                   maps.q_depth, noisy, intr,
                                                   agg_cfg, heat_cfg))
    regions = stage("aggregate", lambda: aggregate_regions(cloud, seeds, agg_cfg,
                                                           intr, heat_cfg))
    aset = stage("anchors", lambda: shifted_anchor_set(scene.labels, cfg))
    preds = stage("teacher", lambda: teacher_predictions(scene.labels, regions, aset,
                                                         exact_offsets=cfg.exact_offsets))
    grasps_raw = stage("decode", lambda: [
        g for p in preds
        for g in decode_region(p, aset, cfg.score_threshold, cfg.max_per_region)
    ])
    kept = stage("nms", lambda: grasp_nms(grasps_raw, cfg.nms_trans, cfg.nms_rot))
    report = stage("evaluate", lambda: evaluate_grasps(
        kept, scene.labels, cloud, scene.gripper, mu=cfg.friction_mu,
        trans_thresh=cfg.coverage_trans, rot_thresh=cfg.coverage_rot,
        ks=list(cfg.curve_ks), contact_cloud=scene.complete_cloud()))

    return PipelineResult(grasps=kept, report=report, heatmaps=maps, seeds=seeds,
                          regions=regions, predictions=preds, anchors=aset,
                          grasps_raw=grasps_raw, labels_2d=labels_2d,
                          timings=timings)
