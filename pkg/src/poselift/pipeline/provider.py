"""Hypothesis providers: where per-view 2D pose evidence comes from.

Three sources share one interface: a synthetic provider that projects a
seeded ground-truth body (the test and demo path), a files provider that
reads per-view hypothesis files from disk, and an adapter provider that
invokes an external command to produce those files.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..body.capsule import capsule_person
from ..body.model import BodyModel, BodyParams, forward
from ..hypotheses import PoseHypothesis, get_joint_map, load_hypotheses, synth_hypotheses
from ..scene.camera import MIN_DEPTH, project
from ..scene.mesh import TriMesh
from ..scene.raster import rasterize
from ..scene.sdf import SdfGrid, sample_sdf
from .config import PipelineConfig


class PipelineError(RuntimeError):
    """Bad inputs or missing resources, as opposed to a failed optimization."""


def make_ground_truth(model: BodyModel, sdf: SdfGrid, point, cfg: PipelineConfig) -> BodyParams:
    """Seeded plausible body near the interaction point, grounded against the
    scene so its deepest vertex sits at -contact_depth."""
    syn = cfg.synthetic
    rng = np.random.default_rng(syn.gt_seed)
    yaw = rng.uniform(0.0, 2.0 * np.pi)
    c, s = np.cos(yaw), np.sin(yaw)
    rot6d = np.array([c, s, 0.0, -s, c, 0.0])
    theta = syn.theta_scale * rng.standard_normal(model.pose_decoder.shape[1])
    phi = 0.2 * rng.standard_normal(model.shape_blends.shape[2])
    point = np.asarray(point, dtype=np.float64).reshape(3)
    trans = point + np.array([0.0, 0.0, 0.95])
    params = BodyParams(rot6d=rot6d, trans=trans, theta=theta, phi=phi)

    # drop along z until the deepest vertex reaches the target depth
    for _ in range(8):
        verts, _ = forward(model, params)
        shift = float(sample_sdf(sdf, verts).min()) + syn.contact_depth
        if abs(shift) < 1e-6:
            break
        trans = trans - np.array([0.0, 0.0, shift])
        params = BodyParams(rot6d=rot6d, trans=trans, theta=theta, phi=phi)
    return params


def _hypothesis_seed(base: int, pass_index: int) -> int:
    return (int(base) * 1000003 + pass_index) & 0x7FFFFFFF


class SyntheticProvider:
    """Projects a seeded ground-truth body into every view.

    Refinement passes resample the same projections with confidence zeroed
    outside the silhouette mask and the pixel noise shrunk by
    refine_noise_decay per pass.
    """

    def __init__(self, cfg: PipelineConfig, model: BodyModel, scene: TriMesh,
                 sdf: SdfGrid):
        self.cfg = cfg
        self.model = model
        self.ground_truth = make_ground_truth(model, sdf, cfg.point, cfg)

    def initial(self, cameras) -> list[PoseHypothesis]:
        syn = self.cfg.synthetic
        return synth_hypotheses(self.model, self.ground_truth, cameras,
                                noise_px=syn.noise_px,
                                outlier_views=syn.outlier_views,
                                seed=_hypothesis_seed(syn.gt_seed, 0),
                                layout_id=syn.layout)

    def refined(self, cameras, masks: dict, pass_index: int) -> list[PoseHypothesis]:
        syn = self.cfg.synthetic
        noise = syn.noise_px * syn.refine_noise_decay ** pass_index
        rng = np.random.default_rng(_hypothesis_seed(syn.gt_seed, pass_index))
        jmap = get_joint_map(syn.layout)
        _, joints = forward(self.model, self.ground_truth)
        out = []
        for cam in cameras:
            px, valid = project(cam, joints)
            z = cam.to_camera(joints)[:, 2]
            pts = np.zeros((jmap.n_detector_joints, 2))
            conf = np.zeros(jmap.n_detector_joints)
            pts[list(jmap.detector_indices)] = px[list(jmap.body_indices)]
            ok = valid & (z > MIN_DEPTH)
            mask = masks[cam.view_id]
            h, w = mask.shape
            ix = np.clip(px[:, 0].astype(int), 0, w - 1)
            iy = np.clip(px[:, 1].astype(int), 0, h - 1)
            inside = ((px[:, 0] >= 0) & (px[:, 0] < w)
                      & (px[:, 1] >= 0) & (px[:, 1] < h) & mask[iy, ix])
            conf[list(jmap.detector_indices)] = (ok & inside)[list(jmap.body_indices)].astype(float)
            if noise > 0:
                pts = pts + rng.normal(0.0, noise, size=pts.shape)
            out.append(PoseHypothesis(view_id=cam.view_id, joints2d=pts,
                                      confidence=conf, layout_id=syn.layout,
                                      width=cam.width, height=cam.height))
        return out


class FilesProvider:
    """Reads one hypothesis file per view from a directory."""

    def __init__(self, cfg: PipelineConfig, model: BodyModel, scene: TriMesh,
                 sdf: SdfGrid):
        self.cfg = cfg
        if not cfg.files.dir:
            raise PipelineError("files provider requires files.dir")
        self.dir = Path(cfg.files.dir)

    def initial(self, cameras) -> list[PoseHypothesis]:
        return FilesProviderView(self.dir, self.cfg.files.pattern).load(cameras)

    def refined(self, cameras, masks: dict, pass_index: int) -> list[PoseHypothesis]:
        # no refinement source on disk; reuse the initial evidence
        return self.initial(cameras)


class AdapterProvider:
    """Invokes an external command that writes per-view hypothesis files.

    The command receives --renders (scene depth renders, one PNG per view),
    --cameras (camera file), --out (directory to fill with view_NNN.txt
    hypothesis files), --prompt and --seed; refinement passes add --masks.
    """

    def __init__(self, cfg: PipelineConfig, model: BodyModel, scene: TriMesh,
                 sdf: SdfGrid):
        if not cfg.adapter.cmd:
            raise PipelineError("adapter-protocol provider requires adapter.cmd")
        self.cfg = cfg
        self.scene = scene
        self.workdir = Path(cfg.out_dir) / "adapter"

    def _render(self, cameras, into: Path) -> None:
        into.mkdir(parents=True, exist_ok=True)
        for cam in cameras:
            depth, _ = rasterize(self.scene, cam)
            finite = np.isfinite(depth)
            img = np.zeros(depth.shape, dtype=np.uint8)
            if finite.any():
                lo, hi = depth[finite].min(), depth[finite].max()
                span = (hi - lo) if hi > lo else 1.0
                img[finite] = np.clip(
                    255.0 * (1.0 - (depth[finite] - lo) / span), 0, 255).astype(np.uint8)
            Image.fromarray(img, mode="L").save(into / f"view_{cam.view_id:03d}.png")

    def _request(self, cameras, masks_dir: Path | None, pass_index: int) -> list[PoseHypothesis]:
        from ..scene.camera import save_cameras

        stage = self.workdir / f"pass_{pass_index:02d}"
        renders = stage / "renders"
        out = stage / "hyp"
        out.mkdir(parents=True, exist_ok=True)
        self._render(cameras, renders)
        save_cameras(cameras, stage / "cameras.txt")
        cmd = list(self.cfg.adapter.cmd) + [
            "--renders", str(renders), "--cameras", str(stage / "cameras.txt"),
            "--out", str(out), "--prompt", self.cfg.prompt,
            "--seed", str(_hypothesis_seed(self.cfg.seed, pass_index)),
        ]
        if masks_dir is not None:
            cmd += ["--masks", str(masks_dir)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=600)
        except OSError as e:
            raise PipelineError(f"adapter command failed to start: {e}") from e
        except subprocess.TimeoutExpired as e:
            raise PipelineError("adapter command timed out") from e
        if proc.returncode != 0:
            raise PipelineError(
                f"adapter command exited {proc.returncode}: {proc.stderr.strip()}")
        loader = FilesProviderView(out, self.cfg.files.pattern)
        return loader.load(cameras)

    def initial(self, cameras) -> list[PoseHypothesis]:
        return self._request(cameras, None, 0)

    def refined(self, cameras, masks: dict, pass_index: int) -> list[PoseHypothesis]:
        masks_dir = self.workdir / f"pass_{pass_index:02d}" / "masks"
        masks_dir.mkdir(parents=True, exist_ok=True)
        from ..masking.io import save_mask_png

        for view_id, mask in masks.items():
            save_mask_png(mask, masks_dir / f"view_{view_id:03d}.png")
        return self._request(cameras, masks_dir, pass_index)


@dataclass
class FilesProviderView:
    """Directory reader shared by the files and adapter providers."""

    dir: Path
    pattern: str

    def load(self, cameras) -> list[PoseHypothesis]:
        out = []
        for cam in cameras:
            path = Path(self.dir) / self.pattern.format(view=cam.view_id)
            if not path.is_file():
                raise PipelineError(
                    f"hypothesis file for view {cam.view_id} not found: {path}")
            records = [h for h in load_hypotheses(path) if h.view_id == cam.view_id]
            if not records:
                raise PipelineError(
                    f"{path} holds no hypothesis for view {cam.view_id}")
            out.append(records[0])
        return out


_PROVIDERS = {
    "synthetic": SyntheticProvider,
    "files": FilesProvider,
    "adapter-protocol": AdapterProvider,
}


def make_provider(cfg: PipelineConfig, model: BodyModel, scene: TriMesh, sdf: SdfGrid):
    try:
        cls = _PROVIDERS[cfg.provider]
    except KeyError:
        raise PipelineError(f"unknown provider {cfg.provider!r}") from None
    return cls(cfg, model, scene, sdf)


def default_body(seed: int = 0) -> BodyModel:
    return capsule_person(seed=seed)
