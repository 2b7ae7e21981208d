"""Pipeline orchestration: initial lift, silhouette-guided refinement, artifacts.

All artifact writes are deterministic for a fixed config and seed: text files
use repr floats, no timestamps or wall-clock state is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..body.capsule import capsule_person
from ..body.io import load_body, save_params
from ..body.model import BodyModel, BodyParams, forward
from ..hypotheses import save_hypotheses
from ..lifting.energies import LiftProblem, ViewWeights
from ..lifting.optimizer import LiftResult, default_init, optimize
from ..masking.controller import silhouette_mask
from ..masking.io import save_mask_png
from ..scene.camera import save_cameras
from ..scene.mesh import TriMesh, load_mesh
from ..scene.sdf import SdfGrid, build_sdf, load_sdf, save_sdf
from .config import PipelineConfig, config_to_dict
from .provider import PipelineError, make_provider


@dataclass
class PipelineResult:
    params: BodyParams
    view_weights: ViewWeights
    energies: dict
    trace: list
    cameras: list
    hypotheses: list
    out_dir: Path | None = None
    ground_truth: BodyParams | None = None
    passes: list = field(default_factory=list)  # LiftResult per refinement pass


def load_body_model(cfg: PipelineConfig) -> BodyModel:
    if cfg.body:
        path = Path(cfg.body)
        if not path.is_file():
            raise PipelineError(f"body asset not found: {path}")
        return load_body(path)
    return capsule_person(seed=0)


def load_scene(cfg: PipelineConfig) -> tuple[TriMesh, SdfGrid]:
    if not cfg.scene_mesh:
        raise PipelineError("scene_mesh is required")
    mesh_path = Path(cfg.scene_mesh)
    if not mesh_path.is_file():
        raise PipelineError(f"scene mesh not found: {mesh_path}")
    scene = load_mesh(mesh_path)
    if cfg.scene_sdf:
        sdf_path = Path(cfg.scene_sdf)
        if not sdf_path.is_file():
            raise PipelineError(f"scene SDF not found: {sdf_path}")
        sdf = load_sdf(sdf_path)
    else:
        dims = (cfg.sdf_dims,) * 3
        sdf = build_sdf(scene, dims, cfg.sdf_padding)
    return scene, sdf


def _sample_views(cfg: PipelineConfig, scene: TriMesh):
    from ..scene.sampling import sample_cameras

    cameras = sample_cameras(scene, np.asarray(cfg.point), cfg.sampling,
                             seed=cfg.seed, width=cfg.width, height=cfg.height)
    if not cameras:
        raise PipelineError("no sampled viewpoint sees the interaction patch")
    return cameras


def _write_trace(handle, stage: str, trace: list) -> None:
    handle.write(f"# {stage}\n")
    for e in trace:
        keys = ("pf", "vs", "bp", "bs", "sc", "sp", "total")
        line = f"step={e['step']} " + " ".join(f"{k}={e[k]!r}" for k in keys)
        line += f" sc_hard_min={e['sc_hard_min']!r} sp_pairs={e['sp_pairs']}"
        handle.write(line + "\n")


def _write_stage_hypotheses(out: Path, hyps) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for h in hyps:
        save_hypotheses([h], out / f"view_{h.view_id:03d}.txt")


@dataclass
class _Session:
    """Everything deterministic that both the initial lift and the refinement
    passes share: the loaded assets, sampled cameras, and provider."""

    cfg: PipelineConfig
    model: BodyModel
    scene: TriMesh
    sdf: SdfGrid
    cameras: list
    provider: object

    @classmethod
    def open(cls, cfg: PipelineConfig, model: BodyModel | None = None) -> "_Session":
        model = model if model is not None else load_body_model(cfg)
        scene, sdf = load_scene(cfg)
        cameras = _sample_views(cfg, scene)
        provider = make_provider(cfg, model, scene, sdf)
        return cls(cfg=cfg, model=model, scene=scene, sdf=sdf,
                   cameras=cameras, provider=provider)

    def lift(self, hyps, init: BodyParams) -> LiftResult:
        problem = LiftProblem(self.model, self.sdf, self.cameras, hyps,
                              self.cfg.weights, self.cfg.optim)
        return optimize(problem, init)

    def silhouettes(self, params: BodyParams) -> dict:
        verts, _ = forward(self.model, params)
        body = TriMesh(vertices=verts, faces=self.model.faces.copy())
        return {cam.view_id: silhouette_mask(body, cam, self.cfg.mask_kernel)
                for cam in self.cameras}


def run_initial(cfg: PipelineConfig, *, model: BodyModel | None = None,
                session: _Session | None = None, write: bool = True) -> PipelineResult:
    """Sample views, acquire hypotheses, run one lift from the default init,
    and write the artifact tree."""
    ses = session if session is not None else _Session.open(cfg, model)
    hyps = ses.provider.initial(ses.cameras)
    result = ses.lift(hyps, default_init(np.asarray(cfg.point)))
    gt = getattr(ses.provider, "ground_truth", None)

    out_dir = None
    if write:
        out_dir = _prepare_out_dir(cfg)
        save_cameras(ses.cameras, out_dir / "cameras" / "cameras.txt")
        _write_stage_hypotheses(out_dir / "hypotheses", hyps)
        if cfg.scene_sdf == "":
            save_sdf(ses.sdf, out_dir / "scene.gsdf")
        if gt is not None:
            save_params(gt, out_dir / "ground_truth.params")
        _finalize(out_dir, result, [("initial", result.trace)])
    return PipelineResult(params=result.params, view_weights=result.view_weights,
                          energies=result.energies, trace=result.trace,
                          cameras=ses.cameras, hypotheses=hyps, out_dir=out_dir,
                          ground_truth=gt)


def refine(cfg: PipelineConfig, current: BodyParams, *,
           model: BodyModel | None = None, session: _Session | None = None,
           write: bool = True, start_pass: int = 1) -> PipelineResult:
    """Run cfg.refinement_count silhouette-guided passes from the given fit.

    Each pass renders the current body's dilated silhouette in every view,
    asks the provider for hypotheses conditioned on those masks, and re-runs
    the optimizer warm-started from the current parameters. A count of zero
    returns the input parameters unchanged.
    """
    ses = session if session is not None else _Session.open(cfg, model)
    out_dir = _prepare_out_dir(cfg) if write else None

    params = current.copy()
    passes: list[LiftResult] = []
    stages: list[tuple[str, list]] = []
    last: LiftResult | None = None
    for i in range(cfg.refinement_count):
        pass_index = start_pass + i
        masks = ses.silhouettes(params)
        if out_dir is not None:
            mask_dir = out_dir / "masks" / f"pass_{pass_index:02d}"
            mask_dir.mkdir(parents=True, exist_ok=True)
            for view_id, mask in sorted(masks.items()):
                save_mask_png(mask, mask_dir / f"view_{view_id:03d}.png")
        hyps = ses.provider.refined(ses.cameras, masks, pass_index)
        if out_dir is not None:
            _write_stage_hypotheses(out_dir / "hypotheses" / f"pass_{pass_index:02d}", hyps)
        last = ses.lift(hyps, params)
        params = last.params
        passes.append(last)
        stages.append((f"pass {pass_index}", last.trace))

    if last is None:  # refinement_count == 0
        vw = ViewWeights.initial(len(ses.cameras), cfg.optim.init_view_weight)
        result = PipelineResult(params=params, view_weights=vw, energies={},
                                trace=[], cameras=ses.cameras, hypotheses=[],
                                out_dir=out_dir)
        if out_dir is not None:
            save_params(params, out_dir / "params.final")
    else:
        result = PipelineResult(params=params, view_weights=last.view_weights,
                                energies=last.energies, trace=last.trace,
                                cameras=ses.cameras, hypotheses=[], out_dir=out_dir,
                                passes=passes)
    if out_dir is not None and last is not None:
        _finalize(out_dir, last, stages)
    result.ground_truth = getattr(ses.provider, "ground_truth", None)
    return result


def run_pipeline(cfg: PipelineConfig, *, model: BodyModel | None = None) -> PipelineResult:
    """End to end: initial lift followed by the configured refinement passes;
    params.final reflects the last pass."""
    ses = _Session.open(cfg, model)
    initial = run_initial(cfg, session=ses, write=True)
    out_dir = initial.out_dir
    stages = [("initial", initial.trace)]
    result = initial
    if cfg.refinement_count > 0:
        refined = refine(cfg, initial.params, session=ses, write=True)
        stages += [(f"pass {i + 1}", r.trace) for i, r in enumerate(refined.passes)]
        result = PipelineResult(params=refined.params, view_weights=refined.view_weights,
                                energies=refined.energies, trace=refined.trace,
                                cameras=initial.cameras, hypotheses=initial.hypotheses,
                                out_dir=out_dir, ground_truth=initial.ground_truth,
                                passes=refined.passes)
        _finalize(out_dir, refined.passes[-1], stages)
    return result


def _prepare_out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out_dir)
    for sub in ("cameras", "hypotheses", "masks"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    import yaml

    (out / "config.yaml").write_text(
        yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    return out


def _finalize(out_dir: Path, last: LiftResult, stages: list) -> None:
    save_params(last.params, out_dir / "params.final",
                view_weights=last.view_weights.weights,
                energies=last.energies)
    with open(out_dir / "trace.log", "w") as handle:
        for name, trace in stages:
            _write_trace(handle, name, trace)
