"""Command-line entry point.

Exit codes: 0 on success, 2 on bad input or configuration, 3 when the
optimizer aborts on a non-finite energy.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..body.io import load_body, load_params, save_params
from ..body.model import forward
from ..hypotheses import HypothesisError, load_hypotheses, save_hypotheses, synth_hypotheses
from ..lifting.energies import LiftProblem
from ..lifting.optimizer import LiftError, default_init, optimize
from ..masking.controller import MaskConfig, MaskingError, run_inpaint_loop
from ..masking.io import save_mask_png
from ..masking.mock import MockInpaintBackend
from ..masking.protocol import ProtocolClient
from ..metrics import MetricsError, evaluate
from ..scene.camera import CameraError, load_cameras, save_cameras
from ..scene.mesh import MeshError, load_mesh
from ..scene.sdf import SdfError, build_sdf, load_sdf, save_sdf
from .config import ConfigError, load_config
from .provider import PipelineError
from .run import load_body_model, load_scene, refine, run_initial, run_pipeline

_USER_ERRORS = (ConfigError, PipelineError, HypothesisError, MeshError,
                SdfError, CameraError, MetricsError, MaskingError,
                ValueError, OSError)


def _add_config_args(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="YAML config overlaying the defaults")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="override the output directory")


def _common_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "mesh", None):
        overrides["scene_mesh"] = args.mesh
    if getattr(args, "sdf", None):
        overrides["scene_sdf"] = args.sdf
    if getattr(args, "body", None):
        overrides["body"] = args.body
    if getattr(args, "point", None) is not None:
        overrides["point"] = args.point
    if getattr(args, "provider", None):
        overrides["provider"] = args.provider
    if getattr(args, "refinement_count", None) is not None:
        overrides["refinement_count"] = args.refinement_count
    return overrides


def _load_cfg(args):
    return load_config(getattr(args, "config", None), _common_overrides(args))


def cmd_sdf_build(args) -> int:
    mesh = load_mesh(args.mesh)
    grid = build_sdf(mesh, (args.dims,) * 3, args.padding)
    save_sdf(grid, args.out)
    print(f"wrote {args.out}: dims {grid.dims}, spacing {grid.spacing!r}")
    return 0


def cmd_cameras_sample(args) -> int:
    cfg = _load_cfg(args)
    from ..scene.sampling import sample_cameras

    mesh = load_mesh(args.mesh)
    cams = sample_cameras(mesh, np.asarray(args.point), cfg.sampling,
                          seed=cfg.seed, width=cfg.width, height=cfg.height)
    if not cams:
        raise PipelineError("no sampled viewpoint sees the interaction patch")
    save_cameras(cams, args.out_file)
    print(f"wrote {args.out_file}: {len(cams)} cameras")
    return 0


def cmd_hyp_synth(args) -> int:
    cfg = _load_cfg(args)
    model = load_body_model(cfg)
    gt, _ = load_params(args.gt)
    cameras = load_cameras(args.cameras)
    hyps = synth_hypotheses(model, gt, cameras, noise_px=args.noise_px,
                            outlier_views=tuple(args.outliers or ()),
                            seed=cfg.seed, layout_id=args.layout)
    save_hypotheses(hyps, args.out_file)
    print(f"wrote {args.out_file}: {len(hyps)} hypotheses")
    return 0


def cmd_lift(args) -> int:
    cfg = _load_cfg(args)
    model = load_body_model(cfg)
    _, sdf = load_scene(cfg)
    cameras = load_cameras(args.cameras)
    hyps = load_hypotheses(args.hyp)
    problem = LiftProblem(model, sdf, cameras, hyps, cfg.weights, cfg.optim)
    result = optimize(problem, default_init(np.asarray(cfg.point)))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_params(result.params, out / "params.final",
                view_weights=result.view_weights.weights,
                energies=result.energies)
    print(f"wrote {out / 'params.final'}: total energy {result.energies['total']!r}")
    return 0


def cmd_refine(args) -> int:
    cfg = _load_cfg(args)
    current, _ = load_params(args.params)
    result = refine(cfg, current)
    print(f"wrote {result.out_dir / 'params.final'} after "
          f"{cfg.refinement_count} refinement pass(es)")
    return 0


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    result = run_pipeline(cfg)
    e = result.energies
    print(f"wrote {result.out_dir}: total energy {e.get('total')!r} "
          f"over {len(result.cameras)} views")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    model = load_body_model(cfg)
    sdf = load_sdf(args.sdf)
    paths = sorted(Path(args.params_dir).glob(args.glob))
    if not paths:
        raise PipelineError(f"no params files match {args.glob} in {args.params_dir}")
    bodies, params_list = [], []
    for p in paths:
        params, _ = load_params(p)
        verts, _ = forward(model, params)
        bodies.append(verts)
        params_list.append(params)
    report = evaluate(bodies, sdf, params_list, seed=cfg.seed)
    sys.stdout.write(report.to_text())
    if args.out_prefix:
        report.save_text(args.out_prefix + ".txt")
        report.save_csv(args.out_prefix + ".csv")
    return 0


def cmd_mask_simulate(args) -> int:
    cfg = _load_cfg(args)
    mask_cfg = MaskConfig(steps=args.steps, t_min=args.t_min,
                          token_indices=tuple(args.tokens),
                          threshold=cfg.masking.threshold,
                          latent_hw=cfg.masking.latent_hw)
    if args.backend_cmd:
        backend = ProtocolClient.spawn(args.backend_cmd)
    else:
        backend = MockInpaintBackend(seed=cfg.seed)
    try:
        result = run_inpaint_loop(backend, None, cfg.prompt, mask_cfg)
    finally:
        if isinstance(backend, ProtocolClient):
            backend.close()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for state in result.trajectory:
        save_mask_png(state.mask, out / f"mask_t{state.t:03d}.png")
    save_mask_png(result.mask, out / "mask_final.png")
    from PIL import Image

    Image.fromarray(result.image).save(out / "image.png")
    print(f"wrote {out}: {len(result.trajectory)} mask states")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="poselift",
        description="Scene-aware multi-view lifting of 2D pose hypotheses")
    sub = ap.add_subparsers(dest="command", required=True)

    sdf = sub.add_parser("sdf", help="signed distance grids").add_subparsers(
        dest="subcommand", required=True)
    p = sdf.add_parser("build", help="voxelize a mesh into a signed distance grid")
    p.add_argument("--mesh", required=True)
    p.add_argument("--dims", type=int, default=64)
    p.add_argument("--padding", type=float, default=0.2)
    p.add_argument("--out", dest="out", required=True)
    p.set_defaults(func=cmd_sdf_build)

    cams = sub.add_parser("cameras", help="camera sampling").add_subparsers(
        dest="subcommand", required=True)
    p = cams.add_parser("sample", help="sample viewpoints around a point")
    p.add_argument("--mesh", required=True)
    p.add_argument("--point", nargs=3, type=float, required=True)
    p.add_argument("--out-file", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_cameras_sample)

    hyp = sub.add_parser("hyp", help="pose hypotheses").add_subparsers(
        dest="subcommand", required=True)
    p = hyp.add_parser("synth", help="project a body into sampled views")
    p.add_argument("--gt", required=True, help="body parameter file to project")
    p.add_argument("--cameras", required=True)
    p.add_argument("--out-file", required=True)
    p.add_argument("--noise-px", type=float, default=0.0)
    p.add_argument("--outliers", nargs="*", type=int, default=[])
    p.add_argument("--layout", default="body22")
    p.add_argument("--body")
    _add_config_args(p)
    p.set_defaults(func=cmd_hyp_synth)

    p = sub.add_parser("lift", help="fit a body to hypothesis files")
    p.add_argument("--mesh", required=True)
    p.add_argument("--sdf")
    p.add_argument("--cameras", required=True)
    p.add_argument("--hyp", required=True, help="hypothesis file covering all views")
    p.add_argument("--point", nargs=3, type=float, required=True)
    p.add_argument("--body")
    _add_config_args(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("refine", help="silhouette-guided refinement passes")
    p.add_argument("--params", required=True, help="params file to start from")
    p.add_argument("--mesh", required=True)
    p.add_argument("--sdf")
    p.add_argument("--point", nargs=3, type=float, required=True)
    p.add_argument("--body")
    p.add_argument("--provider")
    p.add_argument("--refinement-count", type=int, dest="refinement_count")
    _add_config_args(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("run", help="full pipeline: sample, lift, refine")
    p.add_argument("--mesh", required=True)
    p.add_argument("--point", nargs=3, type=float, required=True)
    p.add_argument("--sdf")
    p.add_argument("--body")
    p.add_argument("--provider")
    p.add_argument("--refinement-count", type=int, dest="refinement_count")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="scene-interaction metrics over fitted bodies")
    p.add_argument("--sdf", required=True)
    p.add_argument("--params-dir", required=True)
    p.add_argument("--glob", default="*.params")
    p.add_argument("--out-prefix", help="write report to PREFIX.txt and PREFIX.csv")
    p.add_argument("--body")
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)

    mask = sub.add_parser("mask", help="inpainting mask controller").add_subparsers(
        dest="subcommand", required=True)
    p = mask.add_parser("simulate", help="drive a backend and dump the mask trajectory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--t-min", type=int, default=25)
    p.add_argument("--tokens", nargs="*", type=int, default=[1])
    p.add_argument("--backend-cmd", nargs=argparse.REMAINDER,
                   help="spawn this command as a protocol backend instead of the mock")
    _add_config_args(p)
    p.set_defaults(func=cmd_mask_simulate)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except LiftError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except _USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
