"""Command-line surface for the voting localization engine.

Exit codes: 0 success, 2 configuration problems, 3 file-format problems,
4 pipeline errors (anything the engine raises while computing).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import model as _model
from . import synth
from .config import RunConfig, read_config
from .errors import (
    AnnotationMismatch,
    ConfigError,
    FormatError,
    VotelocError,
)
from .formats import (
    read_annotations,
    read_descriptor_map,
    read_weights,
    write_annotations,
    write_descriptor_map,
    write_weights,
)
from .geometry import BBox, PairGeometry, cov_analytic, cov_det_analytic, jacobian_det
from .metrics import EvalRecord, average_precision, recall_at
from .sampling import SamplerConfig
from .voting import Detection, detect, heatmap_image, localize, vote_grid

DEFAULT_THRESHOLDS = (0.25, 0.5)


def _load_config(args) -> RunConfig:
    return read_config(args.config) if args.config else RunConfig()


def _sampler_config(cfg: RunConfig) -> SamplerConfig:
    return SamplerConfig(
        strata_divisor=cfg.strata_divisor,
        pair_distance_fraction=cfg.pair_distance_fraction,
        pair_count=cfg.pair_count,
        seed=cfg.sample_seed,
    )


def _train_config(cfg: RunConfig) -> _model.TrainConfig:
    return _model.TrainConfig(
        learning_rate=cfg.learning_rate,
        weight_decay=cfg.weight_decay,
        epochs=cfg.epochs,
        frames_per_batch=cfg.frames_per_batch,
        adam_beta1=cfg.adam_beta1,
        adam_beta2=cfg.adam_beta2,
        adam_eps=cfg.adam_eps,
        seed=cfg.train_seed,
    )


def _frame_id(path) -> str:
    return Path(path).stem


def _load_annotated_frames(map_paths, annotation_path, single_box: bool):
    """Maps joined to their annotation lines by file stem."""
    annotations = read_annotations(annotation_path)
    frames = []
    seen = set()
    for path in map_paths:
        frame_id = _frame_id(path)
        if frame_id in seen:
            raise ConfigError(f"duplicate frame id {frame_id!r} among input maps")
        seen.add(frame_id)
        if frame_id not in annotations:
            raise AnnotationMismatch(f"no annotation for frame {frame_id!r}")
        boxes = annotations[frame_id]
        if single_box and len(boxes) != 1:
            raise AnnotationMismatch(
                f"frame {frame_id!r}: expected exactly one box, got {len(boxes)}"
            )
        frames.append((frame_id, read_descriptor_map(path), boxes))
    return frames


def _detection_json(det: Detection) -> dict:
    return {
        "cx": det.box.cx,
        "cy": det.box.cy,
        "w": det.box.w,
        "h": det.box.h,
        "score": det.score,
    }


def _write_predictions(path, preds: dict[str, list[Detection]]) -> None:
    payload = {fid: [_detection_json(d) for d in dets] for fid, dets in preds.items()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_predictions(path) -> dict[str, list[Detection]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: top level must be an object keyed by frame id")
    out: dict[str, list[Detection]] = {}
    for fid, entries in payload.items():
        if not isinstance(entries, list):
            raise FormatError(f"{path}: frame {fid!r} must map to a list")
        dets = []
        for i, entry in enumerate(entries):
            try:
                box = BBox(entry["cx"], entry["cy"], entry["w"], entry["h"])
                dets.append(Detection(box, float(entry["score"])))
            except (KeyError, TypeError) as exc:
                raise FormatError(
                    f"{path}: frame {fid!r} entry {i}: missing or bad field ({exc})"
                ) from None
        out[fid] = dets
    return out


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.instances < 1:
        raise ConfigError("--instances must be >= 1")
    base = (
        (args.base_width, args.base_height)
        if args.base_width and args.base_height
        else ((250.0, 150.0) if args.instances == 1 else (150.0, 90.0))
    )
    scale = (args.scale_min, args.scale_max)
    if args.instances == 1:
        scenes = synth.make_scene_set(
            args.count, args.height, args.width, args.dim, args.noise, args.seed,
            base_size=base, scale_range=scale,
        )
    else:
        scenes = synth.make_multi_instance_scenes(
            args.count, args.instances, args.height, args.width, args.dim,
            args.noise, args.seed, base_size=base, scale_range=scale,
        )
    annotations = {}
    for i, scene in enumerate(scenes):
        frame_id = f"scene_{i:03d}"
        write_descriptor_map(out_dir / f"{frame_id}.odmp", scene.map)
        annotations[frame_id] = list(scene.boxes)
    write_annotations(out_dir / "annotations.txt", annotations)
    print(
        f"wrote {len(scenes)} scene(s) of {args.width}x{args.height}x{args.dim} "
        f"with {args.instances} instance(s) each to {out_dir}"
    )
    return 0


def cmd_extract_targets(args) -> int:
    cfg = _load_config(args)
    frames = _load_annotated_frames(args.maps, args.annotations, single_box=True)
    groups = _model._frame_samples(
        [(dmap, boxes[0]) for _, dmap, boxes in frames],
        _sampler_config(cfg),
        absolute_size=cfg.absolute_size,
    )
    count = 0
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("# frame_id\tdir_x\tdir_y\tsize_x\tsize_y\n")
        for (frame_id, _, _), samples in zip(frames, groups):
            for s in samples:
                fh.write(
                    f"{frame_id}\t{s.target_dir.dx!r}\t{s.target_dir.dy!r}"
                    f"\t{s.target_relsize.sx!r}\t{s.target_relsize.sy!r}\n"
                )
                count += 1
    print(f"wrote {count} training targets for {len(frames)} frame(s) to {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    frames = _load_annotated_frames(args.maps, args.annotations, single_box=True)
    weights, losses = _model.train(
        [(dmap, boxes[0]) for _, dmap, boxes in frames],
        _train_config(cfg),
        _sampler_config(cfg),
        hidden=cfg.hidden,
        blocks=cfg.blocks,
        loss_variant=cfg.loss_variant,
        size_weight=cfg.size_loss_weight,
        absolute_size=cfg.absolute_size,
    )
    write_weights(args.output, weights)
    if args.loss_log:
        with open(args.loss_log, "w", encoding="utf-8") as fh:
            for epoch, value in enumerate(losses, start=1):
                fh.write(f"{epoch} {value!r}\n")
    print(
        f"trained on {len(frames)} frame(s) for {cfg.epochs} epochs; "
        f"final mean loss {losses[-1]:.6f}; weights -> {args.output}"
    )
    return 0


def cmd_localize(args) -> int:
    cfg = _load_config(args)
    weights = read_weights(args.weights)
    preds: dict[str, list[Detection]] = {}
    for path in args.maps:
        frame_id = _frame_id(path)
        det = localize(read_descriptor_map(path), weights, cfg)
        preds[frame_id] = [det]
        b = det.box
        print(f"{frame_id} {b.cx:.2f} {b.cy:.2f} {b.w:.2f} {b.h:.2f} {det.score:g}")
    if args.output:
        _write_predictions(args.output, preds)
    return 0


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    weights = read_weights(args.weights)
    preds: dict[str, list[Detection]] = {}
    for path in args.maps:
        frame_id = _frame_id(path)
        dets = detect(
            read_descriptor_map(path), weights, cfg,
            min_score=args.min_score, max_instances=args.max_instances,
        )
        preds[frame_id] = dets
        for rank, det in enumerate(dets):
            b = det.box
            print(
                f"{frame_id} {rank} {b.cx:.2f} {b.cy:.2f} {b.w:.2f} {b.h:.2f} "
                f"{det.score:g}"
            )
        if not dets:
            print(f"{frame_id} (no detections)")
    if args.output:
        _write_predictions(args.output, preds)
    return 0


def cmd_eval(args) -> int:
    annotations = read_annotations(args.annotations)
    preds = _read_predictions(args.predictions)
    records = [
        EvalRecord(fid, tuple(preds.get(fid, [])), tuple(boxes))
        for fid, boxes in annotations.items()
    ]
    lines = []
    for thr in args.thresholds:
        tag = f"{round(thr * 100):d}"
        if args.mode == "loc":
            lines.append(f"mRec{tag}={recall_at(records, thr):.4f}")
        else:
            lines.append(f"AP{tag}={average_precision(records, thr):.4f}")
    report = "\n".join(lines)
    print(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report + "\n")
    return 0


def cmd_analyze_variance(args) -> int:
    lines = []
    lines.append(
        f"pair-vote covariance, a=b=1, alpha=0, sigma={args.sigma}, "
        f"n={args.samples}"
    )
    lines.append(
        f"{'beta_deg':>9} {'det_J':>12} {'det_cov':>12} {'det_cov_mc':>12} "
        f"{'det_ratio':>10} {'max_err':>8}"
    )
    for beta_deg in (-5.0, -10.0, -22.5, -45.0, -67.5, -90.0, -110.0):
        g = PairGeometry(1.0, 1.0, 0.0, math.radians(beta_deg), args.sigma)
        det_j = jacobian_det(g)
        cov_a = cov_analytic(g)
        det_a = cov_det_analytic(g)
        cov_m = synth.monte_carlo_cov(g, args.samples, args.seed)
        det_m = float(np.linalg.det(cov_m))
        # entry error relative to the largest analytic entry (scale-aware)
        err = float(np.abs(cov_m - cov_a).max() / np.abs(cov_a).max())
        lines.append(
            f"{beta_deg:>9.1f} {det_j:>12.4g} {det_a:>12.4g} {det_m:>12.4g} "
            f"{det_m / det_a:>10.3f} {err:>8.3f}"
        )
    lines.append("")
    lines.append(
        f"center vs corner voting, {args.trials} trials, "
        f"direction noise sigma={args.dir_sigma}"
    )
    wins = 0
    center_fracs = []
    corner_fracs = []
    for k in range(args.trials):
        c, q = synth.corner_center_trial(seed=args.seed + 1000 + k, sigma=args.dir_sigma)
        center_fracs.append(c)
        corner_fracs.append(q)
        wins += c > q
    lines.append(
        f"peak-cell vote fraction: center {np.mean(center_fracs):.4f}, "
        f"corner {np.mean(corner_fracs):.4f}; center wins {wins}/{args.trials}"
    )
    report = "\n".join(lines)
    print(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report + "\n")
    return 0


def cmd_heatmap(args) -> int:
    cfg = _load_config(args)
    weights = read_weights(args.weights)
    grid, _, _ = vote_grid(read_descriptor_map(args.map), weights, cfg)
    img = heatmap_image(grid)
    Image.fromarray(img, mode="L").save(args.output)
    print(
        f"wrote {img.shape[1]}x{img.shape[0]} heatmap ({grid.cell} px/cell, "
        f"peak {int(grid.votes.max(initial=0))} votes) to {args.output}"
    )
    return 0


# -- parser -------------------------------------------------------------------


def _add_config_arg(p) -> None:
    p.add_argument("--config", help="run configuration file (key=value lines)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voteloc",
        description="One-shot object localization by pairwise center voting "
        "over dense descriptor maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic scene files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--base-width", type=float, default=None)
    p.add_argument("--base-height", type=float, default=None)
    p.add_argument("--scale-min", type=float, default=0.7)
    p.add_argument("--scale-max", type=float, default=1.3)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "extract-targets", help="dump per-point training targets as TSV"
    )
    p.add_argument("--annotations", required=True)
    p.add_argument("--output", required=True)
    _add_config_arg(p)
    p.add_argument("maps", nargs="+")
    p.set_defaults(func=cmd_extract_targets)

    p = sub.add_parser("train", help="train the per-point predictor")
    p.add_argument("--annotations", required=True)
    p.add_argument("--output", required=True, help="weights file to write")
    p.add_argument("--loss-log", help="write per-epoch mean loss here")
    _add_config_arg(p)
    p.add_argument("maps", nargs="+")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("localize", help="locate the single object in each map")
    p.add_argument("--weights", required=True)
    p.add_argument("--output", help="write predictions JSON here")
    _add_config_arg(p)
    p.add_argument("maps", nargs="+")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("detect", help="detect multiple instances in each map")
    p.add_argument("--weights", required=True)
    p.add_argument("--output", help="write predictions JSON here")
    p.add_argument("--max-instances", type=int, default=10)
    p.add_argument("--min-score", type=float, default=None)
    _add_config_arg(p)
    p.add_argument("maps", nargs="+")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score predictions against annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--predictions", required=True, help="predictions JSON")
    p.add_argument("--mode", choices=("loc", "det"), default="loc")
    p.add_argument(
        "--thresholds", type=float, nargs="+", default=list(DEFAULT_THRESHOLDS)
    )
    p.add_argument("--output", help="write the report here as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "analyze-variance",
        help="compare analytic pair-vote covariance against Monte Carlo and "
        "center against corner voting",
    )
    p.add_argument("--sigma", type=float, default=0.005)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--dir-sigma", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_analyze_variance)

    p = sub.add_parser("heatmap", help="render the vote grid as a PNG")
    p.add_argument("--weights", required=True)
    p.add_argument("--output", required=True)
    _add_config_arg(p)
    p.add_argument("map")
    p.set_defaults(func=cmd_heatmap)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VotelocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
