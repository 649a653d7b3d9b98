"""Command line entry point: voteloc-extract."""

from __future__ import annotations

import argparse
import sys

from .errors import ExtractorError
from .job import TARGET_RESOLUTIONS, ExtractionJob
from .pipeline import run_job


def _resolution(text: str) -> tuple[int, int]:
    try:
        w, h = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if (w, h) not in TARGET_RESOLUTIONS:
        allowed = ", ".join(f"{a}x{b}" for a, b in TARGET_RESOLUTIONS)
        raise argparse.ArgumentTypeError(f"resolution must be one of {allowed}")
    return (w, h)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voteloc-extract",
        description="Extract dense descriptor maps from images or video for "
        "the voteloc localization engine.",
    )
    parser.add_argument("images", nargs="+", help="input image or video files")
    parser.add_argument("--weights", required=True, help="pretrained network checkpoint")
    parser.add_argument("--out-dir", required=True, help="directory for .odmp maps")
    parser.add_argument(
        "--resolution", type=_resolution, default=(640, 480),
        help="target WIDTHxHEIGHT (640x480 or 480x640; default 640x480)",
    )
    parser.add_argument(
        "--boxes", default=None,
        help="object boxes in source-image pixels: lines of 'frame_id cx cy w h'; "
        "emitted rescaled as annotations.txt",
    )
    parser.add_argument(
        "--augment", type=int, default=0, metavar="N",
        help="augmented variants per frame in addition to the clean one",
    )
    parser.add_argument("--blur", action="store_true", help="enable gaussian blur")
    parser.add_argument("--gauss-noise", action="store_true", help="enable additive gaussian noise")
    parser.add_argument("--iso-noise", action="store_true", help="enable sensor-style noise")
    parser.add_argument(
        "--brightness-contrast", action="store_true", help="enable brightness/contrast jitter"
    )
    parser.add_argument("--seed", type=int, default=0, help="augmentation seed")
    parser.add_argument(
        "--video-stride", type=int, default=1, metavar="K", help="keep every K-th video frame"
    )
    return parser


def main(argv=None) -> int:
    opts = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            images=tuple(opts.images),
            out_dir=opts.out_dir,
            weights_path=opts.weights,
            resolution=opts.resolution,
            augment_count=opts.augment,
            blur=opts.blur,
            gauss_noise=opts.gauss_noise,
            iso_noise=opts.iso_noise,
            brightness_contrast=opts.brightness_contrast,
            seed=opts.seed,
            boxes_path=opts.boxes,
            video_stride=opts.video_stride,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        written = run_job(job)
    except (ExtractorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(written)} descriptor maps to {job.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
