"""Job orchestration: frames in, descriptor maps and annotations out."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from .augment import augment_image
from .errors import UnreadableInput
from .formats import read_boxes, write_annotations, write_descriptor_map
from .job import ExtractionJob
from .network import dense_extract, load_network

VIDEO_SUFFIXES = {".avi", ".mp4", ".mov", ".mkv"}

# ITU-R 601 luma
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float32)


def _iter_frames(source, stride: int):
    """Yield (frame_id, rgb uint8) from an image file or a video container."""
    path = Path(source)
    if path.suffix.lower() in VIDEO_SUFFIXES:
        cap = cv2.VideoCapture(str(path))
        if not cap.isOpened():
            raise UnreadableInput(f"cannot open video: {path}")
        index = 0
        try:
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                if index % stride == 0:
                    yield f"{path.stem}_f{index:05d}", cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
                index += 1
        finally:
            cap.release()
        if index == 0:
            raise UnreadableInput(f"video has no decodable frames: {path}")
    else:
        try:
            with Image.open(path) as img:
                rgb = np.asarray(img.convert("RGB"))
        except (OSError, UnidentifiedImageError) as exc:
            raise UnreadableInput(f"cannot read image: {path} ({exc})") from None
        yield path.stem, rgb


def _to_gray(rgb: np.ndarray) -> np.ndarray:
    return (rgb.astype(np.float32) @ _LUMA) / 255.0


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_job(job: ExtractionJob) -> list[Path]:
    """Run extraction, returning the descriptor-map paths that were written.

    One map per (frame x augmentation variant); augment_count 0 writes
    exactly the clean frame.  Boxes given for a source frame are rescaled to
    the target resolution and repeated for its augmented variants (the
    augmentations are photometric).  A metadata.json records the checkpoint
    and settings that produced the maps.
    """
    net = load_network(job.weights_path)
    rng = np.random.default_rng(job.seed)
    source_boxes = read_boxes(job.boxes_path) if job.boxes_path else {}
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width, height = job.resolution

    written: list[Path] = []
    annotations: dict[str, list[tuple[float, float, float, float]]] = {}
    for source in job.images:
        for frame_id, rgb in _iter_frames(source, job.video_stride):
            sx = width / rgb.shape[1]
            sy = height / rgb.shape[0]
            rgb = cv2.resize(rgb, (width, height), interpolation=cv2.INTER_LINEAR)
            variants = [(frame_id, rgb)]
            for k in range(job.augment_count):
                variants.append((
                    f"{frame_id}_aug{k}",
                    augment_image(
                        rgb, rng,
                        blur=job.blur,
                        gauss_noise=job.gauss_noise,
                        iso_noise=job.iso_noise,
                        brightness_contrast=job.brightness_contrast,
                    ),
                ))
            for variant_id, image in variants:
                descriptors, scores = dense_extract(net, _to_gray(image))
                path = out_dir / f"{variant_id}.odmp"
                write_descriptor_map(path, descriptors, scores)
                written.append(path)
                if frame_id in source_boxes:
                    annotations[variant_id] = [
                        (cx * sx, cy * sy, w * sx, h * sy)
                        for cx, cy, w, h in source_boxes[frame_id]
                    ]

    if annotations:
        write_annotations(out_dir / "annotations.txt", annotations)
    metadata = {
        "weights": Path(job.weights_path).name,
        "weights_sha256": _sha256(job.weights_path),
        "resolution": [width, height],
        "augment_count": job.augment_count,
        "augmentations": [
            name
            for name, on in (
                ("blur", job.blur),
                ("gauss_noise", job.gauss_noise),
                ("iso_noise", job.iso_noise),
                ("brightness_contrast", job.brightness_contrast),
            )
            if on
        ],
        "seed": job.seed,
        "video_stride": job.video_stride,
        "maps": [p.name for p in written],
    }
    with open(out_dir / "metadata.json", "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
