"""Writers for the localization engine's on-disk interfaces.

Implemented from the published format contract, independently of the engine's
own code: a descriptor map is little-endian
``"ODMP" | version u16 (=1) | flags u16 (bit 0: scores) | height u32 |
width u32 | dim u32`` followed by the float32 row-major payload and the
optional float32 score plane; annotations are text lines
``frame_id cx cy w h [cx cy w h ...]``.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"ODMP"
VERSION = 1
HEADER = struct.Struct("<4sHHIII")


def write_descriptor_map(path, descriptors: np.ndarray, scores: np.ndarray | None = None) -> None:
    desc = np.ascontiguousarray(descriptors, dtype="<f4")
    if desc.ndim != 3:
        raise ValueError(f"descriptors must be (H, W, dim), got shape {desc.shape}")
    if not np.isfinite(desc).all():
        raise ValueError("descriptors contain non-finite values")
    height, width, dim = desc.shape
    flags = 0
    if scores is not None:
        scores = np.ascontiguousarray(scores, dtype="<f4")
        if scores.shape != (height, width):
            raise ValueError(f"scores shape {scores.shape} does not match ({height}, {width})")
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("scores must lie in [0, 1]")
        flags |= 1
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, flags, height, width, dim))
        fh.write(desc.tobytes())
        if scores is not None:
            fh.write(scores.tobytes())


def write_annotations(path, boxes_by_frame: dict[str, list[tuple[float, float, float, float]]]) -> None:
    lines = []
    for frame_id, boxes in boxes_by_frame.items():
        if not frame_id or frame_id.split() != [frame_id]:
            raise ValueError(f"frame id {frame_id!r} must be a single whitespace-free token")
        if not boxes:
            raise ValueError(f"frame {frame_id!r} has no boxes")
        parts = [frame_id]
        for cx, cy, w, h in boxes:
            if w <= 0 or h <= 0:
                raise ValueError(f"frame {frame_id!r}: box sides must be positive")
            parts.extend(repr(float(v)) for v in (cx, cy, w, h))
        lines.append(" ".join(parts))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_boxes(path) -> dict[str, list[tuple[float, float, float, float]]]:
    """Read user boxes in source-image pixels, same line format as
    annotations."""
    out: dict[str, list[tuple[float, float, float, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tokens = body.split()
            if len(tokens) < 5 or (len(tokens) - 1) % 4:
                raise ValueError(f"{path}:{lineno}: expected frame_id plus groups of 4 numbers")
            frame_id = tokens[0]
            if frame_id in out:
                raise ValueError(f"{path}:{lineno}: duplicate frame id {frame_id!r}")
            try:
                values = [float(t) for t in tokens[1:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric box value") from None
            boxes = []
            for i in range(0, len(values), 4):
                cx, cy, w, h = values[i : i + 4]
                if w <= 0 or h <= 0:
                    raise ValueError(f"{path}:{lineno}: box sides must be positive")
                boxes.append((cx, cy, w, h))
            out[frame_id] = boxes
    return out
