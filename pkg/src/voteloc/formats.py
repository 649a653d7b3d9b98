"""On-disk formats: descriptor maps, model weights, annotations.

Both binary formats are little-endian with a fixed-size header and a raw
float32 payload, so they are trivial to produce from any language.  Readers
validate eagerly and name the offending offset; a truncated file always fails
the exact-size check before any payload is touched.

Descriptor map ("ODMP"):
    magic 4s | version u16 (=1) | flags u16 (bit 0: scores present) |
    height u32 | width u32 | dim u32 | H*W*D float32 row-major (row, column,
    channel) | [H*W float32 scores]

Weights ("OLWT"):
    magic 4s | version u16 (=1) | dim u32 | hidden u32 | blocks u32 |
    proj_w (hidden*dim) | proj_b (hidden) | per block: W (hidden*hidden),
    bias (hidden) | head_w (4*hidden) | head_b (4), all float32 row-major

Annotations: text, one frame per line: "frame_id cx cy w h [cx cy w h ...]".
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, InvalidSize
from .geometry import BBox
from .model import MLPWeights
from .sampling import DescriptorMap

MAP_MAGIC = b"ODMP"
WEIGHTS_MAGIC = b"OLWT"
FORMAT_VERSION = 1
_MAP_HEADER = struct.Struct("<4sHHIII")
_WEIGHTS_HEADER = struct.Struct("<4sHIII")
_F4 = np.dtype("<f4")


def _check_header(data: bytes, header: struct.Struct, magic: bytes, path) -> tuple:
    if len(data) < header.size:
        raise FormatError(
            f"{path}: truncated header, {header.size} bytes required, got {len(data)}"
        )
    fields = header.unpack_from(data)
    if fields[0] != magic:
        raise FormatError(f"{path}: bad magic {fields[0]!r} at offset 0")
    if fields[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {fields[1]} at offset 4")
    return fields


def write_descriptor_map(path, dmap: DescriptorMap) -> None:
    flags = 1 if dmap.scores is not None else 0
    with open(path, "wb") as fh:
        fh.write(
            _MAP_HEADER.pack(
                MAP_MAGIC, FORMAT_VERSION, flags, dmap.height, dmap.width, dmap.dim
            )
        )
        fh.write(np.ascontiguousarray(dmap.data, dtype=_F4).tobytes())
        if dmap.scores is not None:
            fh.write(np.ascontiguousarray(dmap.scores, dtype=_F4).tobytes())


def read_descriptor_map(path) -> DescriptorMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, version, flags, height, width, dim = _check_header(
        blob, _MAP_HEADER, MAP_MAGIC, path
    )
    if flags & ~1:
        raise FormatError(f"{path}: unknown flag bits {flags:#06x} at offset 6")
    if height == 0 or width == 0 or dim == 0:
        raise FormatError(f"{path}: zero dimension in header at offset 8")
    body = height * width * dim * 4
    expected = _MAP_HEADER.size + body + (height * width * 4 if flags & 1 else 0)
    if len(blob) != expected:
        raise FormatError(f"{path}: file size {len(blob)} != expected {expected}")
    data = (
        np.frombuffer(blob, dtype=_F4, count=height * width * dim, offset=_MAP_HEADER.size)
        .reshape(height, width, dim)
        .astype(np.float32, copy=False)
    )
    if not np.isfinite(data).all():
        raise FormatError(f"{path}: non-finite descriptor values")
    scores = None
    if flags & 1:
        scores = (
            np.frombuffer(blob, dtype=_F4, count=height * width, offset=_MAP_HEADER.size + body)
            .reshape(height, width)
            .astype(np.float32, copy=False)
        )
        if not np.isfinite(scores).all():
            raise FormatError(f"{path}: non-finite score values")
        if scores.min() < 0.0 or scores.max() > 1.0:
            raise FormatError(f"{path}: scores outside [0, 1]")
    return DescriptorMap(data, scores)


def _weight_arrays(w: MLPWeights):
    yield w.proj_w
    yield w.proj_b
    for k in range(w.blocks):
        yield w.block_w[k]
        yield w.block_b[k]
    yield w.head_w
    yield w.head_b


def write_weights(path, w: MLPWeights) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _WEIGHTS_HEADER.pack(WEIGHTS_MAGIC, FORMAT_VERSION, w.dim, w.hidden, w.blocks)
        )
        for arr in _weight_arrays(w):
            fh.write(np.ascontiguousarray(arr, dtype=_F4).tobytes())


def read_weights(path) -> MLPWeights:
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, version, dim, hidden, blocks = _check_header(
        blob, _WEIGHTS_HEADER, WEIGHTS_MAGIC, path
    )
    if dim == 0 or hidden == 0 or blocks == 0:
        raise FormatError(f"{path}: zero architecture field in header at offset 6")
    count = hidden * dim + hidden + blocks * (hidden * hidden + hidden) + 4 * hidden + 4
    expected = _WEIGHTS_HEADER.size + count * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: file size {len(blob)} != expected {expected}")
    flat = np.frombuffer(blob, dtype=_F4, offset=_WEIGHTS_HEADER.size).astype(
        np.float32, copy=False
    )
    if not np.isfinite(flat).all():
        raise FormatError(f"{path}: non-finite parameter values")
    pos = 0

    def take(*shape) -> np.ndarray:
        nonlocal pos
        n = int(np.prod(shape))
        out = flat[pos : pos + n].reshape(shape)
        pos += n
        return out

    proj_w = take(hidden, dim)
    proj_b = take(hidden)
    block_w = np.empty((blocks, hidden, hidden), dtype=np.float32)
    block_b = np.empty((blocks, hidden), dtype=np.float32)
    for k in range(blocks):
        block_w[k] = take(hidden, hidden)
        block_b[k] = take(hidden)
    head_w = take(4, hidden)
    head_b = take(4)
    return MLPWeights(proj_w, proj_b, block_w, block_b, head_w, head_b)


def write_annotations(path, boxes_by_frame: dict[str, list[BBox]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame_id, boxes in boxes_by_frame.items():
            if not boxes:
                raise ValueError(f"frame {frame_id!r} has no boxes")
            if any(ch.isspace() for ch in frame_id):
                raise ValueError(f"frame id {frame_id!r} contains whitespace")
            parts = [frame_id]
            for box in boxes:
                parts.extend(repr(float(v)) for v in (box.cx, box.cy, box.w, box.h))
            fh.write(" ".join(parts) + "\n")


def read_annotations(path) -> dict[str, list[BBox]]:
    out: dict[str, list[BBox]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            tokens = body.split()
            if len(tokens) < 5 or (len(tokens) - 1) % 4 != 0:
                raise FormatError(
                    f"{path}:{lineno}: expected frame id plus groups of 4 numbers, "
                    f"got {len(tokens)} tokens"
                )
            frame_id = tokens[0]
            if frame_id in out:
                raise FormatError(f"{path}:{lineno}: duplicate frame id {frame_id!r}")
            try:
                values = [float(t) for t in tokens[1:]]
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric box value") from None
            boxes = []
            for i in range(0, len(values), 4):
                try:
                    boxes.append(BBox(*values[i : i + 4]))
                except InvalidSize as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from None
            out[frame_id] = boxes
    return out
