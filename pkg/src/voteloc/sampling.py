"""Voting-point production: stratified equalized sampling, sparse keypoint
extraction, descriptor interpolation, and distance-bounded pair sampling.

Every sampler takes an explicit seed, so identical inputs always produce
identical outputs and concurrent calls are independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ImageTooSmall, InsufficientPoints, NoScoreMap, OutOfBounds
from .geometry import Point2

PAIR_REJECTION_FACTOR = 100  # give up after this many rejections per requested pair


@dataclass(frozen=True)
class DescriptorMap:
    """Dense per-pixel descriptor field, optionally with a keypoint score field.

    ``data`` has shape (height, width, dim), float32, row-major.  ``scores``
    (when present) has shape (height, width) with values in [0, 1].
    """

    data: np.ndarray
    scores: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[2] < 1:
            raise ValueError(f"descriptor data must be (H, W, dim), got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("descriptor data contains non-finite values")
        if self.scores is not None:
            if self.scores.shape != self.data.shape[:2]:
                raise ValueError("score field shape does not match descriptor field")
            if self.scores.size and (self.scores.min() < 0 or self.scores.max() > 1):
                raise ValueError("score values must lie in [0, 1]")
            if not np.isfinite(self.scores).all():
                raise ValueError("score field contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class SampledPoint:
    """A voting point with its interpolated descriptor."""

    pos: Point2
    descriptor: np.ndarray


@dataclass(frozen=True)
class SamplerConfig:
    strata_divisor: int = 50
    pair_distance_fraction: float = 0.25
    pair_count: int = 10000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strata_divisor < 1:
            raise ValueError("strata_divisor must be >= 1")
        if not (0 < self.pair_distance_fraction <= 1):
            raise ValueError("pair_distance_fraction must be in (0, 1]")
        if self.pair_count < 1:
            raise ValueError("pair_count must be >= 1")


def strata_size(height: int, width: int, divisor: int) -> int:
    """Stratum side in pixels: the smaller image side divided by ``divisor``,
    floored.  Also used as the accumulator-grid cell size."""
    side = min(height, width)
    if side < divisor:
        raise ImageTooSmall(f"min image side {side} < divisor {divisor}")
    return side // divisor


def stratified_sample(height: int, width: int, stratum: int, rng_seed: int) -> np.ndarray:
    """One jittered point per complete stratum.

    The image is divided into ``stratum``-sized square cells; partial cells at
    the right/bottom edges are dropped so every retained cell carries exactly
    one vote point.  Point (i, j) is the cell center jittered by a uniform
    offset in [-stratum/2, stratum/2) on each axis, so it stays inside its own
    cell.  Returns an (n, 2) float array of (x, y), row-major over cells.
    """
    rows = height // stratum
    cols = width // stratum
    rng = np.random.default_rng(rng_seed)
    jitter = rng.uniform(-stratum / 2, stratum / 2, size=(rows * cols, 2))
    jj, ii = np.meshgrid(np.arange(cols), np.arange(rows))
    centers = np.stack([(jj.ravel() + 0.5), (ii.ravel() + 0.5)], axis=1) * stratum
    return centers + jitter


def clamp_to_map(points: np.ndarray, height: int, width: int) -> np.ndarray:
    """Clamp (x, y) points into the interpolation domain [0, W-1] x [0, H-1].

    Stratified points may land in the half-open sliver [W-1, W) when the
    strata tile the image exactly; clamping moves them by under a pixel.
    """
    out = np.array(points, dtype=float, copy=True)
    out[:, 0] = np.clip(out[:, 0], 0.0, width - 1.0)
    out[:, 1] = np.clip(out[:, 1], 0.0, height - 1.0)
    return out


def interpolate_descriptor(dmap: DescriptorMap, p: Point2) -> np.ndarray:
    """Bilinear interpolation of the four surrounding pixel descriptors,
    renormalized to unit L2 norm.

    Descriptor fields are unit-norm per pixel and the predictor is trained on
    unit-norm inputs, so the blend is renormalized.  Raises OutOfBounds
    outside [0, W-1] x [0, H-1].
    """
    if not (0 <= p.x <= dmap.width - 1 and 0 <= p.y <= dmap.height - 1):
        raise OutOfBounds(f"point ({p.x}, {p.y}) outside map {dmap.width}x{dmap.height}")
    return interpolate_many(dmap, np.array([[p.x, p.y]]))[0]


def interpolate_many(dmap: DescriptorMap, points: np.ndarray) -> np.ndarray:
    """Vectorized bilinear interpolation; same contract as
    interpolate_descriptor for every row of ``points``."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    if (x < 0).any() or (y < 0).any() or (x > dmap.width - 1).any() or (y > dmap.height - 1).any():
        raise OutOfBounds("point outside the descriptor map")
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    # at the far edge the fractional weight is 0; clamp the +1 index
    x1 = np.minimum(x0 + 1, dmap.width - 1)
    y1 = np.minimum(y0 + 1, dmap.height - 1)
    tx = (x - x0)[:, None].astype(dmap.data.dtype)
    ty = (y - y0)[:, None].astype(dmap.data.dtype)
    d = dmap.data
    blend = (
        d[y0, x0] * (1 - tx) * (1 - ty)
        + d[y0, x1] * tx * (1 - ty)
        + d[y1, x0] * (1 - tx) * ty
        + d[y1, x1] * tx * ty
    )
    norms = np.linalg.norm(blend, axis=1, keepdims=True)
    return blend / np.maximum(norms, 1e-12)


def sparse_keypoints(
    dmap: DescriptorMap,
    nms_radius: float,
    threshold: float,
    max_points: int,
) -> np.ndarray:
    """Sparse voting points from the keypoint score field (ablation baseline).

    Local maxima above ``threshold`` are kept greedily in descending score,
    each suppressing later candidates within ``nms_radius`` (Euclidean), up to
    ``max_points``.  Returns an (n, 2) array of (x, y) pixel coordinates.
    """
    if dmap.scores is None:
        raise NoScoreMap("descriptor map carries no score field")
    s = dmap.scores
    h, w = s.shape
    padded = np.full((h + 2, w + 2), -np.inf, dtype=s.dtype)
    padded[1:-1, 1:-1] = s
    neigh = np.stack(
        [padded[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]
         for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    ).max(axis=0)
    # strict maxima only: plateaus (ties with a neighbor) are not distinctive
    ys, xs = np.nonzero((s > threshold) & (s > neigh))
    if len(xs) == 0:
        return np.empty((0, 2))
    order = np.lexsort((xs, ys, -s[ys, xs]))
    cand = np.stack([xs[order], ys[order]], axis=1).astype(float)
    kept: list[np.ndarray] = []
    for c in cand:
        if len(kept) == max_points:
            break
        if all(np.hypot(*(c - k)) > nms_radius for k in kept):
            kept.append(c)
    return np.array(kept) if kept else np.empty((0, 2))


def sample_pairs(
    points: np.ndarray,
    max_dist: float,
    count: int,
    rng_seed: int,
) -> np.ndarray:
    """Uniformly sample ``count`` index pairs (with replacement), rejecting
    self-pairs and pairs separated by more than ``max_dist``.

    Pairs are returned canonicalized as (low, high).  Sampling is
    deterministic per seed and gives up after 100 * count rejections,
    returning whatever was accepted by then.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise InsufficientPoints(f"need at least 2 points, got {n}")
    rng = np.random.default_rng(rng_seed)
    budget = PAIR_REJECTION_FACTOR * count
    accepted: list[np.ndarray] = []
    got = 0
    rejected = 0
    while got < count and rejected < budget:
        m = count - got
        i = rng.integers(0, n, size=m)
        j = rng.integers(0, n, size=m)
        d = np.linalg.norm(pts[i] - pts[j], axis=1)
        ok = (i != j) & (d <= max_dist)
        rejected += int(m - ok.sum())
        if ok.any():
            batch = np.stack([i[ok], j[ok]], axis=1)
            accepted.append(batch)
            got += len(batch)
    if not accepted:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate(accepted)[:count]
    return np.sort(pairs, axis=1).astype(np.int64)
