"""Synthetic oracles and scenes.

Three independent test beds live here: a Monte-Carlo estimate of the pair-vote
covariance (the oracle for the analytic law), seeded noisy direction fields
aimed at a box center or corner (the voting-quality experiment), and fully
synthetic descriptor scenes whose descriptors deterministically encode
normalized object coordinates, so a model trained on them has an exactly
recoverable target.  No external data or model is involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoxOutOfBounds, DegenerateConfiguration, DegeneratePoint
from .geometry import DEGENERATE_EPS, BBox, PairGeometry
from .sampling import DescriptorMap, sample_pairs
from .voting import VoteField, accumulate

DEFAULT_EMBED_SEED = 7
MIN_MC_SAMPLES = 10_000


@dataclass(frozen=True)
class SyntheticScene:
    map: DescriptorMap
    boxes: tuple[BBox, ...]
    noise_sigma: float


def _ray_params(g: PairGeometry, alpha, beta):
    """(t1, t2, denom) for rays from the origin at ``alpha`` and from (a, b)
    at ``beta``; vectorized over the angle arrays."""
    denom = np.sin(beta - alpha)
    t1 = (g.a * np.sin(beta) - g.b * np.cos(beta)) / denom
    t2 = (g.a * np.sin(alpha) - g.b * np.cos(alpha)) / denom
    return t1, t2, denom


def monte_carlo_cov(g: PairGeometry, n: int, seed: int = 0) -> np.ndarray:
    """Sample covariance of the pair vote under angular noise.

    Draws n pairs (alpha + e1, beta + e2) with e ~ Normal(0, sigma^2),
    intersects, and returns the 2x2 sample covariance of the surviving
    intersections.  Draws that are near-parallel or intersect behind either
    ray are skipped; losing more than half of them raises
    DegenerateConfiguration.
    """
    if n < MIN_MC_SAMPLES:
        raise ValueError(f"n must be >= {MIN_MC_SAMPLES} for a stable estimate")
    t1, t2, denom = _ray_params(g, g.alpha, g.beta)
    if abs(denom) < 1e-9 or t1 <= 0 or t2 <= 0:
        raise ValueError("noiseless rays must intersect forward of both points")
    if g.sigma == 0.0:
        return np.zeros((2, 2))
    rng = np.random.default_rng(seed)
    alpha = g.alpha + rng.normal(0.0, g.sigma, n)
    beta = g.beta + rng.normal(0.0, g.sigma, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1, t2, denom = _ray_params(g, alpha, beta)
    ok = (np.abs(denom) >= 1e-9) & (t1 >= 0) & (t2 >= 0)
    if ok.sum() < n / 2:
        raise DegenerateConfiguration(
            f"{n - int(ok.sum())} of {n} draws rejected; geometry too unstable"
        )
    pts = t1[ok, None] * np.stack([np.cos(alpha[ok]), np.sin(alpha[ok])], axis=1)
    return np.cov(pts.T)


def gen_direction_field(
    box: BBox,
    points: np.ndarray,
    sigma: float,
    target: str = "center",
    seed: int = 0,
) -> VoteField:
    """Noisy directions from each point toward the box center or its top-left
    corner: the exact direction rotated by Normal(0, sigma^2) radians.

    Relative sizes are always the center-based ones; corner mode only swaps
    the direction target, isolating the effect measured by the voting-quality
    experiment.
    """
    if target not in ("center", "corner"):
        raise ValueError(f"target must be 'center' or 'corner', got {target!r}")
    pts = np.asarray(points, dtype=np.float64)
    goal = (
        np.array([box.cx, box.cy]) if target == "center" else np.array([box.x0, box.y0])
    )
    delta = goal - pts
    dist = np.linalg.norm(delta, axis=1)
    if (dist < DEGENERATE_EPS).any():
        raise DegeneratePoint("a point coincides with the direction target")
    angles = np.arctan2(delta[:, 1], delta[:, 0])
    if sigma > 0:
        angles = angles + np.random.default_rng(seed).normal(0.0, sigma, len(pts))
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    sizes = (pts - np.array([box.cx, box.cy])) / np.array([box.w, box.h])
    return VoteField(dirs, sizes)


@dataclass(frozen=True)
class CoordEmbedding:
    """Fixed seeded feature map from normalized object coordinates to a
    unit-norm descriptor: sin of random linear projections.  Smooth,
    deterministic, and rich enough that the coordinates are recoverable."""

    freq: np.ndarray
    phase: np.ndarray

    @classmethod
    def create(
        cls, dim: int, seed: int = DEFAULT_EMBED_SEED, freq_scale: float = 5.0
    ) -> "CoordEmbedding":
        rng = np.random.default_rng(seed)
        return cls(
            freq=rng.normal(0.0, freq_scale, (dim, 2)),
            phase=rng.uniform(0.0, 2.0 * np.pi, dim),
        )

    @property
    def dim(self) -> int:
        return self.freq.shape[0]

    def embed(self, q: np.ndarray) -> np.ndarray:
        """(n, 2) normalized coordinates -> (n, dim) unit-norm descriptors."""
        z = np.sin(np.asarray(q, dtype=np.float64) @ self.freq.T + self.phase)
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        return z / np.maximum(norms, 1e-12)


def gen_scene(
    height: int,
    width: int,
    boxes,
    descriptor_dim: int,
    noise: float,
    seed: int,
    embedding: CoordEmbedding | None = None,
) -> SyntheticScene:
    """Synthetic descriptor scene: box pixels carry the embedding of their
    normalized object coordinates plus Gaussian noise, background pixels carry
    unit-normalized pure noise.  Same seed, same bits.
    """
    boxes = tuple(boxes)
    for box in boxes:
        if box.x0 < 0 or box.y0 < 0 or box.x1 > width or box.y1 > height:
            raise BoxOutOfBounds(f"box {box} extends outside {width}x{height}")
    if embedding is None:
        embedding = CoordEmbedding.create(descriptor_dim, DEFAULT_EMBED_SEED)
    if embedding.dim != descriptor_dim:
        raise ValueError(
            f"embedding dim {embedding.dim} != descriptor_dim {descriptor_dim}"
        )
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((height, width, descriptor_dim))
    data /= np.maximum(np.linalg.norm(data, axis=2, keepdims=True), 1e-12)
    for box in boxes:
        xs = np.arange(math.ceil(box.x0), math.floor(box.x1) + 1)
        ys = np.arange(math.ceil(box.y0), math.floor(box.y1) + 1)
        xs = xs[(xs >= 0) & (xs < width)]
        ys = ys[(ys >= 0) & (ys < height)]
        gx, gy = np.meshgrid(xs, ys)
        q = np.stack(
            [(gx.ravel() - box.cx) / box.w, (gy.ravel() - box.cy) / box.h], axis=1
        )
        emb = embedding.embed(q)
        if noise > 0:
            emb = emb + rng.standard_normal(emb.shape) * (
                noise / math.sqrt(descriptor_dim)
            )
        data[gy.ravel(), gx.ravel()] = emb
    return SyntheticScene(
        DescriptorMap(data.astype(np.float32)), boxes, float(noise)
    )


def make_scene_set(
    count: int,
    height: int = 480,
    width: int = 640,
    descriptor_dim: int = 32,
    noise: float = 0.05,
    seed: int = 0,
    base_size: tuple[float, float] = (250.0, 150.0),
    scale_range: tuple[float, float] = (0.7, 1.3),
    margin: float = 4.0,
    embedding: CoordEmbedding | None = None,
    scale: float = 1.0,
) -> list[SyntheticScene]:
    """Single-object scene family: one box per scene with a fixed aspect
    ratio, randomized scale and position.  The fixed aspect keeps the
    direction a pure function of the descriptor (which encodes only
    normalized coordinates), so the family is learnable end to end.

    ``scale`` regenerates the same family at another resolution: every draw
    sits at the same relative position, so scene k at scale 1.5 is scene k
    with its geometry multiplied by exactly 1.5 (image dims rounded).
    """
    if embedding is None:
        embedding = CoordEmbedding.create(descriptor_dim, DEFAULT_EMBED_SEED)
    height = round(height * scale)
    width = round(width * scale)
    base_size = (base_size[0] * scale, base_size[1] * scale)
    margin *= scale
    rng = np.random.default_rng(seed)
    scenes = []
    for _ in range(count):
        s = rng.uniform(*scale_range)
        w, h = base_size[0] * s, base_size[1] * s
        cx = rng.uniform(margin + w / 2, width - margin - w / 2)
        cy = rng.uniform(margin + h / 2, height - margin - h / 2)
        scene_seed = int(rng.integers(0, 2**31 - 1))
        scenes.append(
            gen_scene(
                height, width, [BBox(cx, cy, w, h)], descriptor_dim, noise,
                scene_seed, embedding,
            )
        )
    return scenes


def make_multi_instance_scenes(
    count: int,
    instances: int = 3,
    height: int = 480,
    width: int = 640,
    descriptor_dim: int = 32,
    noise: float = 0.05,
    seed: int = 0,
    base_size: tuple[float, float] = (150.0, 90.0),
    scale_range: tuple[float, float] = (0.85, 1.15),
    embedding: CoordEmbedding | None = None,
) -> list[SyntheticScene]:
    """Scenes with several well-separated instances of the same object: one
    instance per vertical band, jittered within its band so boxes never
    overlap and vote peaks stay distinct."""
    if embedding is None:
        embedding = CoordEmbedding.create(descriptor_dim, DEFAULT_EMBED_SEED)
    rng = np.random.default_rng(seed)
    band = width / instances
    scenes = []
    for _ in range(count):
        boxes = []
        for k in range(instances):
            s = rng.uniform(*scale_range)
            w, h = base_size[0] * s, base_size[1] * s
            lo = k * band + w / 2 + 2.0
            hi = (k + 1) * band - w / 2 - 2.0
            if lo >= hi:
                raise ValueError("instances do not fit their bands; shrink base_size")
            cx = rng.uniform(lo, hi)
            cy = rng.uniform(h / 2 + 2.0, height - h / 2 - 2.0)
            boxes.append(BBox(cx, cy, w, h))
        scene_seed = int(rng.integers(0, 2**31 - 1))
        scenes.append(
            gen_scene(height, width, boxes, descriptor_dim, noise, scene_seed, embedding)
        )
    return scenes


def corner_center_trial(
    seed: int,
    height: int = 480,
    width: int = 640,
    box: BBox | None = None,
    n_points: int = 500,
    n_pairs: int = 5000,
    sigma: float = 0.2,
    cell: int = 9,
) -> tuple[float, float]:
    """One seeded voting-quality trial: identical object points, pairs, and
    noise draws, voting once toward the box center and once toward its
    top-left corner.

    Points are sampled on the object (inside the box).  Seen from the center
    they surround the target, so pair rays meet at well-spread angles; seen
    from the corner they all sit in one quadrant, so rays are mutually
    near-parallel and intersections smear along them.  Returns the peak-cell
    vote fraction (max cell votes / total landed votes) for (center, corner);
    the center fraction should win.
    """
    if box is None:
        box = BBox(width / 2, height / 2, 200.0, 120.0)
    rng = np.random.default_rng(seed)
    pts = rng.uniform((box.x0, box.y0), (box.x1, box.y1), (n_points, 2))
    pairs = sample_pairs(pts, np.inf, n_pairs, rng_seed=seed + 1)
    out = []
    for target in ("center", "corner"):
        field = gen_direction_field(box, pts, sigma, target, seed=seed + 2)
        grid = accumulate(pts, field, pairs, height, width, cell)
        total = int(grid.votes.sum())
        out.append(int(grid.votes.max()) / total if total else 0.0)
    return out[0], out[1]


def dual_texture_scores(
    height: int,
    width: int,
    dense_spacing: int = 8,
    sparse_spacing: int = 24,
    peak: float = 0.9,
    base: float = 0.05,
) -> np.ndarray:
    """Score field whose left half carries a dense grid of keypoint peaks and
    whose right half a sparse one: the test bed for comparing stratified
    sampling against score-driven sparse keypoints."""
    scores = np.full((height, width), base, dtype=np.float32)
    half = width // 2
    for x0, x1, spacing in ((0, half, dense_spacing), (half, width, sparse_spacing)):
        ys = np.arange(spacing // 2, height, spacing)
        xs = np.arange(x0 + spacing // 2, x1, spacing)
        gx, gy = np.meshgrid(xs, ys)
        scores[gy, gx] = peak
    return scores
