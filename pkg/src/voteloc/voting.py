"""Vote accumulation and box extraction.

Per-point predictions are turned into boxes by intersecting sampled point
pairs, histogramming the intersections on a grid downsampled by the stratum
size, co-accumulating size estimates, and reading off the peak (localization)
or the NMS peaks (multi-instance detection).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as _model
from ._kernels import accumulate_pairs
from .config import RunConfig
from .errors import EmptyGrid, NoSizeEvidence
from .geometry import ABS_SIZE_UNIT, SIZE_SUPPRESS_EPS, BBox, Point2
from .sampling import (
    DescriptorMap,
    clamp_to_map,
    interpolate_many,
    sample_pairs,
    strata_size,
    stratified_sample,
)

MIN_BOX_SIDE = 1e-3  # floor for degenerate size estimates, px


@dataclass(frozen=True)
class VoteField:
    """Per-sampled-point predictions: unit directions and relative sizes,
    both (n, 2) float arrays aligned with the sampled points."""

    dirs: np.ndarray
    sizes: np.ndarray

    def __post_init__(self) -> None:
        if self.dirs.shape != self.sizes.shape or self.dirs.ndim != 2:
            raise ValueError("dirs and sizes must both be (n, 2)")
        norms = np.linalg.norm(self.dirs, axis=1)
        if len(norms) and np.abs(norms - 1.0).max() > 1e-5:
            raise ValueError("directions must be unit-norm")


@dataclass(frozen=True)
class Detection:
    box: BBox
    score: float


@dataclass(frozen=True)
class AccumulatorGrid:
    """Downsampled center-vote histogram with co-accumulated size estimates.

    ``votes[r, c]`` counts pair intersections landing in the cell; each
    intersection's two endpoints add up to one size estimate per axis into
    ``size_sum``/``size_count`` at the same cell.
    """

    cell: int
    height: int
    width: int
    votes: np.ndarray
    size_sum: np.ndarray
    size_count: np.ndarray

    @property
    def rows(self) -> int:
        return self.votes.shape[0]

    @property
    def cols(self) -> int:
        return self.votes.shape[1]

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        return ((c + 0.5) * self.cell, (r + 0.5) * self.cell)


def accumulate(
    points: np.ndarray,
    field: VoteField,
    pairs: np.ndarray,
    height: int,
    width: int,
    cell: int,
    ray_check: str = "both",
    absolute_size: bool = False,
) -> AccumulatorGrid:
    """Histogram pair-intersection votes on a grid of ``cell``-sized cells.

    Intersections behind a voting ray or outside the image are dropped.
    """
    if cell < 1:
        raise ValueError("grid cell must be >= 1 px")
    if ray_check not in ("one", "both"):
        raise ValueError(f"ray_check must be 'one' or 'both', got {ray_check!r}")
    rows = -(-height // cell)
    cols = -(-width // cell)
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    dirs = np.ascontiguousarray(np.asarray(field.dirs, dtype=np.float64))
    sizes = np.asarray(field.sizes, dtype=np.float64)
    if absolute_size:
        sizes = sizes * ABS_SIZE_UNIT  # predictions are in ABS_SIZE_UNIT pixels
    sizes = np.ascontiguousarray(sizes)
    idx = np.ascontiguousarray(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    votes, size_sum, size_count = accumulate_pairs(
        pts, dirs, sizes, idx, cell, rows, cols, float(height), float(width),
        ray_check == "both", absolute_size, SIZE_SUPPRESS_EPS,
    )
    return AccumulatorGrid(cell, height, width, votes, size_sum, size_count)


def _window(grid: AccumulatorGrid, r: int, c: int) -> tuple[slice, slice]:
    return (
        slice(max(r - 1, 0), min(r + 2, grid.rows)),
        slice(max(c - 1, 0), min(c + 2, grid.cols)),
    )


def _refine(grid: AccumulatorGrid, r: int, c: int, with_size: bool = True):
    """Sub-cell center (vote-weighted centroid of the 3x3 window) and the
    window-averaged size at a peak cell."""
    win = _window(grid, r, c)
    w = grid.votes[win].astype(np.float64)
    rs, cs = np.mgrid[win[0], win[1]]
    total = w.sum()
    cx = float(((cs + 0.5) * grid.cell * w).sum() / total)
    cy = float(((rs + 0.5) * grid.cell * w).sum() / total)
    if not with_size:
        return Point2(cx, cy), None
    ssum = grid.size_sum[win].reshape(-1, 2).sum(axis=0)
    scount = grid.size_count[win].reshape(-1, 2).sum(axis=0)
    if scount[0] == 0 or scount[1] == 0:
        axis = "x" if scount[0] == 0 else "y"
        raise NoSizeEvidence(f"no {axis}-size estimates near peak cell ({r}, {c})")
    return Point2(cx, cy), (float(ssum[0] / scount[0]), float(ssum[1] / scount[1]))


def _argmax_cell(votes: np.ndarray) -> tuple[int, int]:
    # flat argmax on row-major data = smallest row, then smallest column
    flat = int(np.argmax(votes))
    return flat // votes.shape[1], flat % votes.shape[1]


def find_peak(grid: AccumulatorGrid) -> tuple[Point2, tuple[float, float], float]:
    """Argmax cell refined over its 3x3 neighborhood.

    Returns (center, (w, h), score) where score is the peak cell's vote
    count.  Raises EmptyGrid with no votes, NoSizeEvidence when an axis has
    no size estimate in the window.
    """
    if grid.votes.max(initial=0) <= 0:
        raise EmptyGrid("all accumulator cells are empty")
    r, c = _argmax_cell(grid.votes)
    center, size = _refine(grid, r, c)
    return center, size, float(grid.votes[r, c])


def predict_field(
    weights: _model.MLPWeights, descriptors: np.ndarray
) -> tuple[np.ndarray, VoteField]:
    """Run the predictor over interpolated descriptors, dropping points whose
    raw direction is too small to normalize.  Returns (valid mask, field)."""
    dirs, sizes, valid = _model.predict_batch(weights, descriptors)
    return valid, VoteField(dirs[valid], sizes[valid])


def vote_grid(
    dmap: DescriptorMap, weights: _model.MLPWeights, cfg: RunConfig
) -> tuple[AccumulatorGrid, np.ndarray, VoteField]:
    """Shared pipeline front: stratified points -> descriptors -> predictions
    -> bounded pairs -> accumulated grid."""
    cell = strata_size(dmap.height, dmap.width, cfg.strata_divisor)
    raw = stratified_sample(dmap.height, dmap.width, cell, cfg.sample_seed)
    pts = clamp_to_map(raw, dmap.height, dmap.width)
    descriptors = interpolate_many(dmap, pts)
    valid, field = predict_field(weights, descriptors)
    pts = pts[valid]
    max_dist = cfg.pair_distance_fraction * max(dmap.height, dmap.width)
    pairs = sample_pairs(pts, max_dist, cfg.pair_count, cfg.pair_seed)
    grid = accumulate(
        pts, field, pairs, dmap.height, dmap.width, cell,
        ray_check=cfg.ray_check, absolute_size=cfg.absolute_size,
    )
    return grid, pts, field


def _size_from_center(
    points: np.ndarray, sizes: np.ndarray, center: Point2, absolute_size: bool
) -> tuple[float, float]:
    """Post-hoc size aggregation: average per-axis estimates of every sampled
    point against the final center (the flag-selected alternative to co-voted
    accumulation)."""
    out = []
    for axis, c in ((0, center.x), (1, center.y)):
        if absolute_size:
            est = sizes[:, axis] * ABS_SIZE_UNIT
        else:
            m = np.abs(sizes[:, axis]) >= SIZE_SUPPRESS_EPS
            if not m.any():
                raise NoSizeEvidence(f"no {'xy'[axis]}-size estimates at the peak")
            est = (points[m, axis] - c) / sizes[m, axis]
        out.append(float(est.mean()))
    return out[0], out[1]


def _detection(center: Point2, size: tuple[float, float], score: float) -> Detection:
    w = max(size[0], MIN_BOX_SIDE)
    h = max(size[1], MIN_BOX_SIDE)
    return Detection(BBox(center.x, center.y, w, h), score)


def localize(dmap: DescriptorMap, weights: _model.MLPWeights, cfg: RunConfig) -> Detection:
    """Full single-object localization: the object is assumed present and the
    strongest vote peak is returned as its box."""
    grid, pts, field = vote_grid(dmap, weights, cfg)
    if cfg.size_aggregation == "post_hoc":
        if grid.votes.max(initial=0) <= 0:
            raise EmptyGrid("all accumulator cells are empty")
        r, c = _argmax_cell(grid.votes)
        center, _ = _refine(grid, r, c, with_size=False)
        size = _size_from_center(pts, field.sizes, center, cfg.absolute_size)
        score = float(grid.votes[r, c])
    else:
        center, size, score = find_peak(grid)
    return _detection(center, size, score)


def detect(
    dmap: DescriptorMap,
    weights: _model.MLPWeights,
    cfg: RunConfig,
    nms_cells: int | None = None,
    min_score: float | None = None,
    max_instances: int = 10,
) -> list[Detection]:
    """Multi-instance detection: greedy NMS over the vote grid.

    Peaks are taken in descending vote count; each kept peak suppresses all
    cells within Chebyshev distance ``nms_cells`` and is refined exactly like
    find_peak.  Peaks below ``min_score`` (default: min_score_fraction of the
    sampled pair count) stop the scan.  May return an empty list.
    """
    if nms_cells is None:
        nms_cells = cfg.nms_cells
    if nms_cells < 1:
        raise ValueError("nms_cells must be >= 1")
    grid, pts, field = vote_grid(dmap, weights, cfg)
    if min_score is None:
        min_score = cfg.min_score_fraction * cfg.pair_count
    live = grid.votes.astype(np.float64, copy=True)
    out: list[Detection] = []
    while len(out) < max_instances:
        r, c = _argmax_cell(live)
        score = live[r, c]
        if score <= 0 or score < min_score:
            break
        try:
            if cfg.size_aggregation == "post_hoc":
                center, _ = _refine(grid, r, c, with_size=False)
                size = _size_from_center(pts, field.sizes, center, cfg.absolute_size)
            else:
                center, size = _refine(grid, r, c)
            out.append(_detection(center, size, float(grid.votes[r, c])))
        except NoSizeEvidence:
            pass  # spurious peak with no size support; keep scanning
        live[
            max(r - nms_cells, 0) : r + nms_cells + 1,
            max(c - nms_cells, 0) : c + nms_cells + 1,
        ] = -1.0
    return out


def heatmap_image(grid: AccumulatorGrid) -> np.ndarray:
    """Vote grid as an 8-bit grayscale image, one byte per cell, linearly
    scaled so the strongest cell maps to 255."""
    peak = grid.votes.max(initial=0)
    if peak <= 0:
        return np.zeros(grid.votes.shape, dtype=np.uint8)
    return np.round(grid.votes * (255.0 / peak)).astype(np.uint8)
