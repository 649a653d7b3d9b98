"""Pure-numpy vote accumulation, the reference for the compiled kernel."""

from __future__ import annotations

import numpy as np


def accumulate_pairs(
    points: np.ndarray,
    dirs: np.ndarray,
    sizes: np.ndarray,
    pairs: np.ndarray,
    cell: int,
    rows: int,
    cols: int,
    height: float,
    width: float,
    ray_both: bool,
    absolute_size: bool,
    size_eps: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulate pair-intersection votes and co-voted size estimates.

    For each index pair, the two rays (point, predicted direction) are
    intersected; intersections behind the first ray (or either ray, when
    ``ray_both``) and outside [0, width) x [0, height) are dropped.  A kept
    intersection adds one vote to its grid cell, and each endpoint contributes
    a per-axis size estimate there: its offset from the intersection divided
    by its predicted relative size (axes with |s| < size_eps are skipped), or
    its predicted size directly when ``absolute_size``.

    Returns (votes, size_sum, size_count) with shapes (rows, cols),
    (rows, cols, 2), (rows, cols, 2).
    """
    votes = np.zeros((rows, cols), dtype=np.int64)
    size_sum = np.zeros((rows, cols, 2), dtype=np.float64)
    size_count = np.zeros((rows, cols, 2), dtype=np.int64)
    if len(pairs) == 0:
        return votes, size_sum, size_count

    p1 = points[pairs[:, 0]]
    p2 = points[pairs[:, 1]]
    d1 = dirs[pairs[:, 0]]
    d2 = dirs[pairs[:, 1]]
    r = p2 - p1
    denom = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    ok = np.abs(denom) >= 1e-9
    safe = np.where(ok, denom, 1.0)
    t1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / safe
    ok &= t1 >= 0
    if ray_both:
        t2 = (r[:, 0] * d1[:, 1] - r[:, 1] * d1[:, 0]) / safe
        ok &= t2 >= 0
    c = p1 + t1[:, None] * d1
    ok &= (c[:, 0] >= 0) & (c[:, 0] < width) & (c[:, 1] >= 0) & (c[:, 1] < height)
    if not ok.any():
        return votes, size_sum, size_count

    c = c[ok]
    rr = np.minimum((c[:, 1] // cell).astype(np.intp), rows - 1)
    cc = np.minimum((c[:, 0] // cell).astype(np.intp), cols - 1)
    np.add.at(votes, (rr, cc), 1)

    for idx in (pairs[ok, 0], pairs[ok, 1]):
        p = points[idx]
        s = sizes[idx]
        for axis in range(2):
            if absolute_size:
                m = np.ones(len(idx), dtype=bool)
                est = s[:, axis]
            else:
                m = np.abs(s[:, axis]) >= size_eps
                est = np.zeros(len(idx))
                est[m] = (p[m, axis] - c[m, axis]) / s[m, axis]
            np.add.at(size_sum[:, :, axis], (rr[m], cc[m]), est[m])
            np.add.at(size_count[:, :, axis], (rr[m], cc[m]), 1)
    return votes, size_sum, size_count
