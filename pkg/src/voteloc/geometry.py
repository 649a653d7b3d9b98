"""Pure vote geometry: direction targets, ray-pair intersection, relative-size
algebra, and the analytic covariance of a pair vote.

All functions are pure and operate on immutable inputs; they are safe to call
from any number of threads.

Conventions
-----------
Coordinates are continuous pixels, x to the right, y down.  The 2D scalar
cross product is ``u x v = u.x*v.y - u.y*v.x``.  A direction angle ``t`` maps
to the unit vector ``(cos t, sin t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoint, InvalidSize, ParallelConfiguration

# Below this |cross| two directions are treated as parallel.
PARALLEL_EPS = 1e-9
# Distance under which a point and its target coincide.
DEGENERATE_EPS = 1e-9
# Relative-size magnitude under which a point carries no size information.
SIZE_SUPPRESS_EPS = 0.02
# Pixel unit for the absolute-size ablation: the network regresses size/UNIT
# so targets stay O(1) and trainable, while remaining tied to pixel scale.
ABS_SIZE_UNIT = 256.0


@dataclass(frozen=True)
class Point2:
    """Continuous 2D pixel location (may lie outside the image)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class UnitDir:
    """Unit-norm 2D direction."""

    dx: float
    dy: float

    def __post_init__(self) -> None:
        n2 = self.dx * self.dx + self.dy * self.dy
        if abs(n2 - 1.0) > 1e-6:
            raise ValueError(f"direction ({self.dx}, {self.dy}) is not unit-norm")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box as center plus size, in pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise InvalidSize(f"box size ({self.w}, {self.h}) must be positive")

    @property
    def center(self) -> Point2:
        return Point2(self.cx, self.cy)

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class RelSize:
    """Center offset of a point divided element-wise by the box size."""

    sx: float
    sy: float


@dataclass(frozen=True)
class PairGeometry:
    """A point pair in a canonical frame: first point at the origin, second at
    (a, b); direction angles alpha and beta; angular noise std sigma."""

    a: float
    b: float
    alpha: float
    beta: float
    sigma: float


def center_direction(p: Point2, o: Point2) -> UnitDir:
    """Unit vector from a sampled point toward the box center.

    Raises DegeneratePoint when the point sits on the center.
    """
    dx = o.x - p.x
    dy = o.y - p.y
    n = math.hypot(dx, dy)
    if n < DEGENERATE_EPS:
        raise DegeneratePoint(f"point ({p.x}, {p.y}) coincides with center")
    return UnitDir(dx / n, dy / n)


def intersect_pair(
    p1: Point2,
    d1: UnitDir,
    p2: Point2,
    d2: UnitDir,
    ray_check: str = "both",
) -> Point2 | None:
    """Intersection of the two rays (p1, d1) and (p2, d2), or None.

    The intersection is ``p1 + t1*d1`` with ``t1 = ((p2-p1) x d2)/(d1 x d2)``.
    Returns None when the directions are parallel or the intersection lies
    behind a ray: behind the first ray always, behind the second as well when
    ``ray_check == "both"`` (the default; both points claim the center lies
    ahead of them).
    """
    denom = d1.dx * d2.dy - d1.dy * d2.dx
    if abs(denom) < PARALLEL_EPS:
        return None
    rx = p2.x - p1.x
    ry = p2.y - p1.y
    t1 = (rx * d2.dy - ry * d2.dx) / denom
    if t1 < 0:
        return None
    if ray_check == "both":
        t2 = (rx * d1.dy - ry * d1.dx) / denom
        if t2 < 0:
            return None
    elif ray_check != "one":
        raise ValueError(f"ray_check must be 'one' or 'both', got {ray_check!r}")
    return Point2(p1.x + t1 * d1.dx, p1.y + t1 * d1.dy)


def relative_size(p: Point2, c: Point2, s_bar: tuple[float, float]) -> RelSize:
    """Center offset of ``p`` divided element-wise by the box size ``s_bar``."""
    w, h = s_bar
    if w <= 0 or h <= 0:
        raise InvalidSize(f"box size ({w}, {h}) must be positive")
    return RelSize((p.x - c.x) / w, (p.y - c.y) / h)


def absolute_size_from_vote(
    p: Point2, c_hat: Point2, s: RelSize
) -> tuple[float | None, float | None]:
    """Invert the relative size against an estimated center, per axis.

    An axis with |s| < SIZE_SUPPRESS_EPS yields None: points nearly level with
    the center on that axis carry no usable size information, and dividing by
    their ratio would blow up.
    """
    w = (p.x - c_hat.x) / s.sx if abs(s.sx) >= SIZE_SUPPRESS_EPS else None
    h = (p.y - c_hat.y) / s.sy if abs(s.sy) >= SIZE_SUPPRESS_EPS else None
    return w, h


def _check_not_parallel(beta: float) -> float:
    sb = math.sin(beta)
    if abs(sb) < PARALLEL_EPS:
        raise ParallelConfiguration(f"sin(beta) ~ 0 at beta={beta}")
    return sb


def jacobian_det(g: PairGeometry) -> float:
    """Determinant of the Jacobian of the intersection w.r.t. the two
    direction angles, in the canonical frame (alpha = 0):

        det(J) = b * (b*cos(beta) - a*sin(beta)) / sin(beta)**3

    Grows without bound as beta -> 0: near-parallel pairs give votes of
    unbounded variance.
    """
    if g.alpha != 0.0:
        raise ValueError("jacobian_det expects the canonical frame (alpha = 0); "
                         "rotate the pair first (see pair_frame)")
    sb = _check_not_parallel(g.beta)
    cb = math.cos(g.beta)
    return g.b * (g.b * cb - g.a * sb) / sb**3


def intersection_jacobian(g: PairGeometry) -> np.ndarray:
    """Full 2x2 Jacobian of the intersection point w.r.t. (alpha, beta).

    With the first point at the origin, the second at (a, b), and
    ``t1 = (a*sin(beta) - b*cos(beta)) / sin(beta - alpha)``, the intersection
    is ``t1 * (cos(alpha), sin(alpha))``; the columns below are its partial
    derivatives in alpha and beta.
    """
    d = math.sin(g.beta - g.alpha)
    if abs(d) < PARALLEL_EPS:
        raise ParallelConfiguration(f"sin(beta - alpha) ~ 0 for {g}")
    n = g.a * math.sin(g.beta) - g.b * math.cos(g.beta)
    t1 = n / d
    dt1_dalpha = n * math.cos(g.beta - g.alpha) / d**2
    dt1_dbeta = (g.b * math.cos(g.alpha) - g.a * math.sin(g.alpha)) / d**2
    ca, sa = math.cos(g.alpha), math.sin(g.alpha)
    return np.array(
        [
            [dt1_dalpha * ca - t1 * sa, dt1_dbeta * ca],
            [dt1_dalpha * sa + t1 * ca, dt1_dbeta * sa],
        ]
    )


def cov_analytic(g: PairGeometry) -> np.ndarray:
    """First-order covariance of the pair vote under independent Gaussian
    angular noise of std sigma on both directions: ``sigma**2 * J @ J.T``.

    Symmetric positive semi-definite by construction.
    """
    j = intersection_jacobian(g)
    return g.sigma**2 * (j @ j.T)


def cov_det_analytic(g: PairGeometry) -> float:
    """Determinant of the pair-vote covariance: ``sigma**4 * det(J)**2``."""
    return g.sigma**4 * jacobian_det(g) ** 2


def pair_frame(p1: Point2, d1: UnitDir, p2: Point2, d2: UnitDir, sigma: float) -> PairGeometry:
    """Express a concrete pair in the canonical frame: translate p1 to the
    origin and rotate so d1 points along +x (alpha = 0)."""
    a0 = math.atan2(d1.dy, d1.dx)
    ca, sa = math.cos(-a0), math.sin(-a0)
    rx = p2.x - p1.x
    ry = p2.y - p1.y
    a = ca * rx - sa * ry
    b = sa * rx + ca * ry
    beta = math.atan2(d2.dy, d2.dx) - a0
    # wrap to (-pi, pi] so sin/cos stay well-conditioned
    beta = math.atan2(math.sin(beta), math.cos(beta))
    return PairGeometry(a=a, b=b, alpha=0.0, beta=beta, sigma=sigma)
