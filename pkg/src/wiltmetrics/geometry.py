"""Mask-level geometry: stem line, left/right splitting, profiles, convex
hull, and the stem-aligned rectification used by horizontal distributions."""

import math
from dataclasses import dataclass

import numpy as np

from . import raster
from .errors import DegenerateStemError, ValidationError


@dataclass
class StemLine:
    """x = alpha + beta * y through the stem mask (least squares)."""

    alpha: float
    beta: float

    def x_at(self, y):
        return self.alpha + self.beta * np.asarray(y, dtype=np.float64)


@dataclass
class HalfMasks:
    left: np.ndarray
    right: np.ndarray


@dataclass
class HullResult:
    vertices: np.ndarray  # (k, 2) points as (x, y) in pixels
    area_cm2: float
    perimeter_cm: float
    degenerate: bool = False


def fit_stem_line(stem_mask):
    """Least-squares regression of x on y over all set stem pixels."""
    m = raster.validate_mask(stem_mask)
    ys, xs = np.nonzero(m)
    if len(ys) == 0:
        raise DegenerateStemError("stem mask is empty")
    if len(np.unique(ys)) < 2:
        raise DegenerateStemError("stem mask spans fewer than two rows")
    y = ys.astype(np.float64)
    x = xs.astype(np.float64)
    ym = y.mean()
    xm = x.mean()
    beta = float(((y - ym) * (x - xm)).sum() / ((y - ym) ** 2).sum())
    alpha = float(xm - beta * ym)
    return StemLine(alpha=alpha, beta=beta)


def centroid_stem_line(plant_mask):
    """Fallback vertical stem line through the plant mask's centroid x."""
    m = raster.validate_mask(plant_mask)
    ys, xs = np.nonzero(m)
    if len(xs) == 0:
        raise DegenerateStemError("cannot derive fallback stem line from an empty plant mask")
    return StemLine(alpha=float(xs.mean()), beta=0.0)


def split_mask(plant_mask, line):
    """Partition the plant mask at the stem line; ties (x == s_lin(y)) go left."""
    m = raster.validate_mask(plant_mask)
    h, w = m.shape
    xs = np.arange(w, dtype=np.float64)[None, :]
    stem_x = line.x_at(np.arange(h, dtype=np.float64))[:, None]
    left_side = xs <= stem_x
    left = (m & left_side).astype(np.uint8)
    right = (m & ~left_side).astype(np.uint8)
    return HalfMasks(left=left, right=right)


def horizontal_profile(mask):
    """Row sums h_hor(y)."""
    return raster.validate_mask(mask).sum(axis=1).astype(np.int64)


def vertical_profile(mask):
    """Column sums h_ver(x)."""
    return raster.validate_mask(mask).sum(axis=0).astype(np.int64)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_points(points):
    """Andrew monotone-chain hull of (x, y) points, counter-clockwise in
    image coordinates; collinear points on the boundary are dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return pts
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices):
    """Shoelace area of a simple polygon."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_perimeter(vertices):
    v = np.asarray(vertices, dtype=np.float64)
    d = v - np.roll(v, -1, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def convex_hull(mask, res):
    """Convex hull of set-pixel centers with area/perimeter in metric units."""
    m = raster.validate_mask(mask)
    ys, xs = np.nonzero(m)
    if len(xs) == 0:
        raise ValidationError("convex hull of an empty mask is undefined")
    pts = np.column_stack([xs, ys]).astype(np.float64)
    verts = convex_hull_points(pts)
    cpp = res.cm_per_pixel
    if len(verts) < 3:
        # all points collinear: zero area, perimeter = out-and-back segment
        span = 0.0
        if len(pts) >= 2:
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            span = math.hypot(hi[0] - lo[0], hi[1] - lo[1])
        return HullResult(
            vertices=np.asarray(verts, dtype=np.float64).reshape(-1, 2),
            area_cm2=0.0,
            perimeter_cm=2.0 * span * cpp,
            degenerate=True,
        )
    varr = np.asarray(verts, dtype=np.float64)
    return HullResult(
        vertices=varr,
        area_cm2=polygon_area(varr) * cpp * cpp,
        perimeter_cm=polygon_perimeter(varr) * cpp,
    )


def mask_perimeter(mask, res):
    """Boundary length of the mask itself: count of set-pixel edges that face
    an unset (or out-of-image) pixel, in cm.  Exposed alongside the hull
    perimeter because "perimeter of the plant object" admits both readings."""
    m = raster.validate_mask(mask)
    padded = np.pad(m, 1, mode="constant", constant_values=0)
    edges = 0
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        edges += int((m & (padded[1 + dy : 1 + dy + m.shape[0], 1 + dx : 1 + dx + m.shape[1]] == 0)).sum())
    return edges * res.cm_per_pixel


def rectify_halves(halves, line):
    """Shift each half so column 0 sits at the stem and distance from the stem
    increases with the column index (the left half is mirrored).

    Per row y the right half maps x -> floor(x - s_lin(y)) and the left half
    maps x -> floor(s_lin(y) - x).  Pixels are never dropped: the output is
    widened to hold the farthest pixel.  Row-wise pixel counts are preserved.
    """
    left = raster.validate_mask(halves.left)
    right = raster.validate_mask(halves.right)
    h = left.shape[0]
    stem_x = line.x_at(np.arange(h, dtype=np.float64))

    def _shift(mask, sign):
        ys, xs = np.nonzero(mask)
        if len(xs) == 0:
            return np.zeros((h, 1), dtype=np.uint8), ys, xs, None
        idx = np.floor(sign * (xs - stem_x[ys])).astype(np.int64)
        return None, ys, xs, idx

    _, lys, lxs, lidx = _shift(left, -1.0)
    _, rys, rxs, ridx = _shift(right, 1.0)
    widths = [1]
    if lidx is not None:
        widths.append(int(lidx.max()) + 1)
    if ridx is not None:
        widths.append(int(ridx.max()) + 1)
    w_out = max(widths)

    rect_left = np.zeros((h, w_out), dtype=np.uint8)
    rect_right = np.zeros((h, w_out), dtype=np.uint8)
    if lidx is not None:
        rect_left[lys, lidx] = 1
    if ridx is not None:
        rect_right[rys, ridx] = 1
    return HalfMasks(left=rect_left, right=rect_right)
