"""Per-image wilting metrics.

All lengths are reported in cm and areas in cm^2 using the pixel
resolution calibrated from the fiducial marker.  Vertical positions are
reported as heights above the pot's upper edge (y_bot) so values stay
comparable across days.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, raster
from .errors import DegenerateStemError, UndefinedMetricError, ValidationError

# CSV column order for the metric fields (schema v1)
METRIC_FIELDS = [
    "plant_area",
    "plant_width",
    "plant_height",
    "hull_area",
    "hull_perimeter",
    "mask_perimeter",
    "cm_hor_dis",
    "cm_height",
    "v33",
    "v66",
    "v90",
    "h33",
    "h66",
    "h90",
]


@dataclass
class PlantBaseline:
    """Row index of the pot's upper edge (the bottom of the plant)."""

    y_bot: float


@dataclass
class MetricVector:
    plant_area: float = math.nan
    plant_width: float = math.nan
    plant_height: float = math.nan
    hull_area: float = math.nan
    hull_perimeter: float = math.nan
    mask_perimeter: float = math.nan
    cm_hor_dis: float = math.nan
    cm_height: float = math.nan
    v33: float = math.nan
    v66: float = math.nan
    v90: float = math.nan
    h33: float = math.nan
    h66: float = math.nan
    h90: float = math.nan
    degenerate_stem: bool = False
    quantile_saturated: bool = False
    height_clipped: bool = False

    def as_dict(self):
        return {name: getattr(self, name) for name in METRIC_FIELDS}


@dataclass
class AStarHistogram:
    """256-bin histogram of scaled a* values over plant pixels."""

    bins: np.ndarray
    total: int
    normalized: np.ndarray


@dataclass
class ViewMetrics:
    """Result of one view: metrics plus the color histogram, or a failure."""

    metrics: MetricVector | None
    histogram: AStarHistogram | None
    failed: bool = False
    failure_reason: str = ""


def plant_area(mask, res):
    """Set-pixel count times cm_per_pixel^2."""
    count = int(raster.validate_mask(mask).sum())
    return count * res.cm_per_pixel**2


def plant_width(mask, res):
    """Leftmost-to-rightmost extent of the mask, in cm."""
    hv = geometry.vertical_profile(mask)
    cols = np.nonzero(hv)[0]
    if len(cols) == 0:
        raise UndefinedMetricError("plant width is undefined for an empty mask")
    return float(cols[-1] - cols[0]) * res.cm_per_pixel


def top_material_row(mask, fraction=0.05):
    """Smallest row whose cumulative horizontal profile reaches ``fraction``
    of the total mask pixels (the trimmed top-of-plant line Y_Top)."""
    hh = geometry.horizontal_profile(mask)
    total = int(hh.sum())
    if total == 0:
        raise UndefinedMetricError("top-of-plant row is undefined for an empty mask")
    target = total * fraction
    cum = np.cumsum(hh)
    return int(np.argmax(cum >= target))


def plant_height(mask, baseline, res, trim_fraction=0.05):
    """Height from the pot's upper edge up to the 5%-trimmed top line.

    Returns (height_cm, clipped): clipped is True when y_bot lies above the
    trimmed top line, in which case the height is reported as 0.
    """
    y_top = top_material_row(mask, trim_fraction)
    if baseline.y_bot < y_top:
        return 0.0, True
    return (baseline.y_bot - y_top) * res.cm_per_pixel, False


def centers_of_mass(halves):
    """First-moment centroids (x, y) of each half; None for an empty half."""

    def _cm(m):
        ys, xs = np.nonzero(m)
        if len(xs) == 0:
            return None
        return (float(xs.mean()), float(ys.mean()))

    return _cm(halves.left), _cm(halves.right)


def cm_metrics(cms, baseline, res):
    """Center-of-mass horizontal distance and mean height above y_bot, in cm."""
    cm_left, cm_right = cms
    if cm_left is None or cm_right is None:
        raise UndefinedMetricError("center of mass undefined for an empty half mask")
    hor_dis = (cm_right[0] - cm_left[0]) * res.cm_per_pixel
    height = ((baseline.y_bot - cm_left[1]) + (baseline.y_bot - cm_right[1])) / 2.0 * res.cm_per_pixel
    return hor_dis, height


def _quantile_index(profile, quota):
    """Smallest index whose cumulative profile reaches the quota.

    Returns (index, saturated): when the profile total falls short of the
    quota, the last populated index is returned with saturated=True.
    """
    cum = np.cumsum(profile)
    if cum[-1] <= 0:
        raise UndefinedMetricError("quantile of an empty profile is undefined")
    if cum[-1] < quota:
        return int(np.nonzero(profile)[0][-1]), True
    return int(np.argmax(cum >= quota)), False


def vertical_distribution(halves, q, plant_total, res, baseline, quota_basis="full"):
    """V_qy: mean row of the two per-half (100-q)% material lines, accumulated
    from the top, converted to height above y_bot in cm."""
    if q not in (33, 66, 90):
        raise ValidationError("q must be one of 33, 66, 90")
    rows = []
    saturated = False
    for half in (halves.left, halves.right):
        profile = geometry.horizontal_profile(half)
        basis = plant_total if quota_basis == "full" else int(profile.sum())
        quota = basis * (100 - q) / 100.0
        row, sat = _quantile_index(profile, quota)
        saturated |= sat
        rows.append(row)
    mean_row = (rows[0] + rows[1]) / 2.0
    return (baseline.y_bot - mean_row) * res.cm_per_pixel, saturated


def horizontal_distribution(rectified, q, plant_total, res, quota_basis="full"):
    """H_qx: sum of the two per-half q% material columns of the stem-aligned
    halves, accumulated outward from the stem, in cm.

    The quota grows with q so the q% line contains q% of the material
    between the stem and the line; this keeps h33 <= h66 <= h90.
    """
    if q not in (33, 66, 90):
        raise ValidationError("q must be one of 33, 66, 90")
    cols = []
    saturated = False
    for half in (rectified.left, rectified.right):
        profile = geometry.vertical_profile(half)
        basis = plant_total if quota_basis == "full" else int(profile.sum())
        quota = basis * q / 100.0
        col, sat = _quantile_index(profile, quota)
        saturated |= sat
        cols.append(col)
    return (cols[0] + cols[1]) * res.cm_per_pixel, saturated


def astar_histogram(image, mask):
    """Histogram of scaled a* values over set pixels only."""
    m = raster.validate_mask(mask)
    if int(m.sum()) == 0:
        raise UndefinedMetricError("a* histogram is undefined for an empty mask")
    astar = raster.lab_planes(image)[..., 1]
    values = np.clip(np.rint(astar[m.astype(bool)]), 0, 255).astype(np.int64)
    bins = np.bincount(values, minlength=256)
    total = int(bins.sum())
    return AStarHistogram(bins=bins, total=total, normalized=bins / total)


def compute_all(image, plant_mask, stem_mask, res, baseline=None, quota_basis="full"):
    """Run the full per-view metric computation.

    ``stem_mask`` may be None; stem-based metrics then fall back to the
    vertical line through the plant centroid and are flagged.  ``baseline``
    defaults to the lowest set row of the plant mask.
    """
    m = raster.validate_mask(plant_mask)
    total = int(m.sum())
    if total == 0:
        return ViewMetrics(metrics=None, histogram=None, failed=True, failure_reason="empty plant mask")

    if baseline is None:
        baseline = PlantBaseline(y_bot=float(np.nonzero(m.any(axis=1))[0][-1]))

    mv = MetricVector()
    mv.plant_area = plant_area(m, res)
    mv.plant_width = plant_width(m, res)
    mv.plant_height, mv.height_clipped = plant_height(m, baseline, res)
    try:
        hull = geometry.convex_hull(m, res)
        mv.hull_area = hull.area_cm2
        mv.hull_perimeter = hull.perimeter_cm
    except ValidationError:
        pass
    mv.mask_perimeter = geometry.mask_perimeter(m, res)

    try:
        if stem_mask is not None:
            line = geometry.fit_stem_line(stem_mask)
        else:
            raise DegenerateStemError("no stem mask")
    except DegenerateStemError:
        line = geometry.centroid_stem_line(m)
        mv.degenerate_stem = True

    halves = geometry.split_mask(m, line)
    cms = centers_of_mass(halves)
    if cms[0] is not None and cms[1] is not None:
        mv.cm_hor_dis, mv.cm_height = cm_metrics(cms, baseline, res)
        rectified = geometry.rectify_halves(halves, line)
        for q in (33, 66, 90):
            v, vsat = vertical_distribution(halves, q, total, res, baseline, quota_basis)
            h, hsat = horizontal_distribution(rectified, q, total, res, quota_basis)
            setattr(mv, f"v{q}", v)
            setattr(mv, f"h{q}", h)
            mv.quantile_saturated |= vsat or hsat
    else:
        mv.degenerate_stem = True

    hist = astar_histogram(image, m)
    return ViewMetrics(metrics=mv, histogram=hist)
