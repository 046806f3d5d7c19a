"""Plant segmentation: dual-channel thresholding plus morphological cleanup.

The plant mask is the OR of a V-channel (HSV) threshold and a scaled
b*-channel (L*a*b*) threshold, cleaned by opening-then-closing with a
square structuring element.  All channels are scaled to [0, 255] so the
8-bit default thresholds (140 for V, 130 for b*) apply directly.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, raster
from .errors import DimensionMismatchError, ValidationError


@dataclass
class SegmentationParams:
    v_threshold: float = 140.0
    bstar_threshold: float = 130.0
    v_keep_above: bool = True
    bstar_keep_above: bool = True
    se_size: int = 3
    cleanup_rounds: int = 1

    def __post_init__(self):
        if not (0 <= self.v_threshold <= 255 and 0 <= self.bstar_threshold <= 255):
            raise ValidationError("thresholds must lie in [0, 255]")
        if self.se_size < 1 or self.se_size % 2 == 0:
            raise ValidationError("se_size must be odd and >= 1")
        if self.cleanup_rounds < 0:
            raise ValidationError("cleanup_rounds must be >= 0")


@dataclass
class PlantMask:
    mask: np.ndarray
    coverage: float

    @property
    def empty(self):
        return self.coverage == 0.0


def threshold_channel(plane, threshold, keep_above=True):
    """Binary mask: set where value >= threshold (or <= when keep_above=False)."""
    p = np.asarray(plane, dtype=np.float64)
    if not np.isfinite(p).all():
        raise ValidationError("channel plane contains non-finite values")
    if keep_above:
        return (p >= threshold).astype(np.uint8)
    return (p <= threshold).astype(np.uint8)


def combine_or(a, b):
    ma = raster.validate_mask(a)
    mb = raster.validate_mask(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"mask shapes differ: {ma.shape} vs {mb.shape}")
    return ma | mb


def morph_open(mask, se_size=3):
    """Erosion followed by dilation (removes specks smaller than the SE)."""
    m = raster.validate_mask(mask)
    return kernels.dilate(kernels.erode(m, se_size), se_size)


def morph_close(mask, se_size=3):
    """Dilation followed by erosion (fills holes smaller than the SE).

    The intermediate dilation is computed on a padded frame so plant
    material at the image border is not eaten by the closing.
    """
    m = raster.validate_mask(mask)
    r = se_size // 2
    padded = np.pad(m, r, mode="constant", constant_values=0)
    closed = kernels.erode(kernels.dilate(padded, se_size), se_size)
    if r:
        closed = closed[r:-r, r:-r]
    return np.ascontiguousarray(closed)


def segment_plant(image, params=None):
    """Full plant segmentation of a color-corrected image."""
    if params is None:
        params = SegmentationParams()
    img = raster.validate_rgb(image)
    v = raster.hsv_planes(img)[..., 2]
    bstar = raster.lab_planes(img)[..., 2]
    mask = combine_or(
        threshold_channel(v, params.v_threshold, params.v_keep_above),
        threshold_channel(bstar, params.bstar_threshold, params.bstar_keep_above),
    )
    for _ in range(params.cleanup_rounds):
        mask = morph_close(morph_open(mask, params.se_size), params.se_size)
    coverage = float(mask.mean()) if mask.size else 0.0
    return PlantMask(mask=mask, coverage=coverage)
