"""Image carrier, fiducial-marker sampling, color correction, and calibration.

Images are numpy arrays in row-major order: RGB images are (H, W, 3)
uint8, channel planes are (H, W) float64, and binary masks are (H, W)
uint8 containing only {0, 1}.  Coordinates follow x = column (rightward)
and y = row (downward from the top).
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import kernels
from .errors import SingularSystemError, ValidationError


def validate_rgb(image):
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValidationError(f"expected (H, W, 3) uint8 image, got {img.shape} {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValidationError("image must be non-empty")
    return img


def validate_mask(mask):
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValidationError(f"expected 2D binary mask, got shape {m.shape}")
    m = m.astype(np.uint8, copy=False)
    if m.size and m.max() > 1:
        raise ValidationError("binary mask must contain only {0, 1}")
    return m


def load_image(path):
    """Load a PNG or JPEG as an (H, W, 3) uint8 RGB array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(path, image):
    Image.fromarray(validate_rgb(image)).save(path)


def load_mask(path):
    """Load a binary mask PNG; any nonzero pixel counts as set."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 0).astype(np.uint8)


def save_mask(path, mask):
    Image.fromarray(validate_mask(mask) * 255).save(path)


@dataclass
class FiducialSquare:
    centroid_x: float
    centroid_y: float
    sample_radius: int


@dataclass
class FiducialObservation:
    """Annotated locations of the 9 color squares of the fiducial marker."""

    squares: list  # 9 FiducialSquare
    reference_colors: np.ndarray  # 9x3, known RGB values in [0, 255]
    square_side_cm: float
    square_side_px: float

    def __post_init__(self):
        if len(self.squares) != 9:
            raise ValidationError(f"fiducial marker needs exactly 9 squares, got {len(self.squares)}")
        self.reference_colors = np.asarray(self.reference_colors, dtype=np.float64)
        if self.reference_colors.shape != (9, 3):
            raise ValidationError("reference_colors must be 9x3")
        if self.square_side_cm <= 0 or self.square_side_px <= 0:
            raise ValidationError("fiducial square side lengths must be positive")


@dataclass
class ColorTransform:
    """3x3 matrix T such that corrected = pixel_row_vector @ T."""

    matrix: np.ndarray

    @classmethod
    def identity(cls):
        return cls(np.eye(3))


@dataclass(frozen=True)
class PixelResolution:
    cm_per_pixel: float


def sample_fiducial(image, fm):
    """Mean RGB over each color square's sampling window, as a 9x3 matrix.

    The window is the axis-aligned square of side 2*radius+1 centered at
    the (rounded) centroid.
    """
    img = validate_rgb(image)
    h, w = img.shape[:2]
    rows = np.empty((9, 3), dtype=np.float64)
    for i, sq in enumerate(fm.squares):
        cx = int(round(sq.centroid_x))
        cy = int(round(sq.centroid_y))
        r = int(sq.sample_radius)
        if cx - r < 0 or cy - r < 0 or cx + r >= w or cy + r >= h:
            raise ValidationError(
                f"fiducial square {i}: sampling window around ({cx}, {cy}) radius {r} "
                f"falls outside the {w}x{h} image"
            )
        window = img[cy - r : cy + r + 1, cx - r : cx + r + 1].astype(np.float64)
        rows[i] = window.reshape(-1, 3).mean(axis=0)
    return rows


def estimate_color_transform(c_image, c_real):
    """Least-squares 3x3 transform T with c_real ~= c_image @ T."""
    a = np.asarray(c_image, dtype=np.float64)
    b = np.asarray(c_real, dtype=np.float64)
    if a.shape != (9, 3) or b.shape != (9, 3):
        raise ValidationError("color matrices must be 9x3")
    gram = a.T @ a
    if np.linalg.matrix_rank(a) < 3:
        raise SingularSystemError("fiducial color matrix is rank deficient (all squares too similar)")
    t = np.linalg.solve(gram, a.T @ b)
    return ColorTransform(t)


def apply_color_transform(image, transform):
    """Apply T per pixel, clamp to [0, 255], round to nearest 8-bit value."""
    img = validate_rgb(image)
    flat = img.reshape(-1, 3).astype(np.float64)
    corrected = flat @ transform.matrix
    corrected = np.clip(np.rint(corrected), 0, 255).astype(np.uint8)
    return corrected.reshape(img.shape)


def srgb_to_hsv(pixel):
    """Single RGB triple -> (H, S, V) floats, each scaled to [0, 255]."""
    arr = np.asarray(pixel, dtype=np.uint8).reshape(1, 1, 3)
    return tuple(kernels.srgb_to_hsv_planes(arr)[0, 0])


def srgb_to_lab(pixel):
    """Single RGB triple -> scaled (L*, a*, b*) floats in [0, 255]."""
    arr = np.asarray(pixel, dtype=np.uint8).reshape(1, 1, 3)
    return tuple(kernels.srgb_to_lab_planes(arr)[0, 0])


def hsv_planes(image):
    """HSV planes of a full image, each channel scaled to [0, 255]."""
    return kernels.srgb_to_hsv_planes(validate_rgb(image))


def lab_planes(image):
    """Scaled L*a*b* planes of a full image."""
    return kernels.srgb_to_lab_planes(validate_rgb(image))


def pixel_resolution(fm):
    """cm per pixel from the fiducial marker's physical and pixel side lengths."""
    if fm.square_side_cm <= 0 or fm.square_side_px <= 0:
        raise ValidationError("fiducial square side lengths must be positive")
    return PixelResolution(fm.square_side_cm / fm.square_side_px)
