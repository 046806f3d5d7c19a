"""Pure-numpy implementations of the per-pixel hot kernels.

These are the reference semantics; the compiled extension in
``_kernels_c.pyx`` mirrors them and is preferred at import time when
available (see ``kernels.py``).
"""

import numpy as np

BACKEND = "python"

# sRGB -> XYZ (D65), IEC 61966-2-1 primaries
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])


def srgb_to_hsv_planes(image):
    """8-bit RGB image (H,W,3) -> float64 HSV planes, each scaled to [0,255].

    Hue follows the standard hexcone model (degrees / 360 * 255);
    saturation is (max-min)/max * 255; value is max(R,G,B).
    """
    rgb = np.asarray(image, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn

    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(mx > 0, delta / mx, 0.0)
        h = np.zeros_like(mx)
        nz = delta > 0
        rr = np.where(nz, (mx - r) / np.where(nz, delta, 1.0), 0.0)
        gg = np.where(nz, (mx - g) / np.where(nz, delta, 1.0), 0.0)
        bb = np.where(nz, (mx - b) / np.where(nz, delta, 1.0), 0.0)
    h = np.where((mx == r) & nz, bb - gg, h)
    h = np.where((mx == g) & nz, 2.0 + rr - bb, h)
    h = np.where((mx == b) & nz, 4.0 + gg - rr, h)
    h = (h / 6.0) % 1.0

    out = np.empty(rgb.shape, dtype=np.float64)
    out[..., 0] = h * 255.0
    out[..., 1] = s * 255.0
    out[..., 2] = mx
    return out


def srgb_to_lab_planes(image):
    """8-bit RGB image (H,W,3) -> float64 L*a*b* planes rescaled to [0,255].

    sRGB -> linear RGB (IEC gamma) -> XYZ (D65) -> L*a*b*, then
    L* in [0,100] maps to [0,255] and a*, b* map via +128 offset.
    """
    c = np.asarray(image, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB2XYZ.T
    t = xyz / _WHITE_D65
    eps = (6.0 / 29.0) ** 3
    f = np.where(t > eps, np.cbrt(t), t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lstar = 116.0 * fy - 16.0
    astar = 500.0 * (fx - fy)
    bstar = 200.0 * (fy - fz)

    out = np.empty(c.shape, dtype=np.float64)
    out[..., 0] = lstar * 255.0 / 100.0
    out[..., 1] = astar + 128.0
    out[..., 2] = bstar + 128.0
    return out


def erode(mask, se_size):
    """Binary erosion with an all-ones square SE; outside the image is 0."""
    m = np.asarray(mask, dtype=np.uint8)
    r = se_size // 2
    padded = np.pad(m, r, mode="constant", constant_values=0)
    out = np.ones_like(m)
    h, w = m.shape
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            out &= padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out


def dilate(mask, se_size):
    """Binary dilation with an all-ones square SE; result cropped to the frame."""
    m = np.asarray(mask, dtype=np.uint8)
    r = se_size // 2
    padded = np.pad(m, r, mode="constant", constant_values=0)
    out = np.zeros_like(m)
    h, w = m.shape
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            out |= padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out
