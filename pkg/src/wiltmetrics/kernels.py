"""Backend selection for the hot per-pixel kernels.

The compiled Cython extension is used when importable; set
``WILT_KERNEL=py`` to force the numpy fallback (or ``WILT_KERNEL=c`` to
require the extension and fail loudly if it is missing).
"""

import os

_choice = os.environ.get("WILT_KERNEL", "").lower()

if _choice == "py":
    from . import _kernels_py as _impl
elif _choice == "c":
    from . import _kernels_c as _impl
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
srgb_to_hsv_planes = _impl.srgb_to_hsv_planes
srgb_to_lab_planes = _impl.srgb_to_lab_planes
erode = _impl.erode
dilate = _impl.dilate
