"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. ``RESTAIN_BACKEND`` forces the choice: ``auto`` (default),
``numpy`` or ``compiled``.
"""

from __future__ import annotations

import os

import numpy as np

from restain import _kernels_np

_requested = os.environ.get("RESTAIN_BACKEND", "auto")
if _requested not in ("auto", "numpy", "compiled"):
    raise ImportError(
        f"RESTAIN_BACKEND must be 'auto', 'numpy' or 'compiled', got {_requested!r}"
    )

_compiled = None
if _requested != "numpy":
    try:
        from restain import _kernels as _compiled
    except ImportError:
        if _requested == "compiled":
            raise
        _compiled = None

_active = _compiled if _compiled is not None else _kernels_np

BACKEND_NAME: str = _active.NAME
HAVE_COMPILED: bool = _compiled is not None

#: Guard added to numerator and denominator of the density ratio so a zero
#: pixel stays finite: od = -log10((p + DELTA) / (I0 + DELTA)).
DELTA = 1.0


def density_lut(white_point: np.ndarray) -> np.ndarray:
    """Per-channel OD lookup table for all 256 pixel values, clamped at 0."""
    levels = np.arange(256, dtype=np.float64)
    lut = np.empty((3, 256), dtype=np.float64)
    for c in range(3):
        lut[c] = -np.log10((levels + DELTA) / (float(white_point[c]) + DELTA))
    np.maximum(lut, 0.0, out=lut)
    return lut


def od_from_rgb(pixels: np.ndarray, white_point: np.ndarray) -> np.ndarray:
    lut = density_lut(white_point)
    return _active.od_from_rgb(np.ascontiguousarray(pixels), lut)


def rgb_from_od(od: np.ndarray, white_point: np.ndarray) -> np.ndarray:
    return _active.rgb_from_od(
        np.ascontiguousarray(od, dtype=np.float64),
        np.ascontiguousarray(white_point, dtype=np.float64),
        DELTA,
    )


def unmix(od: np.ndarray, pinv: np.ndarray) -> np.ndarray:
    return _active.unmix(
        np.ascontiguousarray(od, dtype=np.float64),
        np.ascontiguousarray(pinv, dtype=np.float64),
    )


def mix(conc: np.ndarray, m: np.ndarray) -> np.ndarray:
    return _active.mix(
        np.ascontiguousarray(conc, dtype=np.float64),
        np.ascontiguousarray(m, dtype=np.float64),
    )
