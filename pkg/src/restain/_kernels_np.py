"""Pure-numpy kernels; fallback twin of the compiled module ``restain._kernels``.

Accumulation order in ``unmix``/``mix`` matches the compiled loops exactly so
both backends produce bit-identical results for the linear kernels.
"""

import numpy as np

NAME = "numpy"

_LN10 = 2.302585092994045684


def od_from_rgb(pixels, lut):
    """Map 8-bit pixels to optical density through a per-channel 256-entry LUT.

    pixels: (H, W, 3) uint8. lut: (3, 256) float64. Returns (H, W, 3) float64.
    """
    out = np.empty(pixels.shape, dtype=np.float64)
    for c in range(3):
        out[..., c] = lut[c, pixels[..., c]]
    return out


def rgb_from_od(od, white_point, delta):
    """Invert the density transform: p = rint((I0 + d) * 10**(-od) - d), clamped to [0, 255].

    10**(-od) is computed as exp(-od * ln 10); exp is substantially faster
    than pow in both backends.
    """
    out = np.empty(od.shape, dtype=np.uint8)
    for c in range(3):
        t = np.exp(od[..., c] * -_LN10) * (white_point[c] + delta) - delta
        np.rint(t, out=t)
        np.clip(t, 0.0, 255.0, out=t)
        out[..., c] = t.astype(np.uint8)
    return out


def unmix(od, pinv):
    """Per-pixel concentrations c = P @ y. od: (H, W, 3); pinv: (K, 3) -> (H, W, K)."""
    n_s = pinv.shape[0]
    out = np.empty(od.shape[:2] + (n_s,), dtype=np.float64)
    for j in range(n_s):
        acc = od[..., 0] * pinv[j, 0]
        acc = acc + od[..., 1] * pinv[j, 1]
        acc = acc + od[..., 2] * pinv[j, 2]
        out[..., j] = acc
    return out


def mix(conc, m):
    """Per-pixel densities y = M @ c. conc: (H, W, K); m: (3, K) -> (H, W, 3)."""
    n_s = m.shape[1]
    out = np.empty(conc.shape[:2] + (3,), dtype=np.float64)
    for ch in range(3):
        acc = conc[..., 0] * m[ch, 0]
        for k in range(1, n_s):
            acc = acc + conc[..., k] * m[ch, k]
        out[..., ch] = acc
    return out
