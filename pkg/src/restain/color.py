"""Optical-density color math: OD conversion, stain unmixing and restaining.

An RGB tile is modeled with the Beer-Lambert transmittance law: per channel,
``od = -log10((p + 1) / (I0 + 1))`` where ``I0`` is the background white
point. In OD space staining is linear, so a tile decomposes per pixel into
``y = M @ c`` with ``M`` holding one unit-norm color vector per stain and
``c`` the stain concentrations. Unmixing inverts that with the Moore-Penrose
pseudo-inverse of ``M``; restaining recomposes the same concentrations with
another domain's color vectors.

All operations are pure; every value type is validated and frozen at
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from restain import backend
from restain.errors import RankDeficientStainsError, ValidationError

#: Two stain vectors closer than this angle (radians) are treated as parallel.
PARALLEL_ANGLE_RAD = 1e-6

#: Unit-norm tolerance for stain matrix columns.
UNIT_NORM_TOL = 1e-6


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


def _check_white_point(white_point: np.ndarray) -> np.ndarray:
    wp = np.asarray(white_point, dtype=np.float64).reshape(-1)
    if wp.shape != (3,):
        raise ValidationError(f"white_point must have 3 components, got shape {wp.shape}")
    if not np.all(np.isfinite(wp)):
        raise ValidationError("white_point must be finite")
    if np.any(wp <= 0.0) or np.any(wp > 255.0):
        raise ValidationError(f"white_point components must lie in (0, 255], got {wp.tolist()}")
    return wp


@dataclass(frozen=True, eq=False)
class RgbTile:
    """H x W x 3 image of 8-bit channel intensities plus its background white point."""

    pixels: np.ndarray
    white_point: np.ndarray = (255.0, 255.0, 255.0)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValidationError(f"pixels must be (H, W, 3), got shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValidationError("tile width and height must be positive")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValidationError(f"pixels must be integer-valued, got dtype {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ValidationError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen_array(px, dtype=np.uint8))
        object.__setattr__(self, "white_point", _frozen_array(_check_white_point(self.white_point)))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class OdImage:
    """H x W x 3 array of optical densities (dimensionless)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValidationError(f"OD values must be (H, W, 3), got shape {v.shape}")
        if v.shape[0] == 0 or v.shape[1] == 0:
            raise ValidationError("OD image width and height must be positive")
        if not np.all(np.isfinite(v)):
            raise ValidationError("OD values must be finite")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class StainMatrix:
    """3 x n_s matrix of unit-norm, non-negative OD color vectors, one per stain."""

    columns: np.ndarray
    stain_names: tuple = ()

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.float64)
        if cols.ndim != 2 or cols.shape[0] != 3:
            raise ValidationError(f"stain matrix must be (3, n_s), got shape {cols.shape}")
        n_s = cols.shape[1]
        if not 1 <= n_s <= 3:
            raise ValidationError(f"n_s must be in [1, 3], got {n_s}")
        if not np.all(np.isfinite(cols)):
            raise ValidationError("stain vectors must be finite")
        if np.any(cols < 0.0):
            raise ValidationError("stain vector components must be non-negative")
        norms = np.linalg.norm(cols, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValidationError(f"stain vectors must have unit norm, got norms {norms.tolist()}")
        names = tuple(self.stain_names) if self.stain_names else tuple(f"stain_{i}" for i in range(n_s))
        if len(names) != n_s:
            raise ValidationError(f"expected {n_s} stain names, got {len(names)}")
        object.__setattr__(self, "columns", _frozen_array(cols))
        object.__setattr__(self, "stain_names", names)

    @property
    def n_s(self) -> int:
        return self.columns.shape[1]


@dataclass(frozen=True, eq=False)
class ConcentrationMap:
    """H x W x n_s array of per-pixel stain concentrations (OD units)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValidationError(f"concentrations must be (H, W, n_s), got shape {v.shape}")
        if v.shape[0] == 0 or v.shape[1] == 0:
            raise ValidationError("concentration map width and height must be positive")
        if not 1 <= v.shape[2] <= 3:
            raise ValidationError(f"channel count must be in [1, 3], got {v.shape[2]}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("concentrations must be finite")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class ReferenceProfile:
    """A named stain domain: its color vectors, white point and provenance."""

    domain_id: str
    stain_matrix: StainMatrix
    white_point: np.ndarray = (255.0, 255.0, 255.0)
    source: str = ""

    def __post_init__(self):
        if not self.domain_id:
            raise ValidationError("domain_id must be non-empty")
        if not isinstance(self.stain_matrix, StainMatrix):
            raise ValidationError("stain_matrix must be a StainMatrix")
        object.__setattr__(self, "white_point", _frozen_array(_check_white_point(self.white_point)))


def rgb_to_od(tile: RgbTile) -> OdImage:
    """Convert an RGB tile to optical density, clamped below at zero."""
    return OdImage(backend.od_from_rgb(tile.pixels, tile.white_point))


def od_to_rgb(od: OdImage, white_point=(255.0, 255.0, 255.0)) -> RgbTile:
    """Invert the density transform, rounding to the nearest 8-bit level."""
    wp = _check_white_point(white_point)
    return RgbTile(backend.rgb_from_od(od.values, wp), white_point=wp)


def pseudo_inverse(m: StainMatrix) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of the stain matrix, shape (n_s, 3).

    Columns are unit vectors, so full column rank is equivalent to no pair of
    columns being parallel; that degenerate case raises
    ``RankDeficientStainsError`` so callers can re-estimate the stains. For
    the full-rank case the normal-equations form ``(M^T M)^-1 M^T`` satisfies
    all four Moore-Penrose conditions.
    """
    cols = m.columns
    for a in range(m.n_s):
        for b in range(a + 1, m.n_s):
            cosang = min(1.0, abs(float(cols[:, a] @ cols[:, b])))
            if np.arccos(cosang) < PARALLEL_ANGLE_RAD:
                raise RankDeficientStainsError(
                    f"stain vectors {m.stain_names[a]!r} and {m.stain_names[b]!r} are parallel"
                )
    gram = cols.T @ cols
    return np.linalg.solve(gram, cols.T)


def deconvolve(od: OdImage, m: StainMatrix) -> ConcentrationMap:
    """Estimate per-pixel stain concentrations ``c = P @ y``.

    Raw unmixing: negative concentrations are representable and not clamped
    (non-negativity projection is an estimation choice, not part of the
    linear-algebra contract).
    """
    pinv = pseudo_inverse(m)
    return ConcentrationMap(backend.unmix(od.values, pinv))


def recompose(c: ConcentrationMap, m: StainMatrix) -> OdImage:
    """Compose densities ``y = M @ c`` from concentrations."""
    if c.channels != m.n_s:
        raise ValidationError(
            f"concentration channels ({c.channels}) do not match stain count ({m.n_s})"
        )
    return OdImage(backend.mix(c.values, m.columns))


def linear_transfer(tile: RgbTile, source: ReferenceProfile, target: ReferenceProfile) -> RgbTile:
    """Restain a tile from the source domain into the target domain.

    The tile's concentrations under the source color vectors are recomposed
    with the target color vectors, preserving per-pixel stain amounts exactly
    up to output quantization.
    """
    od = rgb_to_od(tile)
    conc = deconvolve(od, source.stain_matrix)
    return od_to_rgb(recompose(conc, target.stain_matrix), target.white_point)
