"""Synthetic HER2-like tiles with exact ground truth.

Each tile is drawn directly in concentration space (hematoxylin-stained
nucleus disks and DAB-stained membrane arcs at class-determined intensity),
then composed through the same density model the unmixing code inverts. The
painted concentrations, cell geometry and per-pixel class labels are kept, so
a generated tile is its own oracle: unmixing it must recover the painted
values up to 8-bit quantization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from restain.color import (
    ConcentrationMap,
    ReferenceProfile,
    RgbTile,
    StainMatrix,
    deconvolve,
    od_to_rgb,
    recompose,
    rgb_to_od,
)
from restain.errors import PlacementError, ValidationError

CLASS_NAMES = ("0", "1+", "2+", "3+")

#: Membrane DAB concentration per class (OD units). Pinned generator
#: constants: any strictly increasing, well separated choice works, these are
#: fixed for reproducibility.
MEMBRANE_DAB_OD = {"0": 0.0, "1+": 0.3, "2+": 0.7, "3+": 1.2}

#: Membrane completeness (painted arc fraction) ranges per class. The ranges
#: are disjoint enough that mean ring DAB (intensity x completeness) stays
#: strictly ordered across classes even with sampling jitter.
COMPLETENESS_RANGE = {
    "0": (0.30, 0.60),
    "1+": (0.40, 0.60),
    "2+": (0.60, 0.80),
    "3+": (0.85, 1.00),
}

#: Nucleus hematoxylin concentration range (OD units).
NUCLEUS_OD_RANGE = (0.55, 0.95)

LABEL_BACKGROUND = 0
LABEL_OF_CLASS = {name: i + 1 for i, name in enumerate(CLASS_NAMES)}

#: Midpoints between the class DAB intensities; used by the rule-based cell
#: classifier.
CLASS_DAB_BOUNDARIES = (0.15, 0.50, 0.95)

_NUCLEUS_RADIUS_RANGE = (3.0, 5.0)
_RING_WIDTH_RANGE = (2.0, 3.0)
_MIN_TILE_SIZE = 32
_PLACEMENT_ATTEMPTS_PER_CELL = 100


@dataclass(frozen=True, eq=False)
class CellSpec:
    """Geometry and grade of one synthetic cell."""

    center: tuple
    nucleus_radius: float
    membrane_radius: float
    her2_class: str
    membrane_dab_intensity: float
    membrane_completeness: float

    def __post_init__(self):
        if self.her2_class not in CLASS_NAMES:
            raise ValidationError(f"her2_class must be one of {CLASS_NAMES}, got {self.her2_class!r}")
        if not self.membrane_radius > self.nucleus_radius > 0:
            raise ValidationError(
                f"need membrane_radius > nucleus_radius > 0, got {self.membrane_radius}, {self.nucleus_radius}"
            )
        if self.membrane_dab_intensity != MEMBRANE_DAB_OD[self.her2_class]:
            raise ValidationError(
                f"class {self.her2_class} must have DAB intensity {MEMBRANE_DAB_OD[self.her2_class]}"
            )
        if not 0.0 <= self.membrane_completeness <= 1.0:
            raise ValidationError(f"completeness must be in [0, 1], got {self.membrane_completeness}")


@dataclass(frozen=True, eq=False)
class SyntheticTile:
    """A generated tile plus everything needed to verify any pipeline on it."""

    tile: RgbTile
    truth_m: StainMatrix
    truth_c: ConcentrationMap
    cells: tuple
    label_map: np.ndarray

    def __post_init__(self):
        lm = np.asarray(self.label_map)
        if lm.shape != (self.tile.height, self.tile.width):
            raise ValidationError("label_map dimensions must match the tile")


def _stain_channel(names, wanted: str) -> int:
    try:
        return names.index(wanted)
    except ValueError:
        raise ValidationError(f"profile has no {wanted!r} stain (names: {names})") from None


def _draw_scene(seed, size, cell_count, class_mix, n_channels, h_idx, dab_idx):
    """Place cells and paint concentrations + labels. Pure function of the seed."""
    rng = np.random.default_rng(seed)
    conc = np.zeros((size, size, n_channels), dtype=np.float64)
    labels = np.full((size, size), LABEL_BACKGROUND, dtype=np.uint8)
    cells = []
    placed = []
    attempts = 0
    max_attempts = _PLACEMENT_ATTEMPTS_PER_CELL * cell_count
    while len(placed) < cell_count:
        if attempts >= max_attempts:
            raise PlacementError(
                f"placed only {len(placed)}/{cell_count} cells in {max_attempts} attempts"
            )
        attempts += 1
        nucleus_r = rng.uniform(*_NUCLEUS_RADIUS_RANGE)
        membrane_r = nucleus_r + rng.uniform(*_RING_WIDTH_RANGE)
        margin = membrane_r + 1.0
        if 2 * margin >= size:
            raise ValidationError(f"size {size} cannot host a cell of radius {membrane_r:.1f}")
        cx = rng.uniform(margin, size - margin)
        cy = rng.uniform(margin, size - margin)
        if any((cx - x) ** 2 + (cy - y) ** 2 < (membrane_r + r + 1.0) ** 2 for x, y, r in placed):
            continue
        placed.append((cx, cy, membrane_r))

        her2_class = CLASS_NAMES[int(rng.choice(4, p=class_mix))]
        completeness = rng.uniform(*COMPLETENESS_RANGE[her2_class])
        nucleus_od = rng.uniform(*NUCLEUS_OD_RANGE)
        arc_start = rng.uniform(0.0, 2.0 * math.pi)
        cell = CellSpec(
            center=(cx, cy),
            nucleus_radius=nucleus_r,
            membrane_radius=membrane_r,
            her2_class=her2_class,
            membrane_dab_intensity=MEMBRANE_DAB_OD[her2_class],
            membrane_completeness=completeness,
        )
        cells.append(cell)
        _paint_cell(conc, labels, cell, nucleus_od, arc_start, h_idx, dab_idx)
    return conc, labels, tuple(cells)


def _paint_cell(conc, labels, cell, nucleus_od, arc_start, h_idx, dab_idx):
    size = labels.shape[0]
    cx, cy = cell.center
    r = cell.membrane_radius
    x0, x1 = max(0, int(cx - r - 1)), min(size, int(cx + r + 2))
    y0, y1 = max(0, int(cy - r - 1)), min(size, int(cy + r + 2))
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dx = xx - cx
    dy = yy - cy
    dist = np.hypot(dx, dy)

    disk = dist <= cell.membrane_radius
    labels[y0:y1, x0:x1][disk] = LABEL_OF_CLASS[cell.her2_class]

    nucleus = dist <= cell.nucleus_radius
    conc[y0:y1, x0:x1, h_idx][nucleus] = nucleus_od

    if cell.membrane_dab_intensity > 0.0:
        ring = (dist > cell.nucleus_radius) & disk
        angle = np.mod(np.arctan2(dy, dx) - arc_start, 2.0 * math.pi)
        painted = ring & (angle <= 2.0 * math.pi * cell.membrane_completeness)
        conc[y0:y1, x0:x1, dab_idx][painted] = cell.membrane_dab_intensity


def _validate_generate_args(size, cell_count, class_mix):
    if size < _MIN_TILE_SIZE:
        raise ValidationError(f"size must be >= {_MIN_TILE_SIZE}, got {size}")
    if cell_count < 0:
        raise ValidationError(f"cell_count must be >= 0, got {cell_count}")
    mix = np.asarray(class_mix, dtype=np.float64)
    if mix.shape != (4,) or np.any(mix < 0) or abs(float(mix.sum()) - 1.0) > 1e-9:
        raise ValidationError(f"class_mix must be 4 non-negative numbers summing to 1, got {class_mix}")
    return mix


def generate_tile(
    seed: int,
    size: int,
    profile: ReferenceProfile,
    cell_count: int,
    class_mix=(0.25, 0.25, 0.25, 0.25),
) -> SyntheticTile:
    """Generate one tile with exact painted ground truth. Deterministic per seed."""
    mix = _validate_generate_args(size, cell_count, class_mix)
    names = profile.stain_matrix.stain_names
    h_idx = _stain_channel(names, "hematoxylin")
    dab_idx = _stain_channel(names, "dab")
    conc, labels, cells = _draw_scene(
        seed, size, cell_count, mix, profile.stain_matrix.n_s, h_idx, dab_idx
    )
    truth_c = ConcentrationMap(conc)
    tile = od_to_rgb(recompose(truth_c, profile.stain_matrix), profile.white_point)
    return SyntheticTile(
        tile=tile,
        truth_m=profile.stain_matrix,
        truth_c=truth_c,
        cells=cells,
        label_map=labels,
    )


def generate_paired_domains(
    seed: int,
    size: int,
    profile_a: ReferenceProfile,
    profile_b: ReferenceProfile,
    cell_count: int,
    class_mix=(0.25, 0.25, 0.25, 0.25),
):
    """One scene composed through two domains.

    Both tiles share the identical concentration truth, cells and labels;
    only the color vectors and white point differ. This provides the exact
    cross-domain pairs real stain datasets never have.
    """
    mix = _validate_generate_args(size, cell_count, class_mix)
    names = profile_a.stain_matrix.stain_names
    if names != profile_b.stain_matrix.stain_names:
        raise ValidationError("paired profiles must share stain names")
    h_idx = _stain_channel(names, "hematoxylin")
    dab_idx = _stain_channel(names, "dab")
    conc, labels, cells = _draw_scene(
        seed, size, cell_count, mix, profile_a.stain_matrix.n_s, h_idx, dab_idx
    )
    truth_c = ConcentrationMap(conc)

    def compose(profile):
        tile = od_to_rgb(recompose(truth_c, profile.stain_matrix), profile.white_point)
        return SyntheticTile(
            tile=tile,
            truth_m=profile.stain_matrix,
            truth_c=truth_c,
            cells=cells,
            label_map=labels,
        )

    return compose(profile_a), compose(profile_b)


def dominant_class(cells) -> str:
    """Modal cell class of a tile (ties break toward the higher class); '0' if empty."""
    if not cells:
        return "0"
    counts = {name: 0 for name in CLASS_NAMES}
    for cell in cells:
        counts[cell.her2_class] += 1
    return max(CLASS_NAMES, key=lambda name: (counts[name], CLASS_NAMES.index(name)))


def classify_cells(tile: RgbTile, cells, profile: ReferenceProfile) -> np.ndarray:
    """Rule-based desk-scale cell grading: label each known cell footprint by
    its membrane DAB concentration under the given profile.

    The per-cell score is the 95th percentile of DAB over the membrane ring
    (robust to incomplete membranes); scores are bucketed at the midpoints
    between the class intensities. Returns a label map shaped like the tile.
    """
    dab_idx = _stain_channel(profile.stain_matrix.stain_names, "dab")
    conc = deconvolve(rgb_to_od(tile), profile.stain_matrix).values[..., dab_idx]
    labels = np.full(conc.shape, LABEL_BACKGROUND, dtype=np.uint8)
    size_y, size_x = conc.shape
    boundaries = np.asarray(CLASS_DAB_BOUNDARIES)
    for cell in cells:
        cx, cy = cell.center
        r = cell.membrane_radius
        x0, x1 = max(0, int(cx - r - 1)), min(size_x, int(cx + r + 2))
        y0, y1 = max(0, int(cy - r - 1)), min(size_y, int(cy + r + 2))
        yy, xx = np.mgrid[y0:y1, x0:x1]
        dist = np.hypot(xx - cx, yy - cy)
        disk = dist <= cell.membrane_radius
        ring = (dist > cell.nucleus_radius) & disk
        score = float(np.percentile(conc[y0:y1, x0:x1][ring], 95)) if np.any(ring) else 0.0
        predicted = CLASS_NAMES[int(np.searchsorted(boundaries, score))]
        labels[y0:y1, x0:x1][disk] = LABEL_OF_CLASS[predicted]
    return labels
