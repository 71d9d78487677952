"""Reference stain profiles: built-in defaults, JSON persistence, variants.

A profile names a stain domain (e.g. one scanner/stain-brand combination) and
carries its OD color vectors and background white point. Profiles are stored
as JSON::

    {"domain_id": str, "white_point": [r, g, b],
     "stains": [{"name": str, "od_vector": [x, y, z]}, ...],
     "source": str}

Vectors are normalized on load; a norm more than 1e-3 away from 1 triggers a
warning.
"""

from __future__ import annotations

import json
import math
import warnings
from pathlib import Path

import numpy as np

from restain.color import ReferenceProfile, StainMatrix
from restain.errors import (
    ProfileFormatError,
    ProfileNotFoundError,
    ValidationError,
)

#: Classic hematoxylin / DAB absorbance hues (Ruifrok-style constants),
#: brand-neutral defaults only; real domains should ship measured vectors.
HEMATOXYLIN_OD = (0.650, 0.704, 0.286)
DAB_OD = (0.269, 0.568, 0.776)

RESIDUAL_NAME = "residual"
HER2_STAIN_NAMES = ("hematoxylin", "dab", RESIDUAL_NAME)

#: Reject completed matrices more ill-conditioned than this; unmixing noise
#: amplification grows with the condition number.
MAX_CONDITION = 25.0


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValidationError("stain vector must be non-zero")
    return v / n


def complete_residual(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Fill the third stain slot with the component-wise leftover absorbance.

    ``r_k = sqrt(max(0, 1 - a_k^2 - b_k^2))``, normalized. Unlike a cross
    product this is always non-negative, which the stain-matrix contract
    requires.
    """
    a, b = _unit(first), _unit(second)
    r = np.sqrt(np.clip(1.0 - a**2 - b**2, 0.0, None))
    n = np.linalg.norm(r)
    if n < 1e-3:
        raise ValidationError("residual completion degenerate: dye vectors leave no leftover direction")
    return r / n


def her2_matrix(hematoxylin=HEMATOXYLIN_OD, dab=DAB_OD) -> StainMatrix:
    """Three-stain HER2 matrix: hematoxylin, DAB and a completed residual."""
    h, d = _unit(hematoxylin), _unit(dab)
    m = StainMatrix(np.stack([h, d, complete_residual(h, d)], axis=1), HER2_STAIN_NAMES)
    cond = np.linalg.cond(m.columns)
    if cond > MAX_CONDITION:
        raise ValidationError(f"stain matrix is too ill-conditioned (cond={cond:.1f})")
    return m


def default_profile(domain_id: str = "her2-default") -> ReferenceProfile:
    return ReferenceProfile(
        domain_id=domain_id,
        stain_matrix=her2_matrix(),
        white_point=(255.0, 255.0, 255.0),
        source="built-in brand-neutral HER2 defaults",
    )


def rotate_profile(
    profile: ReferenceProfile, angle: float, seed: int, domain_id: str | None = None
) -> ReferenceProfile:
    """Deterministic variant of a profile: rotate each dye column by ``angle``.

    Each non-residual column is rotated by exactly ``angle`` radians in a
    seeded random direction orthogonal to it (directions that would push a
    component negative are re-drawn); the residual column, when present, is
    re-completed from the rotated dyes. Useful both to fabricate nearby
    stain-brand domains and to build estimation seeds at a known angular
    offset from truth.
    """
    if angle < 0 or angle > math.pi / 2:
        raise ValidationError(f"angle must be in [0, pi/2], got {angle}")
    rng = np.random.default_rng(seed)
    names = profile.stain_matrix.stain_names
    cols = profile.stain_matrix.columns.copy()
    residual_idx = [i for i, n in enumerate(names) if n == RESIDUAL_NAME]
    for i in range(cols.shape[1]):
        if i in residual_idx:
            continue
        u = cols[:, i]
        for _ in range(64):
            r = rng.normal(size=3)
            v = r - (r @ u) * u
            norm = np.linalg.norm(v)
            if norm < 1e-9:
                continue
            cand = math.cos(angle) * u + math.sin(angle) * (v / norm)
            if np.all(cand >= 0.0):
                cols[:, i] = cand
                break
        else:
            raise ValidationError(f"could not rotate column {names[i]!r} within the non-negative orthant")
    if residual_idx and cols.shape[1] == 3:
        dyes = [i for i in range(3) if i not in residual_idx]
        cols[:, residual_idx[0]] = complete_residual(cols[:, dyes[0]], cols[:, dyes[1]])
    return ReferenceProfile(
        domain_id=domain_id or f"{profile.domain_id}-rot{angle:g}-{seed}",
        stain_matrix=StainMatrix(cols, names),
        white_point=profile.white_point,
        source=f"rotated {angle:g} rad from {profile.domain_id} (seed {seed})",
    )


#: Demo brand pair: two nearby HER2 domains fabricated from the defaults.
_BUILTIN_FACTORIES = {
    "her2-default": lambda: default_profile(),
    "her2-brand-a": lambda: rotate_profile(default_profile(), 0.02, seed=101, domain_id="her2-brand-a"),
    "her2-brand-b": lambda: rotate_profile(default_profile(), 0.02, seed=202, domain_id="her2-brand-b"),
}


def builtin_profile(name: str) -> ReferenceProfile:
    try:
        return _BUILTIN_FACTORIES[name]()
    except KeyError:
        raise ProfileNotFoundError(f"unknown built-in profile {name!r}") from None


def profile_to_dict(profile: ReferenceProfile) -> dict:
    return {
        "domain_id": profile.domain_id,
        "white_point": [float(x) for x in profile.white_point],
        "stains": [
            {"name": name, "od_vector": [float(x) for x in profile.stain_matrix.columns[:, i]]}
            for i, name in enumerate(profile.stain_matrix.stain_names)
        ],
        "source": profile.source,
    }


def profile_from_dict(data: dict) -> ReferenceProfile:
    try:
        domain_id = data["domain_id"]
        white_point = data["white_point"]
        stains = data["stains"]
    except (KeyError, TypeError) as exc:
        raise ProfileFormatError(f"profile JSON missing field: {exc}") from exc
    if not isinstance(stains, list) or not stains:
        raise ProfileFormatError("profile 'stains' must be a non-empty list")
    names, cols = [], []
    for entry in stains:
        try:
            name, vec = entry["name"], np.asarray(entry["od_vector"], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise ProfileFormatError(f"stain entry missing field: {exc}") from exc
        if vec.shape != (3,):
            raise ProfileFormatError(f"od_vector must have 3 components, got {vec.tolist()}")
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise ProfileFormatError(f"stain {name!r} has a zero od_vector")
        if abs(norm - 1.0) > 1e-3:
            warnings.warn(
                f"stain {name!r} od_vector norm {norm:.4f} deviates from 1; normalizing",
                stacklevel=2,
            )
        names.append(name)
        cols.append(vec / norm)
    return ReferenceProfile(
        domain_id=domain_id,
        stain_matrix=StainMatrix(np.stack(cols, axis=1), tuple(names)),
        white_point=np.asarray(white_point, dtype=np.float64),
        source=str(data.get("source", "")),
    )


def save_profile(profile: ReferenceProfile, path) -> None:
    from restain.imgio import atomic_write_bytes

    text = json.dumps(profile_to_dict(profile), indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def load_profile(path) -> ReferenceProfile:
    p = Path(path)
    if not p.is_file():
        raise ProfileNotFoundError(f"profile file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"profile is not valid JSON: {exc}") from exc
    return profile_from_dict(data)


def resolve_profile(spec: str, profile_dir: str | None = None) -> ReferenceProfile:
    """Resolve a CLI profile argument: a file path, a name under the profile
    directory, or a built-in name."""
    p = Path(spec)
    if p.is_file():
        return load_profile(p)
    if profile_dir:
        candidate = Path(profile_dir) / f"{spec}.json"
        if candidate.is_file():
            return load_profile(candidate)
    if spec in _BUILTIN_FACTORIES:
        return builtin_profile(spec)
    raise ProfileNotFoundError(f"profile not found: {spec!r}")
