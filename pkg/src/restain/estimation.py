"""Per-image stain matrix estimation by alternating projected least squares.

Starting from a seed profile, the fit alternates two subproblem solves on the
decomposition Y = M C^T:

  (a) concentrations: C = pinv(M) Y per pixel, optionally projected onto the
      non-negative orthant;
  (b) color vectors: each pixel is assigned to the stain with the largest
      concentration, and every dye column is re-solved by least squares over
      the pixels it dominates (min ||Y_sel - m c_sel^T||, treating dominated
      pixels as approximately pure samples of that stain), projected to
      non-negative components and renormalized to unit length.

The loop stops on an objective floor, on a relative decrease below ``tol``,
or as soon as an iteration would not descend (the previous iterate is kept),
so the recorded objective trace is non-increasing by construction.

Columns named ``residual`` model noise rather than a dye: they are held fixed
during the alternation (fitting noise is ill-posed) and re-completed from the
fitted dye columns at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from restain import backend
from restain.color import ConcentrationMap, OdImage, ReferenceProfile, StainMatrix
from restain.errors import BlankTileError, RankDeficientStainsError, ValidationError
from restain.profiles import RESIDUAL_NAME, complete_residual

#: A tile whose densities never exceed this carries no fittable signal.
BLANK_OD_MAX = 1e-4

#: Pixels whose concentrations all stay below this are background and take no
#: part in the color-vector update.
DOMINANCE_MIN = 1e-3

#: Column pairs closer than this angle (radians) count as collapsed.
PARALLEL_ANGLE_RAD = 1e-6

#: Deterministic rescue rotation applied once when columns collapse.
PERTURB_ANGLE = 1e-3

#: Residual below which the fit is declared converged outright.
OBJECTIVE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EstimationConfig:
    """Settings for :func:`estimate_stains`."""

    init: ReferenceProfile
    max_iters: int = 50
    tol: float = 1e-5
    nonneg_concentrations: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol}")
        if not isinstance(self.init, ReferenceProfile):
            raise ValidationError("init must be a ReferenceProfile")


@dataclass(frozen=True, eq=False)
class EstimationResult:
    stain_matrix: StainMatrix
    concentrations: ConcentrationMap
    objective_trace: tuple
    iterations_used: int
    converged: bool


def project_nonneg(c: ConcentrationMap) -> ConcentrationMap:
    """Element-wise projection onto the non-negative orthant; idempotent."""
    return ConcentrationMap(np.maximum(c.values, 0.0))


def blend_profiles(
    a: ReferenceProfile, b: ReferenceProfile, beta_a: float, beta_b: float
) -> ReferenceProfile:
    """Convex column-wise blend of two profiles, renormalized to unit columns."""
    if beta_a < 0 or beta_b < 0:
        raise ValidationError(f"blend weights must be non-negative, got {beta_a}, {beta_b}")
    if beta_a == 0 and beta_b == 0:
        raise ValidationError("blend weights must not both be zero")
    if abs(beta_a + beta_b - 1.0) > 1e-9:
        raise ValidationError(f"blend weights must sum to 1, got {beta_a + beta_b}")
    if a.stain_matrix.stain_names != b.stain_matrix.stain_names:
        raise ValidationError(
            f"stain names differ: {a.stain_matrix.stain_names} vs {b.stain_matrix.stain_names}"
        )
    cols = beta_a * a.stain_matrix.columns + beta_b * b.stain_matrix.columns
    norms = np.linalg.norm(cols, axis=0)
    if np.any(norms < 1e-12):
        raise ValidationError("blended column collapsed to zero")
    if beta_b == 0:
        domain_id = a.domain_id
    elif beta_a == 0:
        domain_id = b.domain_id
    else:
        domain_id = f"blend({a.domain_id}:{beta_a:g},{b.domain_id}:{beta_b:g})"
    return ReferenceProfile(
        domain_id=domain_id,
        stain_matrix=StainMatrix(cols / norms, a.stain_matrix.stain_names),
        white_point=beta_a * a.white_point + beta_b * b.white_point,
        source=f"blend of {a.domain_id} ({beta_a:g}) and {b.domain_id} ({beta_b:g})",
    )


def _pinv_columns(cols: np.ndarray) -> np.ndarray:
    gram = cols.T @ cols
    return np.linalg.solve(gram, cols.T)


def _objective(y: np.ndarray, m: np.ndarray, c: np.ndarray) -> float:
    return float(np.linalg.norm(y - c @ m.T))


def _solve_concentrations(y: np.ndarray, m: np.ndarray, nonneg: bool) -> np.ndarray:
    c = y @ _pinv_columns(m).T
    if nonneg:
        np.maximum(c, 0.0, out=c)
    return c


def _ensure_separated(m: np.ndarray, names, already_perturbed: bool):
    """Keep columns mutually non-parallel; one deterministic rescue, then error."""
    n_s = m.shape[1]
    for a in range(n_s):
        for b in range(a + 1, n_s):
            cosang = min(1.0, abs(float(m[:, a] @ m[:, b])))
            if np.arccos(cosang) >= PARALLEL_ANGLE_RAD:
                continue
            if already_perturbed:
                raise RankDeficientStainsError(
                    f"stain columns {names[a]!r} and {names[b]!r} collapsed to parallel vectors"
                )
            u = m[:, b]
            axis = np.zeros(3)
            axis[int(np.argmin(np.abs(u)))] = 1.0
            v = axis - (axis @ u) * u
            v /= np.linalg.norm(v)
            cand = np.cos(PERTURB_ANGLE) * u + np.sin(PERTURB_ANGLE) * v
            cand = np.maximum(cand, 0.0)
            m = m.copy()
            m[:, b] = cand / np.linalg.norm(cand)
            return _ensure_separated(m, names, True)
    return m, already_perturbed


def _fit_column(y: np.ndarray, c: np.ndarray, j: int):
    """Rank-1 least-squares color for stain ``j`` over the pixels it dominates."""
    sel = (np.argmax(c, axis=1) == j) & (c.max(axis=1) >= DOMINANCE_MIN)
    if not np.any(sel):
        return None
    cj = c[sel, j]
    denom = float(cj @ cj)
    if denom < 1e-12:
        return None
    col = y[sel].T @ cj / denom
    col = np.maximum(col, 0.0)
    norm = np.linalg.norm(col)
    if norm < 1e-9:
        return None
    return col / norm


def estimate_stains(od: OdImage, cfg: EstimationConfig) -> EstimationResult:
    """Optimize the seed profile's color vectors against one image.

    Deterministic: identical inputs produce bit-identical results. Raises
    ``BlankTileError`` for tiles with no density signal and
    ``RankDeficientStainsError`` if the dye columns collapse despite one
    rescue perturbation.
    """
    y = od.values.reshape(-1, 3)
    if float(np.abs(y).max()) < BLANK_OD_MAX:
        raise BlankTileError(f"all optical densities below {BLANK_OD_MAX}; nothing to estimate")

    names = cfg.init.stain_matrix.stain_names
    updatable = [i for i, n in enumerate(names) if n != RESIDUAL_NAME]
    m, perturbed = _ensure_separated(cfg.init.stain_matrix.columns.copy(), names, False)
    c = _solve_concentrations(y, m, cfg.nonneg_concentrations)

    trace = []
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iters + 1):
        m_new = m.copy()
        c_new = c
        for j in updatable:
            col = _fit_column(y, c_new, j)
            if col is None:
                continue
            m_new[:, j] = col
            c_new = _solve_concentrations(y, m_new, cfg.nonneg_concentrations)
        m_new, perturbed = _ensure_separated(m_new, names, perturbed)
        cur = _objective(y, m_new, c_new)
        if trace and cur > trace[-1]:
            # The alternation stopped descending; keep the previous iterate so
            # the recorded trace stays non-increasing.
            iterations -= 1
            converged = True
            break
        m, c = m_new, c_new
        trace.append(cur)
        if cur <= OBJECTIVE_FLOOR:
            converged = True
            break
        if len(trace) >= 2 and trace[-2] - trace[-1] <= cfg.tol * max(trace[-2], 1e-300):
            converged = True
            break

    if len(updatable) == 2 and m.shape[1] == 3:
        res_idx = names.index(RESIDUAL_NAME)
        m = m.copy()
        m[:, res_idx] = complete_residual(m[:, updatable[0]], m[:, updatable[1]])

    stain_matrix = StainMatrix(m, names)
    final = backend.unmix(od.values, _pinv_columns(m))
    if cfg.nonneg_concentrations:
        np.maximum(final, 0.0, out=final)
    return EstimationResult(
        stain_matrix=stain_matrix,
        concentrations=ConcentrationMap(final),
        objective_trace=tuple(trace),
        iterations_used=iterations,
        converged=converged,
    )
