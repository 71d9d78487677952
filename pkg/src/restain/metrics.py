"""Transfer evaluation: Fréchet feature distance and weighted pixel F1.

The Fréchet metric scores realism: fit a Gaussian (mean, covariance) to a
feature vector per image on each side and compute the squared 2-Wasserstein
distance between the two Gaussians. Feature extraction is pluggable; the
built-in desk-scale extractor is a documented 10-dim hand-crafted descriptor,
so absolute values are not comparable to scores computed on deep features.

The weighted F1 scores class maintenance: per-class F1 over all
non-background pixels of paired label maps, averaged with ground-truth pixel
support as weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from restain import backend
from restain.color import ReferenceProfile, RgbTile, pseudo_inverse, rgb_to_od
from restain.errors import NoCellsError, NonPsdCovarianceError, ValidationError
from restain.profiles import default_profile
from restain.synth import CLASS_NAMES

#: Bump when the hand-crafted descriptor definition changes.
FEATURE_VERSION = 1
FEATURE_DIM = 10

#: Eigenvalues of the symmetrized covariance product below this are an error
#: rather than numerical noise.
SQRT_EIG_TOL = -1e-6

N_CLASSES = len(CLASS_NAMES)
LABEL_ALPHABET = tuple(range(N_CLASSES + 1))  # 0 = background, 1..4 = classes


@dataclass(frozen=True, eq=False)
class FeatureSummary:
    """Gaussian moment summary of a set of feature vectors."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.covariance, dtype=np.float64)
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValidationError(f"covariance shape {cov.shape} does not match mean dim {d}")
        if self.sample_count < 2:
            raise ValidationError(f"sample_count must be >= 2, got {self.sample_count}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("moments must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-9:
            raise ValidationError("covariance must be symmetric")
        if float(np.linalg.eigvalsh(cov).min()) < -1e-8:
            raise NonPsdCovarianceError("covariance has a significantly negative eigenvalue")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def feature_dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class CellLabelMap:
    """H x W map over {0 background, 1..4 classes}."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.shape[0] == 0 or labels.shape[1] == 0:
            raise ValidationError(f"labels must be a non-empty 2-D array, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError(f"labels must be integers, got dtype {labels.dtype}")
        if labels.min() < 0 or labels.max() > N_CLASSES:
            raise ValidationError(f"labels must lie in {LABEL_ALPHABET}")
        object.__setattr__(self, "labels", labels.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class F1Result:
    """Weighted F1 fragment of an evaluation report."""

    weighted_f1: float
    per_class_f1: np.ndarray
    support: np.ndarray


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Metric results for one transfer run."""

    frechet_distance: float
    weighted_f1: float
    per_class_f1: np.ndarray
    support: np.ndarray
    n_images: int

    def __post_init__(self):
        if self.frechet_distance < 0:
            raise ValidationError("frechet_distance must be non-negative")
        if not 0.0 <= self.weighted_f1 <= 1.0:
            raise ValidationError("weighted_f1 must lie in [0, 1]")
        support = np.asarray(self.support, dtype=np.int64)
        f1 = np.asarray(self.per_class_f1, dtype=np.float64)
        expected = float(f1 @ support) / float(support.sum()) if support.sum() else 0.0
        if abs(expected - self.weighted_f1) > 1e-9:
            raise ValidationError("weighted_f1 must equal the support-weighted mean of per_class_f1")


def features_from_od(od_values: np.ndarray, profile: ReferenceProfile) -> np.ndarray:
    """Descriptor v1 from an OD image: per-channel OD mean (3) and population
    variance (3), mean raw concentration per stain under ``profile`` (3), and
    mean gradient magnitude of the channel-averaged OD (1)."""
    od_values = np.asarray(od_values, dtype=np.float64)
    if profile.stain_matrix.n_s != 3:
        raise ValidationError("feature extraction requires a 3-stain profile")
    means = od_values.mean(axis=(0, 1))
    variances = od_values.var(axis=(0, 1))
    conc = backend.unmix(od_values, pseudo_inverse(profile.stain_matrix))
    conc_means = conc.mean(axis=(0, 1))
    gray = od_values.mean(axis=2)
    if min(gray.shape) >= 2:
        gy, gx = np.gradient(gray)
        grad_mean = float(np.hypot(gx, gy).mean())
    else:
        grad_mean = 0.0
    return np.concatenate([means, variances, conc_means, [grad_mean]])


def extract_features(tile: RgbTile, profile: ReferenceProfile | None = None) -> np.ndarray:
    """Deterministic 10-dim descriptor of a tile (see :func:`features_from_od`)."""
    if profile is None:
        profile = default_profile()
    return features_from_od(rgb_to_od(tile).values, profile)


def summarize(features) -> FeatureSummary:
    """Sample mean and unbiased covariance of >= 2 equal-length feature vectors."""
    rows = [np.asarray(f, dtype=np.float64).reshape(-1) for f in features]
    if len(rows) < 2:
        raise ValidationError(f"need at least 2 feature vectors, got {len(rows)}")
    d = rows[0].shape[0]
    if any(r.shape[0] != d for r in rows):
        raise ValidationError("feature vectors must share one dimension")
    x = np.stack(rows)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    return FeatureSummary(mean=mean, covariance=cov, sample_count=x.shape[0])


def frechet_distance(a: FeatureSummary, b: FeatureSummary) -> float:
    """Squared 2-Wasserstein distance between two Gaussian summaries.

    ``d2 = |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))`` with the
    matrix square-root trace taken from the eigendecomposition of the
    symmetrized product. Tiny negative eigenvalues clamp to zero; ones below
    ``SQRT_EIG_TOL`` raise ``NonPsdCovarianceError``.
    """
    if a.feature_dim != b.feature_dim:
        raise ValidationError(f"feature dims differ: {a.feature_dim} vs {b.feature_dim}")
    diff = a.mean - b.mean
    product = a.covariance @ b.covariance
    sym = 0.5 * (product + product.T)
    eigvals = np.linalg.eigvalsh(sym)
    if float(eigvals.min()) < SQRT_EIG_TOL:
        raise NonPsdCovarianceError(
            f"covariance product eigenvalue {eigvals.min():.3e} below tolerance"
        )
    tr_sqrt = float(np.sqrt(np.clip(eigvals, 0.0, None)).sum())
    d2 = float(diff @ diff) + float(np.trace(a.covariance) + np.trace(b.covariance)) - 2.0 * tr_sqrt
    return max(d2, 0.0)


def weighted_f1(predicted: CellLabelMap, truth: CellLabelMap) -> F1Result:
    """Support-weighted mean per-class F1 over non-background truth pixels.

    Pixels whose ground truth is background are excluded from all counts, so
    predictions there neither help nor hurt. A class with zero truth support
    contributes nothing to the weighted mean. F1 is 0 where precision + recall
    is 0; entirely-background truth raises ``NoCellsError``.
    """
    if predicted.labels.shape != truth.labels.shape:
        raise ValidationError(
            f"label map shapes differ: {predicted.labels.shape} vs {truth.labels.shape}"
        )
    t = truth.labels.ravel()
    p = predicted.labels.ravel()
    fg = t != 0
    if not np.any(fg):
        raise NoCellsError("ground truth contains no cells (all background)")
    t, p = t[fg], p[fg]
    per_class = np.zeros(N_CLASSES, dtype=np.float64)
    support = np.zeros(N_CLASSES, dtype=np.int64)
    numerator = 0.0
    for k in range(1, N_CLASSES + 1):
        tp = int(np.count_nonzero((p == k) & (t == k)))
        fp = int(np.count_nonzero((p == k) & (t != k)))
        fn = int(np.count_nonzero((p != k) & (t == k)))
        support[k - 1] = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[k - 1] = f1
        numerator += f1 * (tp + fn)
    weighted = numerator / int(support.sum())
    return F1Result(weighted_f1=weighted, per_class_f1=per_class, support=support)
