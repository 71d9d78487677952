"""Shared test utilities and independent oracles."""

import numpy as np

from restain.color import RgbTile, StainMatrix


def full_sweep_tile():
    """16x16 tile whose gray pixels cover every 8-bit channel value once."""
    values = np.arange(256, dtype=np.uint8).reshape(16, 16)
    return RgbTile(np.stack([values] * 3, axis=-1))


def random_stain_matrix(rng, n_s=3):
    """Random well-separated non-negative unit columns."""
    while True:
        cols = rng.uniform(0.05, 1.0, size=(3, n_s))
        cols /= np.linalg.norm(cols, axis=0)
        m = StainMatrix(cols)
        gram = np.abs(cols.T @ cols) - np.eye(n_s)
        if gram.max() < 0.95:  # pairwise angles over ~18 degrees
            return m


def brute_force_weighted_f1(pred: np.ndarray, truth: np.ndarray):
    """Independent oracle: explicit per-pixel confusion-matrix loop."""
    confusion = [[0] * 5 for _ in range(5)]
    for t, p in zip(truth.ravel().tolist(), pred.ravel().tolist()):
        confusion[t][p] += 1
    per_class, support = [], []
    for k in range(1, 5):
        tp = confusion[k][k]
        fn = sum(confusion[k][j] for j in range(5) if j != k)
        fp = sum(confusion[t][k] for t in range(1, 5) if t != k)
        sup = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / sup if sup else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(f1)
        support.append(sup)
    total = sum(support)
    weighted = sum(f * s for f, s in zip(per_class, support)) / total
    return weighted, per_class, support
