"""JND map construction, normalization, and RMSE scoring."""

import numpy as np

from .critical import reconstruct_cpl


def jnd_map(original, cpl):
    """Per-pixel absolute difference between an image and its CPL twin."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(cpl, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.abs(a - b)


def normalize_map(m):
    """Divide by the map maximum; an all-zero map is returned unchanged."""
    a = np.asarray(m, dtype=np.float64)
    peak = a.max() if a.size else 0.0
    if peak <= 0.0:
        return a.copy()
    return a / peak


def map_rmse(a, b):
    """Root mean squared per-pixel difference of two (normalized) maps."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((x - y) ** 2)))


def estimate_jnd(img, params=None, blockside=8):
    """Full pipeline: CPL prediction then difference map.

    Returns ``(map, CriticalPoint)``.
    """
    cpl, point = reconstruct_cpl(img, params=params, blockside=blockside)
    return jnd_map(img, cpl), point
