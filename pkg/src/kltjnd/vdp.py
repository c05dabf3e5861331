"""Convert JND maps into per-pixel distortion-detection probabilities."""

import math
from dataclasses import dataclass

import numpy as np

# a pixel with no tolerance flags any change as near-certainly visible;
# this floor only bounds the threshold ratio
ZERO_JND_GUARD = 1e-6

LOG_HALF = math.log(0.5)


@dataclass
class PsychometricParams:
    """Slope of the detection-probability curve; p(1) = 0.5 by construction."""

    beta_slope: float = 3.5

    def __post_init__(self):
        if not self.beta_slope > 0:
            raise ValueError("slope must be positive")


def psychometric(x, params=None):
    """Detection probability for a distortion-to-threshold ratio.

    p(x) = 1 - exp(log(0.5) * x^slope); p(0) = 0, p(1) = 0.5, p -> 1.
    """
    params = params or PsychometricParams()
    xv = np.asarray(x, dtype=np.float64)
    if np.any(xv < 0.0):
        raise ValueError("ratio must be non-negative")
    out = 1.0 - np.exp(LOG_HALF * np.power(xv, params.beta_slope))
    return float(out) if np.ndim(x) == 0 else out


def jnd_to_vdp(original, distorted, m, params=None):
    """Per-pixel probability that the distortion is visible.

    Ratio = |distorted - original| / max(map, guard); the absolute value
    makes the output independent of distortion sign.
    """
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(distorted, dtype=np.float64)
    jm = np.asarray(m, dtype=np.float64)
    if a.shape != b.shape or a.shape != jm.shape:
        raise ValueError("dimension mismatch between images and map")
    ratio = np.abs(b - a) / np.maximum(jm, ZERO_JND_GUARD)
    return psychometric(ratio, params)


def vdp_rmse(pred, marking):
    """RMSE between a probability map and a subjective marking map.

    Both inputs must lie in [0, 1].
    """
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(marking, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {g.shape}")
    for name, arr in (("prediction", p), ("marking", g)):
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError(f"{name} values outside [0, 1]")
    return float(np.sqrt(np.mean((p - g) ** 2)))
