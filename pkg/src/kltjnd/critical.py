"""Critical spectral index estimation and CPL image reconstruction.

The prior over cumulative energy at the perceptual-lossless point is a
two-parameter Weibull density. Its shape parameter is extreme (~894), so
the density is evaluated strictly in the log domain and the weighted mean
is stabilized by shifting with the largest log-density before
exponentiating; the naive formula underflows for any cumulative value far
from the scale parameter.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import image_io, klt, spectral
from .errors import DegenerateImageError

DEFAULT_BETA = 894.16
DEFAULT_ETA = 0.998


@dataclass
class WeibullParams:
    """Shape/scale of the cumulative-energy prior."""

    beta: float = DEFAULT_BETA
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not (self.beta > 0 and self.eta > 0):
            raise ValueError("Weibull parameters must be positive")


@dataclass
class CriticalPoint:
    """Number of leading spectral components kept for the CPL image."""

    components: int
    cumulative_energy: float
    lossless_fallback: bool = False


def weibull_log_pdf(x, params=None):
    """Log of the Weibull density, stable for extreme shape parameters.

    log f(x) = log(beta/eta) + (beta-1) log(x/eta) - (x/eta)^beta.
    Accepts scalars or arrays; x must be strictly positive.
    """
    params = params or WeibullParams()
    xv = np.asarray(x, dtype=np.float64)
    if np.any(xv <= 0.0):
        raise ValueError("Weibull density requires x > 0")
    ratio_log = np.log(xv / params.eta)
    with np.errstate(over="ignore"):
        powered = np.exp(params.beta * ratio_log)  # may overflow to inf -> log f = -inf
    out = math.log(params.beta / params.eta) + (params.beta - 1.0) * ratio_log - powered
    return float(out) if np.ndim(x) == 0 else out


def estimate_critical_point(cumulative, params=None):
    """Round-up weighted mean index, weights from the Weibull prior.

    Weights are w_k = exp(log f(P_k) - max_j log f(P_j)); the shift makes
    the quotient well-defined whenever any P_k is within floating range of
    the density's mode.
    """
    p = np.asarray(cumulative, dtype=np.float64)
    k = p.size
    if k < 1:
        raise ValueError("empty cumulative profile")
    logf = weibull_log_pdf(p, params)
    peak = float(np.max(logf))
    if not np.isfinite(peak):
        # density vanished at every index: no information, keep everything
        return CriticalPoint(components=k, cumulative_energy=float(p[-1]))
    w = np.exp(logf - peak)
    idx = np.arange(1, k + 1, dtype=np.float64)
    mean = float(np.dot(idx, w) / np.sum(w))
    chosen = min(max(int(math.ceil(mean)), 1), k)
    return CriticalPoint(components=chosen, cumulative_energy=float(p[chosen - 1]))


def _validate_image(img, blockside):
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D luminance image")
    if a.shape[0] < blockside or a.shape[1] < blockside:
        raise ValueError(f"image must be at least {blockside}x{blockside}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite samples")
    if a.min() < 0.0 or a.max() > 255.0:
        raise ValueError("samples must lie in [0, 255]")
    return a


def reconstruct_cpl(img, params=None, blockside=klt.DEFAULT_BLOCKSIDE):
    """Predict the critical perceptual lossless reconstruction of an image.

    Pipeline: pad -> patches -> covariance -> eigenbasis -> analysis ->
    critical index -> truncate -> synthesis -> crop. Returns
    ``(cpl, CriticalPoint)``; CPL samples are left unclamped (clamping
    happens only at 8-bit export).

    Images without usable patch statistics (all-zero content, or a single
    patch) fall back to a lossless result: index = K, CPL = input.
    """
    a = _validate_image(img, blockside)
    padded, dims = image_io.pad_to_block_multiple(a, blockside)
    patches = klt.extract_patches(padded, blockside)
    k, s = patches.shape

    if s < 2:
        return a.copy(), CriticalPoint(components=k, cumulative_energy=1.0, lossless_fallback=True)
    try:
        cov = klt.covariance(patches)
        kernel = klt.eigendecompose_sym(cov)
        coeffs = klt.forward_klt(kernel.basis, patches)
        profile = spectral.energy_profile(coeffs)
    except DegenerateImageError:
        return a.copy(), CriticalPoint(components=k, cumulative_energy=1.0, lossless_fallback=True)

    point = estimate_critical_point(profile.cumulative, params)
    kept = klt.truncate_coefficients(coeffs, point.components)
    rebuilt = klt.assemble_image(
        klt.inverse_klt(kernel.basis, kept), padded.shape[1], padded.shape[0], blockside
    )
    return image_io.crop_to(rebuilt, dims).copy(), point
