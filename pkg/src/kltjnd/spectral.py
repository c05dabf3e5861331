"""Per-component energy statistics of the coefficient matrix."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImageError

# below this total energy (intensity^2 units) an image is treated as
# constant/contentless
TOTAL_ENERGY_EPS = 1e-12


@dataclass
class EnergyProfile:
    energy: np.ndarray      # mean squared coefficient per component
    normalized: np.ndarray  # energy / total
    cumulative: np.ndarray  # running sum of normalized


def coefficient_energy(coeffs):
    """Mean squared coefficient of each spectral row."""
    y = np.asarray(coeffs, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError("expected a K x S coefficient matrix")
    return np.mean(y * y, axis=1)


def normalize_energy(energy):
    """Energy fractions summing to 1; error on contentless input."""
    e = np.asarray(energy, dtype=np.float64)
    total = float(e.sum())
    if total <= TOTAL_ENERGY_EPS:
        raise DegenerateImageError(f"total coefficient energy {total} below threshold")
    return e / total


def cumulative_energy(normalized):
    """Running sum of the normalized energies (ends at 1)."""
    return np.cumsum(np.asarray(normalized, dtype=np.float64))


def energy_profile(coeffs):
    """Full profile for a coefficient matrix (may raise DegenerateImageError)."""
    e = coefficient_energy(coeffs)
    p = normalize_energy(e)
    return EnergyProfile(energy=e, normalized=p, cumulative=cumulative_energy(p))
