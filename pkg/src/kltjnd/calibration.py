"""Rebuild the cumulative-energy prior from subjective vote data.

Pipeline: per-image votes -> 3-sigma outlier filtering -> round-up mean as
the image's critical index -> cumulative energy at that index -> Weibull
maximum-likelihood fit over all collected energies.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import image_io, klt, spectral
from .critical import WeibullParams
from .errors import CalibrationError


@dataclass
class VoteRecord:
    image_id: str
    votes: np.ndarray

    def __post_init__(self):
        self.votes = np.asarray(self.votes, dtype=np.int64)
        if self.votes.size == 0:
            raise ValueError(f"{self.image_id}: empty vote vector")


@dataclass
class AggregationResult:
    image_id: str
    mu: float               # mean of raw votes
    sigma: float            # sample std (1/(n-1)) of raw votes
    lower: float            # mu - 3 sigma
    upper: float            # mu + 3 sigma
    mu_filtered: float      # mean after outlier removal
    critical: int           # ceil(mu_filtered)
    total: int              # raw vote count
    kept: int               # votes retained by the filter
    cumulative_energy: float | None = None  # filled once the image is processed


def sigma_filter(votes):
    """Single-pass 3-sigma outlier rejection using the raw mean/std.

    Sample standard deviation (1/(n-1)); retained votes keep their order.
    """
    v = np.asarray(votes, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two votes to filter")
    mu = float(v.mean())
    sigma = float(v.std(ddof=1))
    keep = (v >= mu - 3.0 * sigma) & (v <= mu + 3.0 * sigma)
    return v[keep]


def aggregate_critical_point(filtered):
    """Round-up mean of the filtered votes."""
    v = np.asarray(filtered, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no votes left after filtering")
    return int(math.ceil(float(v.mean())))


def aggregate_votes(record):
    """Filter + aggregate one image's votes into an AggregationResult."""
    raw = np.asarray(record.votes, dtype=np.float64)
    mu = float(raw.mean())
    sigma = float(raw.std(ddof=1)) if raw.size >= 2 else 0.0
    filtered = sigma_filter(raw) if raw.size >= 2 else raw
    return AggregationResult(
        image_id=record.image_id,
        mu=mu,
        sigma=sigma,
        lower=mu - 3.0 * sigma,
        upper=mu + 3.0 * sigma,
        mu_filtered=float(filtered.mean()),
        critical=aggregate_critical_point(filtered),
        total=int(raw.size),
        kept=int(filtered.size),
    )


def cumulative_energy_at(img, index, blockside=klt.DEFAULT_BLOCKSIDE):
    """Cumulative normalized coefficient energy of an image at one index."""
    padded, _ = image_io.pad_to_block_multiple(np.asarray(img, dtype=np.float64), blockside)
    patches = klt.extract_patches(padded, blockside)
    kernel = klt.eigendecompose_sym(klt.covariance(patches))
    profile = spectral.energy_profile(klt.forward_klt(kernel.basis, patches))
    if not 1 <= index <= profile.cumulative.size:
        raise ValueError(f"critical index {index} outside [1, {profile.cumulative.size}]")
    return float(profile.cumulative[index - 1])


def collect_energy_thresholds(entries, blockside=klt.DEFAULT_BLOCKSIDE):
    """Cumulative energies at the given critical indices, one per image.

    ``entries`` is an iterable of (image path, index). Per-image failures
    are re-raised with the offending path attached.
    """
    values = []
    for path, index in entries:
        try:
            values.append(cumulative_energy_at(image_io.load_image(path), index, blockside))
        except Exception as exc:
            raise CalibrationError(f"{path}: {exc}") from exc
    return np.asarray(values, dtype=np.float64)


def fit_weibull(samples, rel_tol=1e-10, max_iters=200):
    """Two-parameter Weibull fit by maximum likelihood.

    The shape equation is solved with Newton steps safeguarded by a
    sign-change bracket (bisection fallback when a step leaves it); the
    scale then follows in closed form. Samples are pre-scaled by their
    maximum so the internal powers never vanish for extreme shapes.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 10:
        raise ValueError("need at least 10 samples to fit")
    if np.any(x <= 0.0):
        raise ValueError("samples must be positive")
    top = float(x.max())
    if float(x.min()) == top:
        raise ValueError("degenerate sample: all values equal (shape unbounded)")

    ln = np.log(x / top)  # all <= 0, so exp(beta * ln) stays in [0, 1]
    mean_ln = float(ln.mean())

    def residual(beta):
        w = np.exp(beta * ln)
        return float((w * ln).sum() / w.sum()) - mean_ln - 1.0 / beta

    def slope(beta):
        w = np.exp(beta * ln)
        total = w.sum()
        first = (w * ln).sum() / total
        second = (w * ln * ln).sum() / total
        return second - first * first + 1.0 / (beta * beta)

    lo = 1.0
    while residual(lo) > 0.0:
        lo /= 2.0
        if lo < 1e-12:
            raise ValueError("shape bracket failed (samples too concentrated near zero)")
    hi = max(2.0, 2.0 * lo)
    while residual(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("shape bracket failed (samples nearly identical)")

    beta = 0.5 * (lo + hi)
    for _ in range(max_iters):
        value = residual(beta)
        if value > 0.0:
            hi = beta
        else:
            lo = beta
        nxt = beta - value / slope(beta)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - beta) <= rel_tol * beta:
            beta = nxt
            break
        beta = nxt

    eta = top * float(np.exp(np.log(np.mean(np.exp(beta * ln))) / beta))
    return WeibullParams(beta=float(beta), eta=eta)


def read_votes_csv(path):
    """Parse vote CSV in wide (image_id,vote_1,...) or long form.

    Long form has the header ``image_id,participant,vote``. Rows are
    grouped by image in order of first appearance.
    """
    with open(path, newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CalibrationError(f"{path}: empty votes file")
    header = [cell.strip().lower() for cell in rows[0]]
    if header[:1] != ["image_id"]:
        raise CalibrationError(f"{path}: first column must be image_id")

    if header[1:3] == ["participant", "vote"]:
        grouped: dict[str, list[int]] = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) < 3:
                raise CalibrationError(f"{path}:{lineno}: expected 3 columns")
            grouped.setdefault(row[0].strip(), []).append(_parse_vote(row[2], path, lineno))
        return [VoteRecord(image_id=k, votes=np.array(v)) for k, v in grouped.items()]

    if all(name.startswith("vote") for name in header[1:]) and len(header) > 1:
        records = []
        for lineno, row in enumerate(rows[1:], start=2):
            votes = [_parse_vote(cell, path, lineno) for cell in row[1:] if cell.strip()]
            if not votes:
                raise CalibrationError(f"{path}:{lineno}: row has no votes")
            records.append(VoteRecord(image_id=row[0].strip(), votes=np.array(votes)))
        return records

    raise CalibrationError(f"{path}: unrecognized header {header}")


def _parse_vote(cell, path, lineno):
    try:
        return int(cell)
    except ValueError as exc:
        raise CalibrationError(f"{path}:{lineno}: bad vote {cell!r}") from exc
