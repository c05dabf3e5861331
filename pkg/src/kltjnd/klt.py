"""Block KLT: patch extraction, covariance, Jacobi eigensolver, transforms.

The transform basis is recomputed per image from the sample covariance of
its non-overlapping patches, so earlier basis vectors capture the image's
own dominant structure. Note the analysis/synthesis pair applies the basis
to the raw (uncentered) patch matrix; centering is used only when
estimating the covariance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

DEFAULT_BLOCKSIDE = 8

# Jacobi sweep controls: converged when the off-diagonal Frobenius norm
# falls below OFFDIAG_TOL * trace.
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100


@dataclass
class KltKernel:
    """Orthonormal basis (columns) and its eigenvalues, sorted descending."""

    basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def size(self):
        return self.basis.shape[0]


def extract_patches(img, blockside=DEFAULT_BLOCKSIDE):
    """Vectorize non-overlapping blockside x blockside patches.

    Column s of the result is the s-th patch in raster order (left to
    right, top to bottom), itself flattened row-major. Image dimensions
    must already be multiples of ``blockside``.
    """
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    if h % blockside or w % blockside:
        raise ValueError(
            f"dimensions {w}x{h} not multiples of {blockside}; pad_to_block_multiple first"
        )
    k = blockside * blockside
    patches = (
        a.reshape(h // blockside, blockside, w // blockside, blockside)
        .transpose(0, 2, 1, 3)
        .reshape(-1, k)
    )
    return np.ascontiguousarray(patches.T)


def assemble_image(patches, width, height, blockside=DEFAULT_BLOCKSIDE):
    """Inverse of extract_patches. Samples are not clamped here."""
    x = np.asarray(patches, dtype=np.float64)
    k, s = x.shape
    if k != blockside * blockside or s * k != width * height:
        raise ValueError(f"patch matrix {k}x{s} does not tile {width}x{height}")
    return (
        x.T.reshape(height // blockside, width // blockside, blockside, blockside)
        .transpose(0, 2, 1, 3)
        .reshape(height, width)
    )


def covariance(patches):
    """Unbiased sample covariance of the patch columns (1/(S-1) norm)."""
    x = np.asarray(patches, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("covariance needs a K x S matrix with S >= 2")
    centered = x - x.mean(axis=1, keepdims=True)
    c = centered @ centered.T / (x.shape[1] - 1)
    # kill BLAS rounding asymmetry so the eigensolver sees an exactly
    # symmetric matrix
    return (c + c.T) / 2.0


def eigendecompose_sym(c, max_sweeps=MAX_SWEEPS):
    """Eigendecompose a symmetric matrix with cyclic Jacobi rotations.

    Returns a KltKernel with eigenvalues sorted non-increasing (stable
    order among ties) and each basis column oriented so its
    largest-magnitude entry is non-negative (first such entry on ties).

    Raises ConvergenceError if the sweep cap is hit, ValueError if the
    input is not symmetric within tolerance.
    """
    a = np.array(c, dtype=np.float64, copy=True)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if float(np.max(np.abs(a - a.T))) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric within tolerance")

    v = np.eye(k)
    thresh = OFFDIAG_TOL * max(abs(float(np.trace(a))), np.finfo(np.float64).tiny)
    # rotations on elements below skip cannot push the off-diagonal norm
    # back above thresh, so they are wasted work
    skip = thresh / k

    for _ in range(max_sweeps):
        off = float(np.sqrt(2.0 * np.sum(np.tril(a, -1) ** 2)))
        if off <= thresh:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * cs

                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = cs * rp - sn * rq
                a[q, :] = sn * rp + cs * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = cs * cp - sn * cq
                a[:, q] = sn * cp + cs * cq
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cs * vp - sn * vq
                v[:, q] = sn * vp + cs * vq
    else:
        raise ConvergenceError(f"Jacobi did not converge within {max_sweeps} sweeps")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    basis = v[:, order]

    anchor = np.argmax(np.abs(basis), axis=0)
    flip = basis[anchor, np.arange(k)] < 0
    basis[:, flip] *= -1.0
    return KltKernel(basis=basis, eigenvalues=eigenvalues)


def forward_klt(basis, patches):
    """Analysis transform: coefficient matrix = basis^T @ patches."""
    b = np.asarray(basis, dtype=np.float64)
    x = np.asarray(patches, dtype=np.float64)
    if b.shape[0] != x.shape[0]:
        raise ValueError(f"basis {b.shape} incompatible with patches {x.shape}")
    return b.T @ x


def truncate_coefficients(coeffs, keep):
    """Zero all spectral rows after the first ``keep`` rows."""
    y = np.asarray(coeffs, dtype=np.float64)
    if not 1 <= keep <= y.shape[0]:
        raise ValueError(f"component count {keep} outside [1, {y.shape[0]}]")
    out = y.copy()
    out[keep:, :] = 0.0
    return out


def inverse_klt(basis, coeffs):
    """Synthesis transform: patches = basis @ coefficients."""
    b = np.asarray(basis, dtype=np.float64)
    y = np.asarray(coeffs, dtype=np.float64)
    if b.shape[1] != y.shape[0]:
        raise ValueError(f"basis {b.shape} incompatible with coefficients {y.shape}")
    return b @ y
