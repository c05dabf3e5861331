"""Top-down per-pixel JND estimation.

Predict a critical perceptual lossless (CPL) reconstruction of an image
from its patch-KLT energy spectrum, read the absolute difference as the
JND map, and drive noise-injection, pre-compression smoothing and
distortion-visibility pipelines with it.
"""

from .applications import (
    CommandCodec,
    CompressionGain,
    NoiseConfig,
    PillowJpegCodec,
    bipolar_noise,
    bits_per_pixel,
    calibrate_theta,
    compression_gain,
    inject_noise,
    jnd_smooth,
    run_codec,
)
from .calibration import (
    AggregationResult,
    VoteRecord,
    aggregate_critical_point,
    aggregate_votes,
    collect_energy_thresholds,
    cumulative_energy_at,
    fit_weibull,
    read_votes_csv,
    sigma_filter,
)
from .critical import (
    CriticalPoint,
    WeibullParams,
    estimate_critical_point,
    reconstruct_cpl,
    weibull_log_pdf,
)
from .errors import (
    CalibrationError,
    CodecError,
    ConvergenceError,
    DegenerateImageError,
    IdenticalImagesError,
    ImageFormatError,
    KltJndError,
    UnreachableTargetError,
)
from .image_io import (
    crop_to,
    load_image,
    load_map,
    pad_to_block_multiple,
    psnr,
    read_pfm,
    save_image,
    to_uint8,
    write_pfm,
)
from .jnd import estimate_jnd, jnd_map, map_rmse, normalize_map
from .klt import (
    DEFAULT_BLOCKSIDE,
    KltKernel,
    assemble_image,
    covariance,
    eigendecompose_sym,
    extract_patches,
    forward_klt,
    inverse_klt,
    truncate_coefficients,
)
from .spectral import (
    EnergyProfile,
    coefficient_energy,
    cumulative_energy,
    energy_profile,
    normalize_energy,
)
from .vdp import PsychometricParams, jnd_to_vdp, psychometric, vdp_rmse

__version__ = "0.1.0"
