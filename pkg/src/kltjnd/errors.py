"""Domain-specific exception types."""


class KltJndError(Exception):
    """Base class for errors raised by this package."""


class ImageFormatError(KltJndError):
    """Unreadable file, unsupported format, or invalid image geometry."""


class IdenticalImagesError(KltJndError):
    """PSNR is undefined: the two images are sample-identical."""


class DegenerateImageError(KltJndError):
    """The image carries no coefficient energy (all-zero input)."""


class ConvergenceError(KltJndError):
    """An iterative numerical routine did not converge."""


class UnreachableTargetError(KltJndError):
    """Noise calibration cannot reach the requested PSNR level."""


class CodecError(KltJndError):
    """External codec invocation failed or returned inconsistent data."""


class CalibrationError(KltJndError):
    """A calibration input (votes or image) could not be processed."""
