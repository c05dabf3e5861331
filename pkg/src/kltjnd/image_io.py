"""Image decode/encode, luminance conversion, block padding, and PSNR.

Pixel data is carried as 2-D float64 arrays in [0, 255], row-major.
Quantization to 8 bits happens only when writing PNG/PGM; PFM preserves
the real-valued samples exactly (up to float32).
"""

import math
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IdenticalImagesError, ImageFormatError

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM/PPM files as "PPM"


def load_image(path):
    """Decode a PNG, PGM (P5) or PPM (P6) file to a luminance image.

    Color inputs are reduced with the BT.601 weights. Returns a 2-D
    float64 array in [0, 255].
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    try:
        with Image.open(p) as im:
            im.load()
            fmt = im.format
            if fmt not in _SUPPORTED_FORMATS:
                raise ImageFormatError(f"unsupported format {fmt!r}: {p}")
            return _pil_to_gray(im)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"unreadable image file: {p}") from exc


def _pil_to_gray(im):
    if im.width < 1 or im.height < 1:
        raise ImageFormatError("zero-dimension image")
    if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise ImageFormatError(f"16-bit/float sources not supported (mode {im.mode})")
    if im.mode == "L":
        return np.asarray(im, dtype=np.float64)
    rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]


def to_uint8(img):
    """Quantize real-valued samples for 8-bit export (round, clamp)."""
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def save_image(img, path):
    """Write an image or map, dispatching on the file extension.

    ``.png`` / ``.pgm``  -> 8-bit export (round + clamp to [0, 255]).
    ``.pfm``             -> float32 PFM, exact reals, no clamping.
    """
    p = Path(path)
    suffix = p.suffix.lower()
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D image array")
    if suffix == ".pfm":
        write_pfm(p, a)
    elif suffix in (".png", ".pgm"):
        Image.fromarray(to_uint8(a), mode="L").save(p)
    else:
        raise ValueError(f"unsupported output extension {suffix!r} (use .png/.pgm/.pfm)")


def write_pfm(path, data):
    """Write a grayscale PFM (little-endian, scale -1.0, bottom-up rows)."""
    a = np.asarray(data, dtype=np.float32)
    if a.ndim != 2:
        raise ValueError("PFM writer expects a 2-D array")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{a.shape[1]} {a.shape[0]}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(a).astype("<f4").tobytes())


def read_pfm(path):
    """Read a grayscale PFM file to a 2-D float64 array."""
    with open(path, "rb") as f:
        magic = _pfm_token(f)
        if magic == b"PF":
            raise ImageFormatError(f"color PFM not supported: {path}")
        if magic != b"Pf":
            raise ImageFormatError(f"not a PFM file: {path}")
        width = int(_pfm_token(f))
        height = int(_pfm_token(f))
        scale = float(_pfm_token(f))
        if width < 1 or height < 1:
            raise ImageFormatError("zero-dimension PFM")
        dtype = "<f4" if scale < 0 else ">f4"
        raw = f.read(width * height * 4)
    if len(raw) != width * height * 4:
        raise ImageFormatError(f"truncated PFM payload: {path}")
    a = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return np.flipud(a).astype(np.float64)


def _pfm_token(f):
    # whitespace-separated token, '#' comments allowed in the header
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise ImageFormatError("truncated PFM header")
        if c == b"#":
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def load_map(path):
    """Load a real-valued map: PFM directly, PNG/PGM/PPM via the decoder."""
    if Path(path).suffix.lower() == ".pfm":
        return read_pfm(path)
    return load_image(path)


def pad_to_block_multiple(img, block):
    """Edge-replicate an image up to the next multiple of ``block``.

    Returns ``(padded, (height, width))`` with the original dimensions so
    downstream maps can be cropped back. Samples inside the original
    extent are untouched.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    ph = (-h) % block
    pw = (-w) % block
    if ph or pw:
        a = np.pad(a, ((0, ph), (0, pw)), mode="edge")
    return a, (h, w)


def crop_to(img, dims):
    """Crop a padded image/map back to the recorded ``(height, width)``."""
    h, w = dims
    return np.asarray(img)[:h, :w]


def psnr(a, b):
    """Peak signal-to-noise ratio in dB against an 8-bit peak of 255.

    Raises IdenticalImagesError when the MSE is exactly zero (no finite
    PSNR exists).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        raise IdenticalImagesError("images are identical; PSNR is unbounded")
    return 10.0 * math.log10(255.0**2 / mse)
