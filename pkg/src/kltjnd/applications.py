"""JND-guided noise injection, pre-compression smoothing, and codec gain.

Noise is bipolar (+/-1 per pixel) from a seeded counter-based generator
(Philox), so a given (image, map, seed) always produces the same
contaminated image and the PSNR-targeted amplitude search sees a fixed
noise field across probes.
"""

import io
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import image_io
from .errors import CodecError, UnreachableTargetError

THETA_CAP = 2.0**20
PSNR_TOL_DB = 0.05
MAX_BISECT_ITERS = 60


@dataclass
class NoiseConfig:
    theta: float = 1.0
    seed: int = 0
    target_psnr: float | None = None

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be non-negative")


@dataclass
class CompressionGain:
    delta_bitrate: float          # percent saved
    delta_psnr: float             # percent lost
    gain: float | None            # None when delta_psnr <= 0


def bipolar_noise(shape, seed):
    """Deterministic +/-1 field for a given seed."""
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def inject_noise(img, m, cfg):
    """Add theta * noise * map to the image, clamped to [0, 255]."""
    a = np.asarray(img, dtype=np.float64)
    jm = np.asarray(m, dtype=np.float64)
    if a.shape != jm.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {jm.shape}")
    noise = bipolar_noise(a.shape, cfg.seed)
    return np.clip(a + cfg.theta * noise * jm, 0.0, 255.0)


def calibrate_theta(img, m, target_psnr, seed, tol_db=PSNR_TOL_DB, max_iters=MAX_BISECT_ITERS):
    """Bisect the noise amplitude until the injected PSNR hits the target.

    The noise field is fixed by the seed for every probe, which keeps the
    PSNR monotone non-increasing in theta up to clamping. Raises
    UnreachableTargetError for an all-zero map or when doubling theta up
    to the cap never drops the PSNR below the target (clamping floor).
    """
    a = np.asarray(img, dtype=np.float64)
    jm = np.asarray(m, dtype=np.float64)
    if a.shape != jm.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {jm.shape}")
    if not np.any(jm > 0):
        raise UnreachableTargetError("all-zero JND map: injection never changes the image")

    noise = bipolar_noise(a.shape, seed)

    def probe(theta):
        out = np.clip(a + theta * noise * jm, 0.0, 255.0)
        mse = np.mean((out - a) ** 2)
        return np.inf if mse == 0.0 else 10.0 * np.log10(255.0**2 / mse)

    hi = 1.0
    while probe(hi) >= target_psnr:
        hi *= 2.0
        if hi > THETA_CAP:
            raise UnreachableTargetError(
                f"target {target_psnr} dB unreachable within theta cap {THETA_CAP}"
            )
    lo = 0.0
    theta = hi
    for _ in range(max_iters):
        theta = 0.5 * (lo + hi)
        achieved = probe(theta)
        if abs(achieved - target_psnr) <= tol_db:
            break
        if achieved > target_psnr:
            lo = theta
        else:
            hi = theta
    return theta


def jnd_smooth(img, m, blockside=8):
    """Shrink each pixel toward its block mean by up to the map value.

    With deviation d = pixel - blockmean: d < -m adds m, d > m subtracts
    m, otherwise the pixel becomes the block mean (boundary |d| = m
    included). A zero map leaves the image unchanged.
    """
    a = np.asarray(img, dtype=np.float64)
    jm = np.asarray(m, dtype=np.float64)
    if a.shape != jm.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {jm.shape}")
    padded, dims = image_io.pad_to_block_multiple(a, blockside)
    pm, _ = image_io.pad_to_block_multiple(jm, blockside)
    h, w = padded.shape
    means = (
        padded.reshape(h // blockside, blockside, w // blockside, blockside)
        .mean(axis=(1, 3))
        .repeat(blockside, axis=0)
        .repeat(blockside, axis=1)
    )
    dev = padded - means
    out = np.where(dev < -pm, padded + pm, np.where(dev > pm, padded - pm, means))
    return image_io.crop_to(out, dims).copy()


def bits_per_pixel(n_bytes, width, height):
    """Compressed size normalized by pixel count."""
    if width < 1 or height < 1:
        raise ValueError("dimensions must be positive")
    return n_bytes * 8.0 / (width * height)


def compression_gain(bitrate_ori, bitrate_jnd, psnr_ori, psnr_jnd):
    """Percent bitrate saving over percent PSNR reduction.

    gain is None when the PSNR did not drop (ratio undefined).
    """
    if bitrate_ori <= 0:
        raise ValueError("reference bitrate must be positive")
    if psnr_ori <= 0:
        raise ValueError("reference PSNR must be positive")
    delta_bitrate = (bitrate_ori - bitrate_jnd) / bitrate_ori * 100.0
    delta_psnr = (psnr_ori - psnr_jnd) / psnr_ori * 100.0
    gain = delta_bitrate / delta_psnr if delta_psnr > 0 else None
    return CompressionGain(delta_bitrate=delta_bitrate, delta_psnr=delta_psnr, gain=gain)


class PillowJpegCodec:
    """In-process JPEG adapter; quality maps to libjpeg's 1..95 scale."""

    def compress(self, img, quality):
        data = io.BytesIO()
        Image.fromarray(image_io.to_uint8(img), mode="L").save(
            data, format="JPEG", quality=int(quality)
        )
        payload = data.getvalue()
        decoded = np.asarray(
            Image.open(io.BytesIO(payload)).convert("L"), dtype=np.float64
        )
        return len(payload), decoded


@dataclass
class CommandCodec:
    """External codec driven by command templates.

    ``encode_cmd`` receives ``{in}`` (PNG path), ``{out}`` (compressed
    path) and ``{quality}``. ``decode_cmd``, when given, receives ``{in}``
    (compressed path) and ``{out}`` (PNG path); otherwise the compressed
    file is opened directly with Pillow.
    """

    encode_cmd: str
    decode_cmd: str | None = None

    def compress(self, img, quality):
        with tempfile.TemporaryDirectory(prefix="kltjnd-codec-") as td:
            tdir = Path(td)
            src = tdir / "input.png"
            comp = tdir / "compressed.bin"
            image_io.save_image(img, src)
            self._run(self.encode_cmd.format(**{"in": src, "out": comp, "quality": quality}))
            if not comp.is_file() or comp.stat().st_size == 0:
                raise CodecError("encoder produced no output")
            n_bytes = comp.stat().st_size
            if self.decode_cmd:
                back = tdir / "decoded.png"
                self._run(self.decode_cmd.format(**{"in": comp, "out": back}))
                decoded = image_io.load_image(back)
            else:
                try:
                    with Image.open(comp) as im:
                        decoded = np.asarray(im.convert("L"), dtype=np.float64)
                except Exception as exc:
                    raise CodecError(f"cannot decode codec output: {exc}") from exc
            return n_bytes, decoded

    @staticmethod
    def _run(cmd):
        try:
            subprocess.run(shlex.split(cmd), check=True, capture_output=True)
        except (subprocess.CalledProcessError, OSError) as exc:
            raise CodecError(f"codec command failed: {cmd}") from exc


def run_codec(img, quality, codec):
    """Compress/decode through an adapter; returns (bpp, decoded image)."""
    a = np.asarray(img, dtype=np.float64)
    n_bytes, decoded = codec.compress(a, quality)
    if decoded.shape != a.shape:
        raise CodecError(f"decoded dimensions {decoded.shape} do not match input {a.shape}")
    return bits_per_pixel(n_bytes, a.shape[1], a.shape[0]), decoded
