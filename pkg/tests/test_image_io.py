import numpy as np
import pytest
from PIL import Image

from conftest import noise_image, textured_image
from kltjnd import (
    IdenticalImagesError,
    ImageFormatError,
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


def _psnr_bruteforce(a, b):
    # independent oracle: explicit per-pixel summation
    total = 0.0
    h, w = a.shape
    for i in range(h):
        for j in range(w):
            d = a[i, j] - b[i, j]
            total += d * d
    mse = total / (h * w)
    return 10.0 * np.log10(255.0**2 / mse)


class TestLoadImage:
    def test_pgm_identity_decode(self, tmp_path):
        p = tmp_path / "flat.pgm"
        Image.fromarray(np.full((12, 10), 128, dtype=np.uint8), mode="L").save(p)
        img = load_image(p)
        assert img.shape == (12, 10)
        assert np.all(img == 128.0)

    def test_red_pixel_luma(self, tmp_path):
        p = tmp_path / "red.png"
        rgb = np.zeros((4, 4, 3), dtype=np.uint8)
        rgb[:, :, 0] = 255
        Image.fromarray(rgb, mode="RGB").save(p)
        img = load_image(p)
        assert img == pytest.approx(np.full((4, 4), 0.299 * 255), abs=1e-12)
        assert img[0, 0] == pytest.approx(76.245, abs=1e-12)

    def test_png_against_reference_decoder(self, tmp_path):
        cv2 = pytest.importorskip("cv2")
        rng = np.random.default_rng(7)
        rgb = rng.integers(0, 256, size=(800, 1200, 3), dtype=np.uint8)
        p = tmp_path / "big.png"
        Image.fromarray(rgb, mode="RGB").save(p)
        img = load_image(p)
        assert img.shape == (800, 1200)
        assert img.min() >= 0.0 and img.max() <= 255.0
        bgr = cv2.imread(str(p), cv2.IMREAD_UNCHANGED)
        ref = (
            0.299 * bgr[:, :, 2].astype(np.float64)
            + 0.587 * bgr[:, :, 1].astype(np.float64)
            + 0.114 * bgr[:, :, 0].astype(np.float64)
        )
        assert np.max(np.abs(img - ref)) < 1e-9

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_unreadable_file(self, tmp_path):
        p = tmp_path / "junk.png"
        p.write_bytes(b"this is not an image at all")
        with pytest.raises(ImageFormatError):
            load_image(p)

    def test_16bit_pgm_rejected(self, tmp_path):
        p = tmp_path / "deep.pgm"
        payload = np.arange(64, dtype=">u2").tobytes()
        p.write_bytes(b"P5\n8 4\n65535\n" + payload)
        with pytest.raises(ImageFormatError):
            load_image(p)

    def test_pgm_round_trip_sample_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(33, 47)).astype(np.float64)
        p = tmp_path / "rt.pgm"
        save_image(img, p)
        again = load_image(p)
        assert np.array_equal(img, again)
        save_image(again, p)
        assert np.array_equal(load_image(p), again)


class TestPfm:
    def test_round_trip_exact(self, tmp_path):
        data = noise_image(31, 17, 5, low=-4.0, high=300.0).astype(np.float32)
        p = tmp_path / "m.pfm"
        write_pfm(p, data)
        back = read_pfm(p)
        assert back.shape == (17, 31)
        assert np.array_equal(back, data.astype(np.float64))

    def test_reference_reader_agrees(self, tmp_path):
        cv2 = pytest.importorskip("cv2")
        data = noise_image(24, 12, 11)
        p = tmp_path / "m.pfm"
        write_pfm(p, data)
        ref = cv2.imread(str(p), cv2.IMREAD_UNCHANGED)
        assert ref is not None
        assert np.max(np.abs(ref.astype(np.float64) - data.astype(np.float32))) == 0.0

    def test_load_map_dispatch(self, tmp_path):
        data = np.arange(12, dtype=np.float64).reshape(3, 4)
        pfm = tmp_path / "a.pfm"
        write_pfm(pfm, data)
        assert np.allclose(load_map(pfm), data)
        png = tmp_path / "a.png"
        save_image(data, png)
        assert load_map(png).shape == (3, 4)

    def test_color_pfm_rejected(self, tmp_path):
        p = tmp_path / "c.pfm"
        p.write_bytes(b"PF\n2 2\n-1.0\n" + b"\x00" * 48)
        with pytest.raises(ImageFormatError):
            read_pfm(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "t.pfm"
        p.write_bytes(b"Pf\n4 4\n-1.0\n" + b"\x00" * 10)
        with pytest.raises(ImageFormatError):
            read_pfm(p)


class TestPadding:
    def test_already_multiple_unchanged(self):
        img = noise_image(16, 16, 0)
        padded, dims = pad_to_block_multiple(img, 8)
        assert padded.shape == (16, 16)
        assert dims == (16, 16)
        assert np.array_equal(padded, img)

    def test_replicates_last_column(self):
        img = noise_image(17, 16, 1)
        padded, dims = pad_to_block_multiple(img, 8)
        assert padded.shape == (16, 24)
        assert dims == (16, 17)
        for j in range(17, 24):
            assert np.array_equal(padded[:, j], img[:, 16])

    def test_round_trip_random_sizes(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            h = int(rng.integers(1, 70))
            w = int(rng.integers(1, 70))
            img = rng.uniform(0, 255, size=(h, w))
            padded, dims = pad_to_block_multiple(img, 8)
            assert padded.shape[0] % 8 == 0 and padded.shape[1] % 8 == 0
            assert padded.shape[0] >= h and padded.shape[1] >= w
            assert np.array_equal(crop_to(padded, dims), img)

    def test_interior_untouched(self):
        img = textured_image(19, 13, 2)
        padded, _ = pad_to_block_multiple(img, 8)
        assert np.array_equal(padded[:13, :19], img)

    def test_bad_block(self):
        with pytest.raises(ValueError):
            pad_to_block_multiple(np.zeros((4, 4)), 0)


class TestPsnr:
    def test_identical_signals(self):
        img = noise_image(9, 9, 3)
        with pytest.raises(IdenticalImagesError):
            psnr(img, img.copy())

    def test_unit_offset_analytic(self):
        a = noise_image(20, 10, 4, low=1.0, high=254.0)
        assert psnr(a, a + 1.0) == pytest.approx(48.1308, abs=1e-3)
        assert psnr(a, a + 1.0) == pytest.approx(20.0 * np.log10(255.0), abs=1e-9)

    def test_matches_bruteforce(self):
        a = noise_image(23, 17, 5)
        b = noise_image(23, 17, 6)
        assert psnr(a, b) == pytest.approx(_psnr_bruteforce(a, b), abs=1e-9)

    def test_symmetric(self):
        for seed in range(5):
            a = noise_image(16, 16, seed)
            b = noise_image(16, 16, seed + 100)
            assert psnr(a, b) == psnr(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


class TestExport:
    def test_quantization_rounds_and_clamps(self):
        a = np.array([[-3.0, 0.4, 0.6, 254.5, 300.0]])
        assert np.array_equal(to_uint8(a), np.array([[0, 0, 1, 254, 255]], dtype=np.uint8))

    def test_unknown_extension(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(np.zeros((4, 4)), tmp_path / "x.tiff")
