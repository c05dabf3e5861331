"""Shared synthetic-image generators and acceptance reporting."""

import numpy as np


def textured_image(width, height, seed, grain=1.2):
    """Natural-looking luminance field: smooth base + gratings + fine grain.

    A few low-frequency components model macro structure, a band of
    mid-frequency gratings models texture, and a small amount of seeded
    grain keeps the spectrum from collapsing onto a handful of components.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.full((height, width), rng.uniform(100.0, 150.0))
    for _ in range(6):
        fx = rng.uniform(0.2, 3.0) / width
        fy = rng.uniform(0.2, 3.0) / height
        img += rng.uniform(10.0, 28.0) * np.cos(
            2.0 * np.pi * (fx * x + fy * y) + rng.uniform(0.0, 2.0 * np.pi)
        )
    for _ in range(14):
        fx = rng.uniform(0.02, 0.18)
        fy = rng.uniform(0.02, 0.18)
        img += rng.uniform(1.5, 6.0) * np.cos(
            2.0 * np.pi * (fx * x + fy * y) + rng.uniform(0.0, 2.0 * np.pi)
        )
    img += rng.normal(0.0, grain, size=(height, width))
    return np.clip(img, 0.0, 255.0)


def noise_image(width, height, seed, low=0.0, high=255.0):
    """Uniform random luminance field."""
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, size=(height, width))


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {verdict}", flush=True)
