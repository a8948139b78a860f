"""Shared fixtures: a small synthetic image corpus written once per session."""

import numpy as np
import pytest

from keytone.netpbm import write_netpbm


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Directory with one low-key and one high-key PPM test image.

    Both are drawn from a single seeded generator, so their pixel data is
    stable across runs (several expected results depend on it)."""
    d = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(7)
    h, w = 64, 96

    base = np.linspace(8, 70, w)[None, :] * np.ones((h, 1))
    v = np.clip(base + rng.normal(0, 12, (h, w)), 2, 110)
    rgb = np.stack([v * 1.0, v * 0.95, v * 0.9], axis=2).astype(np.uint8)
    write_netpbm(str(d / "lowkey.ppm"), rgb)

    hi = np.clip(np.linspace(180, 250, w)[None, :] * np.ones((h, 1))
                 + rng.normal(0, 10, (h, w)), 150, 255)
    rgbh = np.stack([hi, hi * 0.98, hi * 0.96], axis=2).astype(np.uint8)
    write_netpbm(str(d / "highkey.ppm"), rgbh)
    return d


@pytest.fixture(scope="session")
def lowkey_image(corpus_dir):
    return str(corpus_dir / "lowkey.ppm")


@pytest.fixture(scope="session")
def highkey_image(corpus_dir):
    return str(corpus_dir / "highkey.ppm")
