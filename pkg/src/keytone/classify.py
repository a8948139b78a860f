"""L* histogram construction and high/normal/low-key image classification.

Band borders: high-key [60, 100], normal-key [40, 60), low-key [0, 40).
Ties between bands resolve toward the darker category, since dark-tone
adaptation is where chart adaptation pays off most.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .colorcore import LabImage

N_BINS = 101  # one bin per integer L* step, 0..100


class ImageCategory(Enum):
    HIGH_KEY = "high-key"
    NORMAL_KEY = "normal-key"
    LOW_KEY = "low-key"


class ClassifyPolicy(Enum):
    MAX_BAND_MASS = "max-band-mass"
    MEAN_L = "mean-l"


@dataclass(frozen=True)
class CategoryBands:
    """L* intervals per category: low [0, low_high), normal [low_high, normal_high),
    high [normal_high, 100]."""

    low_high: float = 40.0
    normal_high: float = 60.0

    def category_of(self, lightness: float) -> ImageCategory:
        if lightness < self.low_high:
            return ImageCategory.LOW_KEY
        if lightness < self.normal_high:
            return ImageCategory.NORMAL_KEY
        return ImageCategory.HIGH_KEY


@dataclass
class LStarHistogram:
    bins: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS, dtype=np.int64))
    total: int = 0


def lstar_histogram(
    img: LabImage,
    exclude_background: bool = False,
    background_threshold: float = 98.0,
) -> LStarHistogram:
    """Count pixels by rounded L*; optionally drop near-white background pixels
    (L* >= threshold) from both the counts and the total."""
    lightness = img.lightness.ravel()
    if lightness.size == 0:
        raise ValueError("empty input")
    if exclude_background:
        lightness = lightness[lightness < background_threshold]
    idx = np.clip(np.rint(lightness).astype(np.int64), 0, N_BINS - 1)
    bins = np.bincount(idx, minlength=N_BINS)
    return LStarHistogram(bins=bins, total=int(bins.sum()))


def band_masses(h: LStarHistogram, bands: CategoryBands = CategoryBands()):
    """Fractions of histogram mass in the (high, normal, low) bands. Sums to 1."""
    if h.total <= 0:
        raise ValueError("histogram has zero total")
    lo = int(round(bands.low_high))
    hi = int(round(bands.normal_high))
    total = float(h.total)
    low = h.bins[:lo].sum() / total
    normal = h.bins[lo:hi].sum() / total
    high = h.bins[hi:].sum() / total
    return float(high), float(normal), float(low)


def classify(
    h: LStarHistogram,
    bands: CategoryBands = CategoryBands(),
    policy: ClassifyPolicy = ClassifyPolicy.MAX_BAND_MASS,
) -> ImageCategory:
    if h.total <= 0:
        raise ValueError("histogram has zero total")
    if policy is ClassifyPolicy.MEAN_L:
        mean_l = float(np.arange(N_BINS) @ h.bins) / h.total
        return bands.category_of(mean_l)
    high, normal, low = band_masses(h, bands)
    # tie-break order: low-key, then normal-key, then high-key
    best = max(
        [(low, 2, ImageCategory.LOW_KEY),
         (normal, 1, ImageCategory.NORMAL_KEY),
         (high, 0, ImageCategory.HIGH_KEY)],
        key=lambda t: (t[0], t[1]),
    )
    return best[2]
