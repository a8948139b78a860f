import numpy as np
import pytest
from hypothesis import given, strategies as st

from keytone.classify import (
    CategoryBands, ClassifyPolicy, ImageCategory, LStarHistogram, band_masses,
    classify, lstar_histogram,
)
from keytone.colorcore import LabImage


def _image_with_lightness(values) -> LabImage:
    values = np.asarray(values, dtype=float).ravel()
    lab = np.zeros((1, values.size, 3))
    lab[0, :, 0] = values
    return LabImage(width=values.size, height=1, lab=lab)


def _hist(values) -> LStarHistogram:
    return lstar_histogram(_image_with_lightness(values))


def test_band_borders():
    # low [0, 40), normal [40, 60), high [60, 100]
    assert classify(_hist([39.0])) is ImageCategory.LOW_KEY
    assert classify(_hist([40.0])) is ImageCategory.NORMAL_KEY
    assert classify(_hist([59.0])) is ImageCategory.NORMAL_KEY
    assert classify(_hist([60.0])) is ImageCategory.HIGH_KEY
    assert classify(_hist([100.0])) is ImageCategory.HIGH_KEY


def test_tie_breaks_toward_darker_band():
    assert classify(_hist([20.0, 50.0])) is ImageCategory.LOW_KEY
    assert classify(_hist([50.0, 80.0])) is ImageCategory.NORMAL_KEY
    assert classify(_hist([20.0, 80.0])) is ImageCategory.LOW_KEY


def test_mean_l_policy():
    # mass split 60/40 across low/high: mean (30*0.6 + 80*0.4 = 50) is normal
    values = [30.0] * 6 + [80.0] * 4
    assert classify(_hist(values), policy=ClassifyPolicy.MAX_BAND_MASS) \
        is ImageCategory.LOW_KEY
    assert classify(_hist(values), policy=ClassifyPolicy.MEAN_L) \
        is ImageCategory.NORMAL_KEY


def test_band_masses_order_and_sum():
    h = _hist([10.0, 50.0, 50.0, 90.0])
    high, normal, low = band_masses(h)
    assert (high, normal, low) == pytest.approx((0.25, 0.5, 0.25))


def test_background_exclusion():
    values = [20.0] * 3 + [99.0] * 7  # near-white background dominates
    img = _image_with_lightness(values)
    assert classify(lstar_histogram(img)) is ImageCategory.HIGH_KEY
    excluded = lstar_histogram(img, exclude_background=True)
    assert excluded.total == 3
    assert classify(excluded) is ImageCategory.LOW_KEY


def test_histogram_clips_out_of_range():
    h = _hist([-3.0, 104.0])
    assert h.bins[0] == 1 and h.bins[100] == 1


def test_empty_inputs_rejected():
    with pytest.raises(ValueError):
        band_masses(LStarHistogram())
    with pytest.raises(ValueError):
        classify(LStarHistogram())


def test_category_of_bands():
    bands = CategoryBands()
    assert bands.category_of(39.9) is ImageCategory.LOW_KEY
    assert bands.category_of(40.0) is ImageCategory.NORMAL_KEY
    assert bands.category_of(60.0) is ImageCategory.HIGH_KEY


@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=200))
def test_masses_always_sum_to_one(values):
    high, normal, low = band_masses(_hist(values))
    assert high + normal + low == pytest.approx(1.0)
