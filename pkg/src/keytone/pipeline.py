"""End-to-end reproduction experiment: classify an image, build a chart
(standard or category-adapted), print it on the simulated press, characterize,
separate the image and measure how faithful the simulated reproduction is.
"""

from __future__ import annotations

import numpy as np

from . import chartgen
from .chartgen import AdaptationParams, ChartKind, TestChart
from .classify import ClassifyPolicy, ImageCategory, band_masses, classify, lstar_histogram
from .colorcore import LabImage, image_from_srgb
from .netpbm import read_netpbm
from .pressmodel import MeasurementSet, MeasurementSource, PressModel, paper_preset, predict_many, simulate_print
from .evaluate import delta_e_report, shadow_detail_count
from .separation import SeparationOptions, build_separation, fit_forward, separate_image, separate_points

SHADOW_RAMP_STEPS = 21
SHADOW_RAMP_L = (2.0, 28.0)


def load_lab_image(path: str) -> LabImage:
    """Load a P6 PPM or P5 PGM file as a Lab image (PGM as neutral gray)."""
    arr = read_netpbm(path)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return image_from_srgb(arr)


def classify_image(img: LabImage, policy: ClassifyPolicy = ClassifyPolicy.MAX_BAND_MASS,
                   exclude_background: bool = False) -> dict:
    hist = lstar_histogram(img, exclude_background=exclude_background)
    high, normal, low = band_masses(hist)
    category = classify(hist, policy=policy)
    return {
        "category": category.value,
        "masses": {"high": high, "normal": normal, "low": low},
    }


def make_chart(mode: str, category: ImageCategory | None, gamma: float) -> TestChart:
    if mode == "standard":
        return chartgen.standard_chart()
    if mode == "adapted":
        if category is None:
            raise ValueError("adapted mode needs an image category")
        return chartgen.adapted_chart_new(category, AdaptationParams(gamma=gamma))
    raise ValueError(f"unknown chart mode {mode!r}")


def _shadow_ramp_metrics(profile, press: PressModel) -> dict:
    """Separate a neutral shadow gray scale through the profile, render it on
    the press and count how many of its dark steps stay distinguishable."""
    from .colorcore import LabColor

    lightness = np.linspace(*SHADOW_RAMP_L, SHADOW_RAMP_STEPS)  # dark to light
    ids = [f"G{i:02d}" for i in range(SHADOW_RAMP_STEPS)]
    targets = np.stack([lightness, np.zeros_like(lightness),
                        np.zeros_like(lightness)], axis=1)
    cmyk = separate_points(targets, profile)
    reproduced_lab = predict_many(cmyk, press)
    reproduced = MeasurementSet(
        entries={pid: LabColor(*map(float, lab))
                 for pid, lab in zip(ids, reproduced_lab)},
        source=MeasurementSource.SIMULATED, source_name=press.name)
    original = MeasurementSet(
        entries={pid: LabColor(float(l), 0.0, 0.0)
                 for pid, l in zip(ids, lightness)},
        source=MeasurementSource.SIMULATED, source_name="reference")
    return {
        "steps": SHADOW_RAMP_STEPS,
        "l_range": list(SHADOW_RAMP_L),
        "shadow_detail_count": shadow_detail_count(reproduced, ids),
        "reference_count": shadow_detail_count(original, ids),
    }


def run_pipeline(image_path: str, preset: str = "coated", mode: str = "standard",
                 gamma: float = 2.2, grid_size: int = 17,
                 gcr_strength: float = 0.5, black_start: float = 45.0,
                 total_ink_limit: float = 3.2, noise_sigma: float = 0.5,
                 seed: int = 0, category_override: str | None = None) -> dict:
    img = load_lab_image(image_path)
    press = paper_preset(preset)

    cls = classify_image(img)
    category = (ImageCategory(category_override) if category_override
                else ImageCategory(cls["category"]))

    chart = make_chart(mode, category, gamma)
    meas = simulate_print(chart, press, noise_sigma=noise_sigma, seed=seed)
    fwd = fit_forward(meas, chart)
    opts = SeparationOptions(gcr_strength=gcr_strength, black_start=black_start,
                             total_ink_limit=total_ink_limit, grid_size=grid_size)
    profile = build_separation(fwd, opts, source_kind=chart.kind,
                               source_category=chart.category)

    cmyk = separate_image(img, profile)
    reproduced = LabImage(width=img.width, height=img.height,
                          lab=predict_many(cmyk, press))

    report = delta_e_report(img, reproduced)
    de = np.sqrt(np.sum((img.lab - reproduced.lab) ** 2, axis=-1))
    dark = img.lightness < 40.0
    light = img.lightness > 60.0
    return {
        "image": image_path,
        "preset": preset,
        "mode": mode,
        "gamma": gamma,
        "grid_size": grid_size,
        "classification": cls,
        "category_used": category.value,
        "chart_kind": chart.kind.value,
        "forward_fit": {
            "mean_residual": fwd.mean_residual,
            "max_residual": fwd.max_residual,
            "yule_nielsen_n": fwd.model.yule_nielsen_n,
        },
        "delta_e": report,
        "dark_mean_de": float(de[dark].mean()) if dark.any() else None,
        "light_mean_de": float(de[light].mean()) if light.any() else None,
        "shadow_ramp": _shadow_ramp_metrics(profile, press),
    }
