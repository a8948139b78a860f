"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines
even when everything passes.
"""

import itertools
import time

import numpy as np

from keytone import chartgen, pipeline
from keytone.chartgen import AdaptationParams
from keytone.classify import ClassifyPolicy, ImageCategory, classify, lstar_histogram
from keytone.colorcore import LabImage, xyz_to_lab_array
from keytone.evaluate import Judgment, bradley_terry
from keytone.pressmodel import (
    N_PRIMARIES, paper_preset, demichel_weights, predict_many, simulate_print,
)
from keytone.separation import (
    SeparationOptions, build_separation, fit_forward, profile_from_text,
    profile_to_text, separate_points,
)


class Criterion:
    """Times a criterion body and prints exactly one PASS/FAIL line."""

    def __init__(self, number: int, label: str, budget_s: float | None = None):
        self.number, self.label, self.budget = number, label, budget_s

    def __enter__(self):
        self.t0 = time.monotonic()
        self.checks: list[tuple[bool, str]] = []
        return self

    def check(self, ok: bool, detail: str):
        self.checks.append((bool(ok), detail))

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.t0
        if exc_type is not None:
            print(f"criterion {self.number}: FAIL ({self.label}; raised {exc!r})")
            return False
        if self.budget is not None:
            self.check(elapsed < self.budget,
                       f"runtime {elapsed:.1f}s < {self.budget:.0f}s")
        ok = all(c for c, _ in self.checks)
        detail = "; ".join(d for _, d in self.checks)
        print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} "
              f"({self.label}; {detail}; {elapsed:.1f}s)")
        failed = [d for c, d in self.checks if not c]
        assert not failed, f"criterion {self.number} failed: {failed}"
        return False


_FIT_CACHE: dict = {}


def _fitted_standard():
    """Forward model fitted from a noise-free standard chart print.

    Computed lazily so criterion 3 times the fit itself; later criteria
    reuse the cached result."""
    if "fwd" not in _FIT_CACHE:
        chart = chartgen.standard_chart()
        meas = simulate_print(chart, paper_preset("coated"))
        _FIT_CACHE["fwd"] = fit_forward(meas, chart)
    return _FIT_CACHE["fwd"]


def _band_image(rng, band_lo, band_hi):
    """1000 pixels, 95% in [band_lo, band_hi), 5% spread over the rest."""
    n = 1000
    values = rng.uniform(band_lo + 0.5, band_hi - 0.5, n)
    stray = rng.uniform(0.0, 100.0, n // 20)
    values[:stray.size] = stray
    lab = np.zeros((1, n, 3))
    lab[0, :, 0] = values
    return LabImage(width=n, height=1, lab=lab)


def test_criterion_1_classification_borders():
    rng = np.random.default_rng(42)
    cases = [(0.0, 40.0, ImageCategory.LOW_KEY),
             (40.0, 60.0, ImageCategory.NORMAL_KEY),
             (60.0, 100.0, ImageCategory.HIGH_KEY)]
    with Criterion(1, "classification borders", budget_s=1.0) as c:
        correct = 0
        for lo, hi, expected in cases:
            for _ in range(10):
                img = _band_image(rng, lo, hi)
                hist = lstar_histogram(img)
                hits = (classify(hist, policy=ClassifyPolicy.MAX_BAND_MASS) is expected
                        and classify(hist, policy=ClassifyPolicy.MEAN_L) is expected)
                correct += hits
        c.check(correct == 30, f"{correct}/30 images correct, both policies")


def test_criterion_2_demichel_sanity():
    with Criterion(2, "Demichel/Neugebauer sanity", budget_s=1.0) as c:
        rng = np.random.default_rng(7)
        w = demichel_weights(rng.random((10_000, 4)))
        err = float(np.max(np.abs(w.sum(axis=1) - 1.0)))
        c.check(err < 1e-12, f"weight sum error {err:.2e} < 1e-12")

        model = paper_preset("coated")
        corners = np.array([[float(i >> b & 1) for b in range(4)]
                            for i in range(N_PRIMARIES)])
        lab = predict_many(corners, model)
        expected = xyz_to_lab_array(model.primaries)
        worst = float(np.max(np.abs(lab - expected)))
        c.check(worst < 1e-9, f"pure-coverage prediction error {worst:.2e}")


def test_criterion_3_forward_fit_oracle():
    with Criterion(3, "forward-fit oracle equivalence", budget_s=10.0) as c:
        fwd = _fitted_standard()
        c.check(fwd.mean_residual <= 0.1,
                f"mean dE {fwd.mean_residual:.4f} <= 0.1")
        c.check(fwd.max_residual <= 0.5,
                f"max dE {fwd.max_residual:.4f} <= 0.5")


def test_criterion_4_separation_round_trip():
    with Criterion(4, "separation round trip", budget_s=60.0) as c:
        fwd = _fitted_standard()
        rng = np.random.default_rng(12)
        opts = SeparationOptions(grid_size=17)
        cov = rng.random((800, 4))
        cov = cov[cov.sum(axis=1) <= opts.total_ink_limit][:500]
        assert len(cov) == 500
        targets = predict_many(cov, fwd.model)
        profile = build_separation(fwd, opts)
        back = predict_many(separate_points(targets, profile), fwd.model)
        de = np.sqrt(np.sum((targets - back) ** 2, axis=1))
        mean, p95 = float(de.mean()), float(np.percentile(de, 95))
        c.check(mean <= 2.0, f"mean dE {mean:.3f} <= 2.0")
        c.check(p95 <= 4.0, f"p95 dE {p95:.3f} <= 4.0")


def test_criterion_5_low_key_shadow_detail(lowkey_image):
    with Criterion(5, "low-key shadow detail, adapted vs standard",
                   budget_s=120.0) as c:
        std = pipeline.run_pipeline(lowkey_image, mode="standard", grid_size=9)
        adapted = pipeline.run_pipeline(lowkey_image, mode="adapted",
                                        gamma=2.2, grid_size=9)
        c.check(adapted["classification"]["category"] == "low-key",
                "corpus image classified low-key")
        n_std = std["shadow_ramp"]["shadow_detail_count"]
        n_ad = adapted["shadow_ramp"]["shadow_detail_count"]
        c.check(n_ad > n_std, f"shadow steps {n_ad} > {n_std}")
        c.check(adapted["dark_mean_de"] < std["dark_mean_de"],
                f"dark mean dE {adapted['dark_mean_de']:.3f} < "
                f"{std['dark_mean_de']:.3f}")


def test_criterion_6_high_key_no_difference(highkey_image):
    with Criterion(6, "high-key images show no difference", budget_s=120.0) as c:
        std = pipeline.run_pipeline(highkey_image, mode="standard", grid_size=9)
        adapted = pipeline.run_pipeline(highkey_image, mode="adapted", gamma=2.2,
                                        grid_size=9, category_override="low-key")
        c.check(std["classification"]["category"] == "high-key",
                "corpus image classified high-key")
        diff = abs(adapted["light_mean_de"] - std["light_mean_de"])
        c.check(diff <= 0.5, f"|mean dE difference| {diff:.3f} <= 0.5 over L*>60")


def test_criterion_7_uncoated_shadows_lighter():
    with Criterion(7, "uncoated dark patches lighter than coated") as c:
        ramp = chartgen.gray_scale(24, 0.0, 1.0)
        coated = simulate_print(ramp, paper_preset("coated"))
        uncoated = simulate_print(ramp, paper_preset("uncoated"))
        dark = [p.id for p in ramp.patches if p.coverage.k >= 0.8]
        margin = min(uncoated.entries[i].L - coated.entries[i].L for i in dark)
        c.check(margin > 0.0,
                f"all {len(dark)} patches with k>=0.8 lighter (min +{margin:.2f} L*)")


def test_criterion_8_bradley_terry():
    with Criterion(8, "Bradley-Terry recovery") as c:
        js = [Judgment("s", "j", f"P{i}", "A", "B", "left", "t") for i in range(3)]
        js.append(Judgment("s", "j", "P3", "A", "B", "right", "t"))
        r = bradley_terry(js)
        ratio = r.strengths["A"] / r.strengths["B"]
        c.check(abs(ratio - 3.0) <= 1e-6, f"closed-form ratio {ratio:.8f} = 3.0")

        truth = {"A": 0.5, "B": 0.3, "C": 0.2}
        rng = np.random.default_rng(99)
        sim = []
        pairs = list(itertools.combinations(sorted(truth), 2))
        for i in range(100_000):
            a, b = pairs[i % 3]
            p_a = truth[a] / (truth[a] + truth[b])
            choice = "left" if rng.random() < p_a else "right"
            sim.append(Judgment("mc", "j", f"P{i}", a, b, choice, "t"))
        rec = bradley_terry(sim).strengths
        worst = max(abs(rec[v] - truth[v]) for v in truth)
        c.check(worst <= 0.02, f"Monte-Carlo recovery off by {worst:.4f} <= 0.02")


def test_criterion_9_format_round_trips():
    with Criterion(9, "format round trips") as c:
        chart = chartgen.adapted_chart_new(ImageCategory.LOW_KEY,
                                           AdaptationParams(gamma=2.2))
        text = chartgen.chart_to_cgats(chart)
        c.check(text == chartgen.chart_to_cgats(
            chartgen.adapted_chart_new(ImageCategory.LOW_KEY,
                                       AdaptationParams(gamma=2.2))),
                "chart serialization byte-deterministic")
        back = chartgen.chart_from_cgats(text)
        cov_err = float(np.max(np.abs(back.coverages() - chart.coverages())))
        c.check(cov_err <= 1e-6, f"chart coverage round trip {cov_err:.2e} <= 1e-6")
        c.check([p.id for p in back.patches] == [p.id for p in chart.patches],
                "patch ids preserved")

        profile = build_separation(_fitted_standard(),
                                   SeparationOptions(grid_size=5))
        reread = profile_from_text(profile_to_text(profile))
        c.check(np.array_equal(reread.nodes, profile.nodes)
                and np.array_equal(reread.in_gamut, profile.in_gamut)
                and reread.options == profile.options,
                "profile file round trip bit-exact")
