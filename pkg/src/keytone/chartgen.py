"""Test chart generation: the frozen 24x18 standard chart, the two
category-adapted variants (regenerated chart, remapped standard chart) and
K-only gray scales, with CGATS text serialization.

The standard layout is a 6x6x3x4 CMYK lattice filling rows 0-15, single-ink
C/M/Y ramps (8 steps each) on row 16 and a 24-step K-only ramp on row 17.
Paper white lives at R0C0 and R17C0; full black at R17C23.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cgats import CgatsDocument, parse_cgats
from .classify import ImageCategory

ROWS = 18
COLS = 24
N_PATCHES = ROWS * COLS

C_STEPS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
M_STEPS = C_STEPS
Y_STEPS = (0.0, 0.5, 1.0)
K_STEPS = (0.0, 0.33, 0.67, 1.0)

RAMP_STEPS = 8       # per single-ink C/M/Y ramp on row 16
K_RAMP_STEPS = COLS  # row 17


class ChartKind(Enum):
    STANDARD = "standard"
    ADAPTED_NEW = "adapted-new"
    ADAPTED_REMAP = "adapted-remap"
    GRAY_SCALE = "gray-scale"


@dataclass(frozen=True)
class InkCoverage:
    c: float
    m: float
    y: float
    k: float

    def __post_init__(self):
        for v in (self.c, self.m, self.y, self.k):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"coverage {v} outside [0, 1]")

    def as_tuple(self):
        return (self.c, self.m, self.y, self.k)


@dataclass(frozen=True)
class AdaptationParams:
    gamma: float = 2.2
    steps_per_ramp: int = K_RAMP_STEPS

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class Patch:
    row: int
    col: int
    coverage: InkCoverage

    @property
    def id(self) -> str:
        return f"R{self.row}C{self.col}"


@dataclass
class TestChart:
    patches: list[Patch]
    kind: ChartKind
    category: ImageCategory | None = None
    params: AdaptationParams = field(default_factory=lambda: AdaptationParams(gamma=1.0))

    def patch_by_id(self, patch_id: str) -> Patch:
        for p in self.patches:
            if p.id == patch_id:
                return p
        raise KeyError(patch_id)

    def coverages(self) -> np.ndarray:
        """(n_patches, 4) array of CMYK coverages in patch order."""
        return np.array([p.coverage.as_tuple() for p in self.patches])


def _lattice_coverages():
    out = []
    for c in C_STEPS:
        for m in M_STEPS:
            for y in Y_STEPS:
                for k in K_STEPS:
                    out.append((c, m, y, k))
    return out


def standard_chart() -> TestChart:
    """The frozen 432-patch standard chart."""
    patches = []
    lattice = _lattice_coverages()
    idx = 0
    for row in range(16):
        for col in range(COLS):
            patches.append(Patch(row, col, InkCoverage(*lattice[idx])))
            idx += 1
    # row 16: C, M, Y single-ink ramps, 8 steps each
    for i in range(RAMP_STEPS):
        u = i / (RAMP_STEPS - 1)
        patches.append(Patch(16, i, InkCoverage(u, 0, 0, 0)))
    for i in range(RAMP_STEPS):
        u = i / (RAMP_STEPS - 1)
        patches.append(Patch(16, RAMP_STEPS + i, InkCoverage(0, u, 0, 0)))
    for i in range(RAMP_STEPS):
        u = i / (RAMP_STEPS - 1)
        patches.append(Patch(16, 2 * RAMP_STEPS + i, InkCoverage(0, 0, u, 0)))
    # row 17: 24-step K-only gray ramp
    for i in range(K_RAMP_STEPS):
        u = i / (K_RAMP_STEPS - 1)
        patches.append(Patch(17, i, InkCoverage(0, 0, 0, u)))
    return TestChart(patches=patches, kind=ChartKind.STANDARD)


def _inverse_smoothstep(u):
    # closed-form inverse of 3u^2 - 2u^3 on [0, 1]
    u = np.clip(u, 0.0, 1.0)
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * u) / 3.0)


def remap_steps(u, category: ImageCategory, p: AdaptationParams):
    """Monotone bijection of [0, 1] redistributing tone steps toward the
    category's band: low-key densifies dark coverages (u^(1/gamma)), high-key
    light ones (u^gamma), normal-key pulls steps toward the middle.

    Accepts scalars or arrays; endpoints are fixed."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("step value outside [0, 1]")
    if category is ImageCategory.LOW_KEY:
        out = arr ** (1.0 / p.gamma)
    elif category is ImageCategory.HIGH_KEY:
        out = arr ** p.gamma
    else:
        g = p.gamma
        weight = 1.0 - g if g < 1.0 else 1.0 - 1.0 / g
        out = (1.0 - weight) * arr + weight * _inverse_smoothstep(arr)
    # pin endpoints exactly so adapted charts keep paper white and full ink
    out = np.where(arr <= 0.0, 0.0, np.where(arr >= 1.0, 1.0, out))
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(out)
    return out


def adapted_chart_new(category: ImageCategory, p: AdaptationParams) -> TestChart:
    """Regenerate the standard lattice with every step value remapped toward
    the category's tonal band."""
    base = standard_chart()
    patches = [
        Patch(q.row, q.col, InkCoverage(*(remap_steps(v, category, p)
                                          for v in q.coverage.as_tuple())))
        for q in base.patches
    ]
    return TestChart(patches=patches, kind=ChartKind.ADAPTED_NEW,
                     category=category, params=p)


def adapt_standard_chart(chart: TestChart, category: ImageCategory,
                         p: AdaptationParams) -> TestChart:
    """Remap an existing standard chart's coverages channel by channel;
    layout and ids are unchanged."""
    if chart.kind is not ChartKind.STANDARD:
        raise ValueError("can only adapt a standard chart")
    patches = [
        Patch(q.row, q.col, InkCoverage(*(remap_steps(v, category, p)
                                          for v in q.coverage.as_tuple())))
        for q in chart.patches
    ]
    return TestChart(patches=patches, kind=ChartKind.ADAPTED_REMAP,
                     category=category, params=p)


def gray_scale(n: int, k_min: float = 0.0, k_max: float = 1.0) -> TestChart:
    """n K-only patches with K uniformly spaced in [k_min, k_max]."""
    if not (2 <= n <= 256):
        raise ValueError("gray scale needs 2..256 patches")
    if not (0.0 <= k_min < k_max <= 1.0):
        raise ValueError("invalid K range")
    patches = []
    for i in range(n):
        k = k_min + (k_max - k_min) * i / (n - 1)
        patches.append(Patch(i // COLS, i % COLS, InkCoverage(0, 0, 0, k)))
    return TestChart(patches=patches, kind=ChartKind.GRAY_SCALE)


# ---------------------------------------------------------------------------
# CGATS serialization

def _fmt_percent(v: float) -> str:
    # 5 decimals of percent keeps round-trip error below 1e-6 in coverage
    return f"{100.0 * v:.5f}"


def chart_to_cgats(chart: TestChart) -> str:
    doc = CgatsDocument()
    doc.keywords["ORIGINATOR"] = "keytone"
    doc.keywords["CHART_KIND"] = chart.kind.value
    doc.keywords["CATEGORY"] = chart.category.value if chart.category else "none"
    doc.keywords["GAMMA"] = repr(chart.params.gamma)
    doc.keywords["STEPS_PER_RAMP"] = str(chart.params.steps_per_ramp)
    doc.fields = ["SAMPLE_ID", "CMYK_C", "CMYK_M", "CMYK_Y", "CMYK_K"]
    for p in chart.patches:
        doc.rows.append([p.id] + [_fmt_percent(v) for v in p.coverage.as_tuple()])
    return doc.serialize()


def chart_from_cgats(text: str) -> TestChart:
    doc = parse_cgats(text)
    kind = ChartKind(doc.keywords.get("CHART_KIND", "standard"))
    cat_name = doc.keywords.get("CATEGORY", "none")
    category = None if cat_name == "none" else ImageCategory(cat_name)
    params = AdaptationParams(
        gamma=float(doc.keywords.get("GAMMA", "1.0")),
        steps_per_ramp=int(doc.keywords.get("STEPS_PER_RAMP", str(K_RAMP_STEPS))),
    )
    expected = ["SAMPLE_ID", "CMYK_C", "CMYK_M", "CMYK_Y", "CMYK_K"]
    if doc.fields != expected:
        raise ValueError(f"unexpected CGATS fields: {doc.fields}")
    patches = []
    for row in doc.rows:
        sid = row[0]
        if not sid.startswith("R") or "C" not in sid:
            raise ValueError(f"bad sample id {sid!r}")
        r, _, c = sid[1:].partition("C")
        cov = InkCoverage(*(min(1.0, max(0.0, float(v) / 100.0)) for v in row[1:5]))
        patches.append(Patch(int(r), int(c), cov))
    return TestChart(patches=patches, kind=kind, category=category, params=params)
