"""Simulated halftone press: Demichel coverage weights, Neugebauer averaging
with a Yule-Nielsen exponent, per-ink dot-gain (TVI) curves, plus coated and
uncoated paper presets and chart "printing" into measurement sets.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cgats import CgatsDocument, parse_cgats
from .chartgen import InkCoverage, TestChart
from .colorcore import LabColor, lab_to_xyz_array, xyz_to_lab_array

INKS = "CMYK"
N_PRIMARIES = 16
TVI_KNOTS = np.linspace(0.0, 1.0, 11)

# Neugebauer primary order: index bit 0 = C, 1 = M, 2 = Y, 3 = K.
# Index 0 is paper white, 15 the four-ink overprint.
PRIMARY_NAMES = [
    "".join(INKS[b] for b in range(4) if i >> b & 1) or "W"
    for i in range(N_PRIMARIES)
]


@dataclass
class PressModel:
    name: str
    primaries: np.ndarray            # (16, 3) XYZ, PRIMARY_NAMES order
    tvi: np.ndarray                  # (4, 11) effective coverage at TVI_KNOTS
    yule_nielsen_n: float = 1.0

    def __post_init__(self):
        self.primaries = np.asarray(self.primaries, dtype=float)
        self.tvi = np.asarray(self.tvi, dtype=float)
        if self.primaries.shape != (N_PRIMARIES, 3):
            raise ValueError("need 16 XYZ primaries")
        if self.tvi.shape != (4, 11):
            raise ValueError("need 4 TVI curves with 11 knots")
        if self.yule_nielsen_n < 1.0:
            raise ValueError("Yule-Nielsen n must be >= 1")
        if self.primaries[0, 1] < self.primaries[:, 1].max() - 1e-12:
            raise ValueError("paper white must have the maximal Y")
        for ink in range(4):
            curve = self.tvi[ink]
            if abs(curve[0]) > 1e-12 or abs(curve[-1] - 1.0) > 1e-12:
                raise ValueError("TVI curves must map 0->0 and 1->1")
            if np.any(np.diff(curve) < 0):
                raise ValueError("TVI curves must be monotone")

    def apply_tvi(self, cov: np.ndarray) -> np.ndarray:
        """Map (..., 4) nominal coverages to effective coverages."""
        cov = np.asarray(cov, dtype=float)
        out = np.empty_like(cov)
        for ink in range(4):
            out[..., ink] = np.interp(cov[..., ink], TVI_KNOTS, self.tvi[ink])
        return out


class MeasurementSource(Enum):
    SIMULATED = "simulated"
    FILE = "file"


@dataclass
class MeasurementSet:
    entries: dict[str, LabColor]
    source: MeasurementSource = MeasurementSource.SIMULATED
    source_name: str = ""

    def lab_array(self, ids: list[str]) -> np.ndarray:
        return np.array([self.entries[i] for i in ids])


def demichel_weights(cov) -> np.ndarray:
    """Demichel area-coverage weights of the 16 Neugebauer primaries.

    Accepts an InkCoverage, a length-4 sequence or an (..., 4) array; returns
    (..., 16) weights that sum to 1."""
    if isinstance(cov, InkCoverage):
        cov = cov.as_tuple()
    cov = np.asarray(cov, dtype=float)
    w = np.ones(cov.shape[:-1] + (N_PRIMARIES,))
    for i in range(N_PRIMARIES):
        for b in range(4):
            a = cov[..., b]
            w[..., i] = w[..., i] * (a if i >> b & 1 else 1.0 - a)
    return w


def predict_many(cov: np.ndarray, model: PressModel) -> np.ndarray:
    """Yule-Nielsen-corrected Neugebauer prediction of (..., 4) nominal
    coverages to (..., 3) Lab."""
    eff = model.apply_tvi(np.asarray(cov, dtype=float))
    w = demichel_weights(eff)
    n = model.yule_nielsen_n
    prim = np.maximum(model.primaries, 0.0) ** (1.0 / n)
    xyz = (w @ prim) ** n
    return xyz_to_lab_array(xyz)


def predict(cov: InkCoverage, model: PressModel) -> LabColor:
    lab = predict_many(np.asarray(cov.as_tuple()), model)
    return LabColor(*(float(v) for v in lab))


def _patch_noise(seed: int, patch_id: str) -> np.ndarray:
    """Unit-sigma Gaussian triple keyed by (seed, patch id); order-independent."""
    digest = hashlib.sha256(f"{seed}:{patch_id}".encode()).digest()
    counter = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(counter).standard_normal(3)


def simulate_print(chart: TestChart, model: PressModel,
                   noise_sigma: float = 0.0, seed: int = 0) -> MeasurementSet:
    """Predict every patch of a chart; optional Gaussian measurement noise in
    Lab units (sigma = 0 disables it)."""
    lab = predict_many(chart.coverages(), model)
    entries = {}
    for i, p in enumerate(chart.patches):
        v = lab[i]
        if noise_sigma > 0.0:
            v = v + noise_sigma * _patch_noise(seed, p.id)
        entries[p.id] = LabColor(*(float(x) for x in v))
    return MeasurementSet(entries=entries, source=MeasurementSource.SIMULATED,
                          source_name=model.name)


# ---------------------------------------------------------------------------
# Paper presets
#
# Solid-ink Lab values are configuration data typical of offset litho, not
# measurements; overprint primaries are derived multiplicatively in XYZ.
# Normative only: uncoated K is lighter than coated K, uncoated mid-tone TVI
# exceeds coated by >= 0.05, and n >= 1.

_COATED_SOLIDS = {
    "W": (95.0, 0.0, -2.0),
    "C": (55.0, -37.0, -50.0),
    "M": (48.0, 74.0, -3.0),
    "Y": (89.0, -5.0, 93.0),
    "K": (16.0, 0.0, 0.0),
}

_UNCOATED_SOLIDS = {
    "W": (95.5, 0.5, 3.0),
    "C": (58.0, -32.0, -42.0),
    "M": (52.0, 64.0, -2.0),
    "Y": (86.0, -4.0, 78.0),
    "K": (31.0, 0.5, 1.5),
}


def _derive_primaries(solids: dict[str, tuple]) -> np.ndarray:
    lab = {k: np.asarray(v, dtype=float) for k, v in solids.items()}
    xyz = {k: lab_to_xyz_array(v) for k, v in lab.items()}
    white = xyz["W"]
    prim = np.empty((N_PRIMARIES, 3))
    for i in range(N_PRIMARIES):
        p = white.copy()
        for b in range(4):
            if i >> b & 1:
                p = p * (xyz[INKS[b]] / white)
        prim[i] = p
    return prim


def _tvi_curve(peak: float) -> np.ndarray:
    # parabolic dot-gain bump sampled at the 11 knots; monotone for peak < 0.25
    u = TVI_KNOTS
    return u + peak * 4.0 * u * (1.0 - u)


def _coated() -> PressModel:
    tvi = np.stack([_tvi_curve(p) for p in (0.13, 0.13, 0.12, 0.15)])
    return PressModel(name="coated", primaries=_derive_primaries(_COATED_SOLIDS),
                      tvi=tvi, yule_nielsen_n=1.57)


def _uncoated() -> PressModel:
    tvi = np.stack([_tvi_curve(p) for p in (0.19, 0.19, 0.18, 0.22)])
    return PressModel(name="uncoated", primaries=_derive_primaries(_UNCOATED_SOLIDS),
                      tvi=tvi, yule_nielsen_n=2.24)


_PRESETS = {"coated": _coated, "uncoated": _uncoated}


def paper_preset(name: str) -> PressModel:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown paper preset {name!r}") from None


# ---------------------------------------------------------------------------
# Serialization

PRESS_SCHEMA = "KEYTONE_PRESS 1"


def press_to_text(model: PressModel) -> str:
    lines = [PRESS_SCHEMA, f"name {model.name}",
             f"yule_nielsen_n {model.yule_nielsen_n!r}"]
    for i, pname in enumerate(PRIMARY_NAMES):
        x, y, z = (float(v) for v in model.primaries[i])  # repr round-trips
        lines.append(f"primary {pname} {x!r} {y!r} {z!r}")
    for ink in range(4):
        values = " ".join(repr(float(v)) for v in model.tvi[ink])
        lines.append(f"tvi {INKS[ink]} {values}")
    return "\n".join(lines) + "\n"


def press_from_text(text: str) -> PressModel:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0].strip() != PRESS_SCHEMA:
        raise ValueError("not a keytone press model document")
    name = ""
    n = 1.0
    primaries = np.zeros((N_PRIMARIES, 3))
    tvi = np.zeros((4, 11))
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "name":
            name = parts[1]
        elif parts[0] == "yule_nielsen_n":
            n = float(parts[1])
        elif parts[0] == "primary":
            primaries[PRIMARY_NAMES.index(parts[1])] = [float(v) for v in parts[2:5]]
        elif parts[0] == "tvi":
            tvi[INKS.index(parts[1])] = [float(v) for v in parts[2:13]]
        else:
            raise ValueError(f"unknown press model line {parts[0]!r}")
    return PressModel(name=name, primaries=primaries, tvi=tvi, yule_nielsen_n=n)


def measurements_to_cgats(meas: MeasurementSet) -> str:
    doc = CgatsDocument()
    doc.keywords["ORIGINATOR"] = "keytone"
    doc.keywords["SOURCE"] = meas.source.value
    doc.keywords["SOURCE_NAME"] = meas.source_name
    doc.fields = ["SAMPLE_ID", "LAB_L", "LAB_A", "LAB_B"]
    for pid, lab in meas.entries.items():
        doc.rows.append([pid] + [f"{v:.6f}" for v in lab])
    return doc.serialize()


def measurements_from_cgats(text: str, path: str = "") -> MeasurementSet:
    doc = parse_cgats(text)
    if doc.fields != ["SAMPLE_ID", "LAB_L", "LAB_A", "LAB_B"]:
        raise ValueError(f"unexpected CGATS fields: {doc.fields}")
    entries = {}
    for row in doc.rows:
        if row[0] in entries:
            raise ValueError(f"duplicate sample id {row[0]!r}")
        entries[row[0]] = LabColor(float(row[1]), float(row[2]), float(row[3]))
    source = MeasurementSource.FILE if path else MeasurementSource(
        doc.keywords.get("SOURCE", "simulated"))
    return MeasurementSet(entries=entries, source=source,
                          source_name=path or doc.keywords.get("SOURCE_NAME", ""))
