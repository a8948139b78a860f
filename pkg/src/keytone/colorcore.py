"""Color space types and conversions: sRGB -> XYZ -> CIELAB, plus CIE76 delta E.

All colorimetry runs in a D50 profile connection space. sRGB input (D65) is
converted with the Bradford-adapted sRGB->XYZ(D50) matrix, so neutral RGB
values land exactly on the D50 white axis (a* = b* = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# D50 reference white, 2 degree observer (ICC PCS convention)
D50_WHITE = (0.96422, 1.00000, 0.82521)

# sRGB (linear) -> XYZ, D65 source chromatically adapted to D50 via Bradford
SRGB_TO_XYZ_D50 = np.array([
    [0.4360747, 0.3850649, 0.1430804],
    [0.2225045, 0.7168786, 0.0606169],
    [0.0139322, 0.0971045, 0.7141733],
])

# CIE L*a*b* constants
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


class RGB8(NamedTuple):
    r: int
    g: int
    b: int


class XYZColor(NamedTuple):
    X: float
    Y: float
    Z: float


class LabColor(NamedTuple):
    L: float
    a: float
    b: float


@dataclass
class LabImage:
    """Per-pixel CIELAB raster stored as a (height, width, 3) float array."""

    width: int
    height: int
    lab: np.ndarray  # shape (height, width, 3), [..., 0] = L*

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        self.lab = np.asarray(self.lab, dtype=float)
        if self.lab.shape != (self.height, self.width, 3):
            raise ValueError(
                f"lab array shape {self.lab.shape} does not match "
                f"{(self.height, self.width, 3)}"
            )

    @property
    def lightness(self) -> np.ndarray:
        return self.lab[:, :, 0]


def srgb_decode(channels: np.ndarray) -> np.ndarray:
    """Decode sRGB-encoded channel values in [0, 1] to linear light."""
    channels = np.asarray(channels, dtype=float)
    return np.where(
        channels > 0.04045,
        ((channels + 0.055) / 1.055) ** 2.4,
        channels / 12.92,
    )


def xyz_to_lab_array(xyz: np.ndarray) -> np.ndarray:
    """Convert (..., 3) XYZ (Y normalized to 1.0 at white) to CIELAB, D50 white."""
    xyz = np.asarray(xyz, dtype=float)
    t = xyz / np.asarray(D50_WHITE)
    f = np.where(t > _EPS, np.cbrt(np.maximum(t, 0.0)), (_KAPPA * t + 16.0) / 116.0)
    out = np.empty_like(f)
    out[..., 0] = 116.0 * f[..., 1] - 16.0
    out[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    out[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return out


def lab_to_xyz_array(lab: np.ndarray) -> np.ndarray:
    """Exact inverse of xyz_to_lab_array, including the linear toe segment."""
    lab = np.asarray(lab, dtype=float)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    t = np.where(f ** 3 > _EPS, f ** 3, (116.0 * f - 16.0) / _KAPPA)
    return t * np.asarray(D50_WHITE)


def srgb_to_lab_array(rgb: np.ndarray) -> np.ndarray:
    """Convert (..., 3) uint8-range sRGB values to CIELAB."""
    rgb = np.asarray(rgb, dtype=float) / 255.0
    linear = srgb_decode(rgb)
    xyz = linear @ SRGB_TO_XYZ_D50.T
    return xyz_to_lab_array(xyz)


def srgb_to_lab(c: RGB8) -> LabColor:
    for v in c:
        if not (0 <= v <= 255):
            raise ValueError(f"RGB channel {v} outside [0, 255]")
    lab = srgb_to_lab_array(np.asarray(c, dtype=float))
    return LabColor(*(float(v) for v in lab))


def xyz_to_lab(c: XYZColor) -> LabColor:
    lab = xyz_to_lab_array(np.asarray(c, dtype=float))
    return LabColor(*(float(v) for v in lab))


def lab_to_xyz(c: LabColor) -> XYZColor:
    xyz = lab_to_xyz_array(np.asarray(c, dtype=float))
    return XYZColor(*(float(v) for v in xyz))


def delta_e76(x: LabColor, y: LabColor) -> float:
    """CIE76 color difference: Euclidean distance in Lab."""
    return math.sqrt((x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 + (x[2] - y[2]) ** 2)


def delta_e76_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.sqrt(np.sum((x - y) ** 2, axis=-1))


def image_from_srgb(rgb: np.ndarray) -> LabImage:
    """Build a LabImage from a (height, width, 3) sRGB uint8 array."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected (height, width, 3) RGB array")
    h, w = rgb.shape[:2]
    return LabImage(width=w, height=h, lab=srgb_to_lab_array(rgb))
