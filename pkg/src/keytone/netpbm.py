"""Binary PPM (P6) and PGM (P5) reading and writing, 8-bit only."""

from __future__ import annotations

import numpy as np


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated netpbm header")
    return data[start:pos], pos


def read_netpbm(path: str) -> np.ndarray:
    """Read a P6 PPM as (h, w, 3) uint8 or a P5 PGM as (h, w) uint8."""
    with open(path, "rb") as f:
        data = f.read()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported netpbm magic {magic!r} (need P5 or P6)")
    w_tok, pos = _read_token(data, pos)
    h_tok, pos = _read_token(data, pos)
    maxval_tok, pos = _read_token(data, pos)
    width, height, maxval = int(w_tok), int(h_tok), int(maxval_tok)
    if maxval != 255:
        raise ValueError(f"only 8-bit images supported (maxval {maxval})")
    if width < 1 or height < 1:
        raise ValueError("invalid image dimensions")
    pos += 1  # single whitespace after maxval
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[pos:pos + need]
    if len(raster) < need:
        raise ValueError("truncated netpbm raster")
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3)
    return arr.reshape(height, width)


def write_netpbm(path: str, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    elif image.ndim == 2:
        magic = b"P5"
    else:
        raise ValueError("expected (h, w) gray or (h, w, 3) RGB array")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(image.tobytes())
