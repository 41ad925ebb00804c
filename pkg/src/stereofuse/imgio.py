"""Raster file I/O: PNG via Pillow, 16-bit binary PGM for disparity maps.

Disparity maps serialize as P5 PGM with maxval 65535 and big-endian samples,
so any netpbm-aware viewer can inspect them.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image

PGM_MAXVAL = 65535


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load an image as uint8, (H, W) for grayscale or (H, W, 3) for color."""
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(path: str | os.PathLike, arr: np.ndarray) -> None:
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 raster, got {arr.dtype}")
    Image.fromarray(arr).save(path)


def pgm16_encode(dmap: np.ndarray) -> bytes:
    if dmap.ndim != 2:
        raise ValueError("disparity map must be 2-D")
    if dmap.min() < 0 or dmap.max() > PGM_MAXVAL:
        raise ValueError(
            f"disparity values out of PGM range [0, {PGM_MAXVAL}]: "
            f"[{dmap.min()}, {dmap.max()}]"
        )
    height, width = dmap.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + dmap.astype(">u2").tobytes()


def pgm16_decode(data: bytes) -> np.ndarray:
    fields: list[int] = []
    pos = 0
    if data[:2] != b"P5":
        raise ValueError("not a binary PGM (missing P5 magic)")
    pos = 2
    # header tokens: width, height, maxval; '#' starts a comment to end of line
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ValueError(f"malformed PGM header token {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if maxval != PGM_MAXVAL:
        raise ValueError(f"expected 16-bit PGM (maxval {PGM_MAXVAL}), got {maxval}")
    expected = width * height * 2
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster, dtype=">u2").reshape(height, width).astype(np.int32)


def write_pgm16(path: str | os.PathLike, dmap: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm16_encode(dmap))


def read_pgm16(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return pgm16_decode(fh.read())
