"""Deterministic rasterization of time-frequency matrices to 32x32 RGB.

The chain is: per-image dB normalization with a fixed floor, area-mean
downsampling on an even integer block partition, then a fixed 5-point
piecewise-linear colormap with half-up byte rounding.  Every step is a pure
function, so images are bit-identical across runs and platforms; binary PPM
(P6) is the interchange format.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signals import ConditionClass

IMAGE_SIZE = 32
DEFAULT_FLOOR_DB = -60.0
TRANSFORM_CODES = ("wt-amor", "wt-bump", "wt-morse", "wsst-amor", "wsst-bump")

# control points at v = 0, 0.25, 0.5, 0.75, 1
_COLOR_POINTS = np.array(
    [
        [13, 8, 135],
        [126, 3, 168],
        [204, 71, 120],
        [248, 149, 64],
        [240, 249, 33],
    ],
    dtype=np.float64,
)


@dataclass
class TfrImage:
    """One 32x32x3 8-bit image plus its label and source record id."""

    pixels: np.ndarray
    label: ConditionClass
    source_id: str

    def __post_init__(self):
        if self.pixels.shape != (IMAGE_SIZE, IMAGE_SIZE, 3) or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 32x32x3 uint8 array")


def normalize_log(m: np.ndarray, floor_db: float = DEFAULT_FLOOR_DB) -> np.ndarray:
    """Map a nonnegative matrix to [0, 1] on a dB scale relative to its max.

    The maximum maps to 1, entries at or below ``floor_db`` (and exact
    zeros) map to 0.
    """
    if floor_db >= 0:
        raise ValueError("floor_db must be negative")
    m = np.asarray(m, dtype=np.float64)
    peak = m.max()
    if not peak > 0:
        raise ValueError("empty time-frequency content")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(m / peak)
    return np.clip((db - floor_db) / (-floor_db), 0.0, 1.0)


def downsample_area(m: np.ndarray, out_rows: int = IMAGE_SIZE, out_cols: int = IMAGE_SIZE) -> np.ndarray:
    """Block-mean downsampling; block r spans input rows [floor(r R/out), floor((r+1) R/out))."""
    m = np.asarray(m, dtype=np.float64)
    rows, cols = m.shape
    if rows < out_rows or cols < out_cols:
        raise ValueError(f"input must be at least {out_rows}x{out_cols}, got {rows}x{cols}")
    r_edges = (np.arange(out_rows + 1) * rows) // out_rows
    c_edges = (np.arange(out_cols + 1) * cols) // out_cols
    summed = np.add.reduceat(m, r_edges[:-1], axis=0)
    summed = np.add.reduceat(summed, c_edges[:-1], axis=1)
    counts = np.diff(r_edges)[:, None] * np.diff(c_edges)[None, :]
    return summed / counts


def apply_colormap(v):
    """Map v in [0, 1] to RGB bytes by piecewise-linear interpolation.

    Scalar input returns an (r, g, b) tuple; array input returns a uint8
    array with a trailing channel axis.  Channels round half-up.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("colormap input must lie in [0, 1]")
    pos = arr * 4.0
    seg = np.minimum(pos.astype(np.int64), 3)
    t = pos - seg
    rgb = (1.0 - t)[..., None] * _COLOR_POINTS[seg] + t[..., None] * _COLOR_POINTS[seg + 1]
    out = np.floor(rgb + 0.5).astype(np.uint8)
    if arr.ndim == 0:
        return tuple(int(c) for c in out)
    return out


def rasterize(
    m: np.ndarray,
    label: ConditionClass,
    source_id: str,
    floor_db: float = DEFAULT_FLOOR_DB,
) -> TfrImage:
    """normalize_log -> downsample_area -> colormap; row 0 = highest frequency.

    The input matrix must already be oriented with its highest-frequency row
    first (scalograms are; synchrosqueezed matrices need a flip).
    """
    v = downsample_area(normalize_log(m, floor_db))
    return TfrImage(pixels=apply_colormap(v), label=ConditionClass(label), source_id=source_id)


def ppm_bytes(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def write_ppm(img: TfrImage, path: str | Path) -> None:
    """Binary PPM, header "P6\\n32 32\\n255\\n" then 3072 raw RGB bytes."""
    Path(path).write_bytes(ppm_bytes(img.pixels))


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary P6 file back into a (rows, cols, 3) uint8 array."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h = (int(tok) for tok in parts[1].split())
    if parts[2] != b"255":
        raise ValueError(f"{path}: unsupported maxval {parts[2]!r}")
    data = np.frombuffer(parts[3], dtype=np.uint8, count=h * w * 3)
    return data.reshape(h, w, 3)


def image_filename(source_id: str, transform_code: str) -> str:
    if transform_code not in TRANSFORM_CODES:
        raise ValueError(f"unknown transform code {transform_code!r}; valid: {', '.join(TRANSFORM_CODES)}")
    return f"{source_id}_{transform_code}.ppm"
