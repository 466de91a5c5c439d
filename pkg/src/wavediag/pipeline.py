"""Glue between dataset, transforms, and images on disk.

Image files live under ``<out_dir>/<transform_code>/<id>_<code>.ppm``; every
image is a pure function of its record and the transform settings, so the
stage is idempotent and record-parallel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import PipelineConfig, TransformSection
from .cwt import cwt, magnitude
from .raster import TfrImage, image_filename, rasterize, read_ppm, write_ppm
from .signals import DatasetManifest, ManifestEntry, SignalRecord, load_manifest_record
from .sst import synchrosqueeze
from .wavelets import WaveletSpec, make_scale_grid


def wavelet_for_code(transform_code: str, tcfg: TransformSection) -> WaveletSpec:
    family = transform_code.split("-", 1)[1]
    if family == "amor":
        return WaveletSpec.amor(tcfg.amor_omega0)
    if family == "bump":
        return WaveletSpec.bump(tcfg.bump_mu, tcfg.bump_sigma)
    return WaveletSpec.morse(tcfg.morse_beta, tcfg.morse_gamma)


def tfr_matrix(record: SignalRecord, transform_code: str, tcfg: TransformSection) -> np.ndarray:
    """Time-frequency matrix for one record, row 0 = highest frequency."""
    spec = wavelet_for_code(transform_code, tcfg)
    grid = make_scale_grid(
        len(record.samples), record.sample_rate_hz, spec, tcfg.voices_per_octave, tcfg.min_freq_hz
    )
    scalogram = cwt(record, spec, grid)
    if transform_code.startswith("wt-"):
        return magnitude(scalogram)
    tfr = synchrosqueeze(scalogram, n_bins=tcfg.wsst_bins, epsilon=tcfg.wsst_epsilon)
    # bins are ascending in frequency; images want highest frequency on top
    return np.flipud(tfr.energy)


def render_record(record: SignalRecord, transform_code: str, tcfg: TransformSection) -> TfrImage:
    matrix = tfr_matrix(record, transform_code, tcfg)
    return rasterize(matrix, record.condition, record.id, tcfg.floor_db)


def image_path(out_dir: str | Path, transform_code: str, record_id: str) -> Path:
    return Path(out_dir) / transform_code / image_filename(record_id, transform_code)


def ensure_images(
    manifest: DatasetManifest,
    transform_code: str,
    out_dir: str | Path,
    tcfg: TransformSection,
    threads: int = 1,
) -> int:
    """Render any missing images for one transform; returns how many were built."""
    out_dir = Path(out_dir)
    (out_dir / transform_code).mkdir(parents=True, exist_ok=True)
    todo = [e for e in manifest.records if not image_path(out_dir, transform_code, e.id).exists()]

    def build(entry: ManifestEntry) -> None:
        record = load_manifest_record(manifest, entry, out_dir)
        img = render_record(record, transform_code, tcfg)
        write_ppm(img, image_path(out_dir, transform_code, entry.id))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(build, todo))
    else:
        for entry in todo:
            build(entry)
    return len(todo)


def load_images(manifest: DatasetManifest, transform_code: str, out_dir: str | Path):
    """Read all images for one transform as CNN input.

    Returns (images in [0, 1] shaped (N, 32, 32, 3), class codes, record ids)
    in manifest order; raises FileNotFoundError naming the first missing file.
    """
    pixels = []
    labels = []
    ids = []
    for entry in manifest.records:
        path = image_path(out_dir, transform_code, entry.id)
        if not path.exists():
            raise FileNotFoundError(f"missing image: {path}")
        pixels.append(read_ppm(path))
        labels.append(entry.class_code)
        ids.append(entry.id)
    images = np.stack(pixels).astype(np.float64) / 255.0
    return images, np.asarray(labels, dtype=np.int64), ids
