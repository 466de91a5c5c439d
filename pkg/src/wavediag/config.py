"""Declarative pipeline configuration: strict JSON with defaults.

All four sections are optional and every field has a default, but unknown
keys are rejected so typos fail loudly instead of silently running with
defaults.  Relative paths resolve against the config file's directory; the
``WAVEDIAG_RESULTS`` environment variable overrides the results directory.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .cnn import TrainConfig
from .raster import TRANSFORM_CODES

RESULTS_ENV_VAR = "WAVEDIAG_RESULTS"


class ConfigError(Exception):
    """Raised for malformed or invalid pipeline configuration."""


@dataclass
class DatasetSection:
    records_per_cell: int = 30
    duration_s: float = 1.0
    sample_rate_hz: float = 10000.0
    master_seed: int = 1
    out_dir: str = "data"


@dataclass
class TransformSection:
    families: tuple[str, ...] = TRANSFORM_CODES
    voices_per_octave: int = 10
    min_freq_hz: float = 10.0
    floor_db: float = -60.0
    wsst_epsilon: float = 1e-3
    wsst_bins: int | None = None
    amor_omega0: float = 6.0
    bump_mu: float = 5.0
    bump_sigma: float = 0.6
    morse_beta: float = 20.0
    morse_gamma: float = 3.0


@dataclass
class EvalSection:
    k: int = 10
    fold_seed: int = 1
    results_dir: str = "results"


@dataclass
class PipelineConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    transform: TransformSection = field(default_factory=TransformSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalSection = field(default_factory=EvalSection)


def _build_section(cls, obj: dict, section: str):
    known = {f.name for f in fields(cls)}
    for key in obj:
        if key not in known:
            raise ConfigError(f"{section}.{key}: unknown key (known: {', '.join(sorted(known))})")
    if section == "transform" and "families" in obj:
        obj = dict(obj)
        fams = obj["families"]
        if not isinstance(fams, list) or not fams:
            raise ConfigError("transform.families: must be a nonempty list of transform codes")
        for code in fams:
            if code not in TRANSFORM_CODES:
                raise ConfigError(
                    f"transform.families: unknown code {code!r} (valid: {', '.join(TRANSFORM_CODES)})"
                )
        obj["families"] = tuple(fams)
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _validate(cfg: PipelineConfig) -> None:
    d, t, e = cfg.dataset, cfg.transform, cfg.eval
    checks = [
        (d.records_per_cell >= 1, "dataset.records_per_cell must be >= 1"),
        (d.duration_s > 0, "dataset.duration_s must be positive"),
        (d.sample_rate_hz >= 1000, "dataset.sample_rate_hz must be >= 1000"),
        (t.voices_per_octave >= 4, "transform.voices_per_octave must be >= 4"),
        (0 < t.min_freq_hz < d.sample_rate_hz / 2, "transform.min_freq_hz must lie in (0, Nyquist)"),
        (t.floor_db < 0, "transform.floor_db must be negative"),
        (t.wsst_epsilon > 0, "transform.wsst_epsilon must be positive"),
        (t.wsst_bins is None or t.wsst_bins >= 8, "transform.wsst_bins must be >= 8"),
        (t.bump_sigma > 0 and t.bump_mu > t.bump_sigma, "transform bump parameters require mu > sigma > 0"),
        (t.morse_beta > 0 and t.morse_gamma > 0, "transform morse parameters must be positive"),
        (t.amor_omega0 > 0, "transform.amor_omega0 must be positive"),
        (e.k >= 2, "eval.k must be >= 2"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


def parse_config(obj: dict, base_dir: str | Path = ".") -> PipelineConfig:
    """Build a validated PipelineConfig from a decoded JSON object."""
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    sections = {"dataset": DatasetSection, "transform": TransformSection, "train": TrainConfig, "eval": EvalSection}
    for key in obj:
        if key not in sections:
            raise ConfigError(f"{key}: unknown section (known: {', '.join(sections)})")
    built = {}
    for name, cls in sections.items():
        raw = obj.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"{name}: must be a JSON object")
        built[name] = _build_section(cls, raw, name)
    cfg = PipelineConfig(**built)
    _validate(cfg)

    base = Path(base_dir)
    cfg.dataset.out_dir = str((base / cfg.dataset.out_dir).resolve())
    results = os.environ.get(RESULTS_ENV_VAR) or cfg.eval.results_dir
    results_base = Path.cwd() if os.environ.get(RESULTS_ENV_VAR) else base
    cfg.eval.results_dir = str((results_base / results).resolve())
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(obj, base_dir=path.parent)


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Round-trip a config back to plain JSON-serializable structure."""
    out = dataclasses.asdict(cfg)
    out["transform"]["families"] = list(out["transform"]["families"])
    return out
