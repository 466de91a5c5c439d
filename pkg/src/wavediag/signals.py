"""Synthetic motor phase-current records and dataset assembly.

The generator reproduces the structure of a motor-current-signature-analysis
dataset: five condition classes under five load levels, single-phase current
sampled at 10 kHz.  Each record is a 60 Hz fundamental whose amplitude grows
with load, plus small harmonics, Gaussian noise, and class-specific spectral
signatures at the standard MCSA locations:

* broken rotor bar         - sidebands at (1 +- 2s) f1, rel. amplitude 0.05
* bearing axis misalignment- sidebands at f1 +- fr, rel. amplitude 0.04
* outer bearing fault      - sidebands at f1 +- 3.5 fr, rel. amplitude 0.03,
                             plus 1% amplitude modulation at 3.5 fr
* stator inter-turn short  - extra 180 Hz third harmonic, rel. amplitude
                             0.08, plus a 2% stronger fundamental

with slip s = 0.005 + 0.03 * load/100 and rotor frequency fr = (1 - s) f1 / 2
(two pole pairs).  Every record is a pure function of its seed; phases and
noise come from one SplitMix64 counter stream (see :mod:`wavediag.prng`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .prng import CounterRng, derive_seed

FUNDAMENTAL_HZ = 60.0
POLE_PAIRS = 2
LOAD_LEVELS = (0, 25, 50, 75, 100)
NOISE_REL_SIGMA = 0.02
BASE_HARMONICS = ((3, 0.005), (5, 0.003))
MANIFEST_SCHEMA_VERSION = 1


class ConditionClass(IntEnum):
    """The five motor conditions, with stable integer codes."""

    NORMAL = 0
    BEARING_AXIS_MISALIGNMENT = 1
    STATOR_INTERTURN_SHORT = 2
    BROKEN_ROTOR_BAR = 3
    OUTER_BEARING_FAULT = 4


@dataclass
class SignalRecord:
    """One labeled single-phase current record."""

    id: str
    samples: np.ndarray
    sample_rate_hz: float
    condition: ConditionClass
    load_pct: int
    seed: int

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def slip(load_pct: int) -> float:
    return 0.005 + 0.03 * load_pct / 100.0


def rotor_freq_hz(load_pct: int) -> float:
    return (1.0 - slip(load_pct)) * FUNDAMENTAL_HZ / POLE_PAIRS


def signature_freqs_hz(condition: ConditionClass, load_pct: int) -> list[float]:
    """Class-specific signature frequencies (absolute values), for tests."""
    f1 = FUNDAMENTAL_HZ
    fr = rotor_freq_hz(load_pct)
    s = slip(load_pct)
    if condition == ConditionClass.BROKEN_ROTOR_BAR:
        return [(1.0 - 2.0 * s) * f1, (1.0 + 2.0 * s) * f1]
    if condition == ConditionClass.BEARING_AXIS_MISALIGNMENT:
        return [f1 - fr, f1 + fr]
    if condition == ConditionClass.OUTER_BEARING_FAULT:
        f_bpfo = 3.5 * fr
        return [abs(f1 - f_bpfo), f1 + f_bpfo]
    if condition == ConditionClass.STATOR_INTERTURN_SHORT:
        return [3.0 * f1]
    return []


def _component_list(condition: ConditionClass, load_pct: int) -> list[tuple[float, float]]:
    """(frequency_hz, amplitude relative to fundamental) additive components."""
    f1 = FUNDAMENTAL_HZ
    comps = [(k * f1, amp) for k, amp in BASE_HARMONICS]
    fr = rotor_freq_hz(load_pct)
    s = slip(load_pct)
    if condition == ConditionClass.BEARING_AXIS_MISALIGNMENT:
        comps += [(f1 - fr, 0.04), (f1 + fr, 0.04)]
    elif condition == ConditionClass.STATOR_INTERTURN_SHORT:
        comps += [(3.0 * f1, 0.08)]
    elif condition == ConditionClass.BROKEN_ROTOR_BAR:
        comps += [((1.0 - 2.0 * s) * f1, 0.05), ((1.0 + 2.0 * s) * f1, 0.05)]
    elif condition == ConditionClass.OUTER_BEARING_FAULT:
        f_bpfo = 3.5 * fr
        comps += [(f1 - f_bpfo, 0.03), (f1 + f_bpfo, 0.03)]
    return comps


def synth_signal(
    condition: ConditionClass,
    load_pct: int,
    duration_s: float,
    sample_rate_hz: float,
    seed: int,
    record_id: str | None = None,
) -> SignalRecord:
    """Generate one deterministic surrogate record.

    Draw order from the record's stream is fixed: fundamental phase, one
    phase per additive component (in :func:`_component_list` order), the
    modulation phase for outer bearing faults, then the noise samples.
    """
    if load_pct not in LOAD_LEVELS:
        raise ValueError(f"load_pct must be one of {LOAD_LEVELS}, got {load_pct}")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if sample_rate_hz < 1000:
        raise ValueError("sample_rate_hz must be >= 1000")
    condition = ConditionClass(condition)

    n = round(duration_s * sample_rate_hz)
    t = np.arange(n, dtype=np.float64) / sample_rate_hz
    amp = 1.0 + 0.5 * load_pct / 100.0
    rng = CounterRng(seed)

    fund_amp = amp * (1.02 if condition == ConditionClass.STATOR_INTERTURN_SHORT else 1.0)
    phi0 = 2.0 * np.pi * rng.uniforms(1)[0]
    comps = _component_list(condition, load_pct)
    phases = 2.0 * np.pi * rng.uniforms(len(comps))

    envelope = np.ones_like(t)
    if condition == ConditionClass.OUTER_BEARING_FAULT:
        f_bpfo = 3.5 * rotor_freq_hz(load_pct)
        phi_m = 2.0 * np.pi * rng.uniforms(1)[0]
        envelope += 0.01 * np.cos(2.0 * np.pi * f_bpfo * t + phi_m)

    x = fund_amp * envelope * np.cos(2.0 * np.pi * FUNDAMENTAL_HZ * t + phi0)
    for (freq, rel), phi in zip(comps, phases):
        x += amp * rel * np.cos(2.0 * np.pi * freq * t + phi)
    x += NOISE_REL_SIGMA * amp * rng.normals(n)

    if record_id is None:
        record_id = f"c{int(condition)}_l{load_pct:03d}_s{seed & 0xFFFFFFFFFFFFFFFF:016x}"
    return SignalRecord(
        id=record_id,
        samples=x,
        sample_rate_hz=float(sample_rate_hz),
        condition=condition,
        load_pct=int(load_pct),
        seed=int(seed),
    )


@dataclass
class DatasetConfig:
    records_per_cell: int = 30
    duration_s: float = 1.0
    sample_rate_hz: float = 10000.0
    master_seed: int = 1
    out_dir: str = "data"


@dataclass
class ManifestEntry:
    id: str
    class_code: int
    load_pct: int
    seed: int
    path: str


@dataclass
class DatasetManifest:
    """Index of a generated dataset; one entry per signal file."""

    duration_s: float
    sample_rate_hz: float
    records: list[ManifestEntry]

    @property
    def records_per_cell(self) -> int:
        return len(self.records) // (len(ConditionClass) * len(LOAD_LEVELS))

    def to_json(self) -> str:
        obj = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "records": [
                {
                    "id": r.id,
                    "class_code": r.class_code,
                    "load_pct": r.load_pct,
                    "seed": r.seed,
                    "path": r.path,
                }
                for r in self.records
            ],
        }
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        obj = json.loads(text)
        if obj.get("schema_version") != MANIFEST_SCHEMA_VERSION:
            raise ValueError(f"unsupported manifest schema_version {obj.get('schema_version')!r}")
        records = [ManifestEntry(**r) for r in obj["records"]]
        return cls(duration_s=obj["duration_s"], sample_rate_hz=obj["sample_rate_hz"], records=records)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), newline="\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


def record_seed(master_seed: int, class_code: int, load_pct: int, index: int) -> int:
    """Per-record seed: master_seed XOR mix of the (class, load, index) key."""
    key = derive_seed(0, class_code, load_pct, index)
    return (master_seed ^ key) & 0xFFFFFFFFFFFFFFFF


def write_signal_txt(samples: np.ndarray, path: str | Path) -> None:
    """One decimal float per line, LF newlines, shortest round-trip repr."""
    text = "\n".join(repr(float(v)) for v in samples) + "\n"
    Path(path).write_text(text, newline="\n")


def build_dataset(config: DatasetConfig) -> DatasetManifest:
    """Generate the full balanced dataset under ``config.out_dir``.

    Writes ``signals/<id>.txt`` per record plus ``manifest.json``; rebuilding
    with the same config reproduces every byte.
    """
    if config.records_per_cell < 1:
        raise ValueError("records_per_cell must be >= 1")
    out = Path(config.out_dir)
    sig_dir = out / "signals"
    sig_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for condition in ConditionClass:
        for load in LOAD_LEVELS:
            for idx in range(config.records_per_cell):
                seed = record_seed(config.master_seed, int(condition), load, idx)
                rec_id = f"c{int(condition)}_l{load:03d}_r{idx:03d}"
                rec = synth_signal(
                    condition, load, config.duration_s, config.sample_rate_hz, seed, record_id=rec_id
                )
                rel_path = f"signals/{rec_id}.txt"
                write_signal_txt(rec.samples, out / rel_path)
                entries.append(
                    ManifestEntry(
                        id=rec_id, class_code=int(condition), load_pct=load, seed=seed, path=rel_path
                    )
                )
    manifest = DatasetManifest(
        duration_s=float(config.duration_s),
        sample_rate_hz=float(config.sample_rate_hz),
        records=entries,
    )
    manifest.save(out / "manifest.json")
    return manifest


def load_signal_txt(path: str | Path) -> np.ndarray:
    """Parse a one-float-per-line signal file; errors name the bad line."""
    samples = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                samples.append(float(stripped))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not a number: {stripped!r}") from None
            if not math.isfinite(samples[-1]):
                raise ValueError(f"{path}: line {lineno}: non-finite sample")
    if not samples:
        raise ValueError(f"{path}: empty signal file")
    return np.asarray(samples, dtype=np.float64)


def load_signal_csv(
    path: str | Path,
    sample_rate_hz: float,
    condition: ConditionClass,
    load_pct: int,
) -> SignalRecord:
    """Ingest an externally supplied record from a one-value-per-line file."""
    samples = load_signal_txt(path)
    return SignalRecord(
        id=Path(path).stem,
        samples=samples,
        sample_rate_hz=float(sample_rate_hz),
        condition=ConditionClass(condition),
        load_pct=int(load_pct),
        seed=0,
    )


def load_manifest_record(manifest: DatasetManifest, entry: ManifestEntry, root: str | Path) -> SignalRecord:
    """Materialize one manifest entry back into a SignalRecord."""
    samples = load_signal_txt(Path(root) / entry.path)
    return SignalRecord(
        id=entry.id,
        samples=samples,
        sample_rate_hz=manifest.sample_rate_hz,
        condition=ConditionClass(entry.class_code),
        load_pct=entry.load_pct,
        seed=entry.seed,
    )
