"""Motor fault diagnosis from phase-current signals.

Pipeline: synthesize or ingest labeled current records, transform them into
time-frequency images with continuous-wavelet and synchrosqueezed variants,
rasterize to 32x32 RGB, classify with a small CNN, and evaluate with
stratified k-fold cross-validation.
"""

from .cnn import CnnModel, TrainConfig, forward, loss_softmax_ce, predict, train
from .cwt import Scalogram, cwt, cwt_direct, magnitude
from .evalharness import EvalReport, boxplot_stats, confusion_matrix, run_cv, stratified_kfold
from .raster import TfrImage, apply_colormap, downsample_area, normalize_log, rasterize, write_ppm
from .signals import (
    ConditionClass,
    DatasetConfig,
    DatasetManifest,
    SignalRecord,
    build_dataset,
    load_signal_csv,
    synth_signal,
)
from .sst import SyncroTfr, concentration_entropy, phase_transform, synchrosqueeze
from .wavelets import ScaleGrid, WaveletSpec, amor_freq, bump_freq, make_scale_grid, morse_freq

__version__ = "0.1.0"

__all__ = [
    "CnnModel",
    "ConditionClass",
    "DatasetConfig",
    "DatasetManifest",
    "EvalReport",
    "ScaleGrid",
    "Scalogram",
    "SignalRecord",
    "SyncroTfr",
    "TfrImage",
    "TrainConfig",
    "WaveletSpec",
    "amor_freq",
    "apply_colormap",
    "boxplot_stats",
    "build_dataset",
    "bump_freq",
    "concentration_entropy",
    "confusion_matrix",
    "cwt",
    "cwt_direct",
    "downsample_area",
    "forward",
    "load_signal_csv",
    "loss_softmax_ce",
    "magnitude",
    "make_scale_grid",
    "morse_freq",
    "normalize_log",
    "phase_transform",
    "predict",
    "rasterize",
    "run_cv",
    "stratified_kfold",
    "synchrosqueeze",
    "synth_signal",
    "train",
    "write_ppm",
]
