"""Stratified k-fold cross-validation, metrics, and report emission.

Folds are stratified by condition class: per class, indices are shuffled by
a seeded stream and dealt round-robin, so per-fold class counts differ by at
most one.  Reports aggregate per-fold accuracies (with box-plot quartiles)
and a pooled confusion matrix, and serialize to byte-stable JSON plus a CSV
table row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cnn, pipeline
from .config import PipelineConfig
from .prng import CounterRng, derive_seed
from .signals import ConditionClass, DatasetManifest

REPORT_SCHEMA_VERSION = 1
N_CLASSES = len(ConditionClass)

# published benchmark accuracies (%) for these transform codes on the
# original hardware dataset, shown as a reference column in reports
REFERENCE_ACCURACY_PCT = {
    "wt-morse": 93.73,
    "wt-amor": 90.93,
    "wt-bump": 89.20,
    "wsst-bump": 76.66,
    "wsst-amor": 67.60,
}

TABLE_HEADER = "transform_code,mean_accuracy,std_accuracy,reference_accuracy_pct"


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """Assign each record a fold index 0..k-1, stratified by label.

    Per label: shuffle that label's indices with a seeded stream, then deal
    round-robin.  Requires every label to appear at least k times.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    assignments = np.full(len(labels), -1, dtype=np.int64)
    for code in np.unique(labels):
        idxs = np.flatnonzero(labels == code)
        if len(idxs) < k:
            raise ValueError(f"class {int(code)} has {len(idxs)} members, fewer than k={k}")
        perm = CounterRng(derive_seed(seed, int(code))).permutation(len(idxs))
        assignments[idxs[perm]] = np.arange(len(idxs)) % k
    return FoldPlan(k=int(k), assignments=assignments, seed=int(seed))


def confusion_matrix(true_codes, predicted_codes, n_classes: int = N_CLASSES) -> np.ndarray:
    """Counts indexed [true, predicted]."""
    true_codes = np.asarray(true_codes, dtype=np.int64)
    predicted_codes = np.asarray(predicted_codes, dtype=np.int64)
    if len(true_codes) != len(predicted_codes):
        raise ValueError("true and predicted label vectors differ in length")
    flat = np.bincount(true_codes * n_classes + predicted_codes, minlength=n_classes * n_classes)
    return flat.reshape(n_classes, n_classes)


def boxplot_stats(values) -> dict[str, float]:
    """Five-number summary; quartiles by linear interpolation (inclusive)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("boxplot_stats requires a nonempty sequence")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0], method="linear")
    return {
        "min": float(values.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(values.max()),
    }


@dataclass
class EvalReport:
    """Per-fold and aggregate cross-validation metrics for one transform."""

    transform_code: str
    per_fold_accuracy: list[float]
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    confusion: np.ndarray
    per_class_accuracy: list[float]

    @classmethod
    def from_folds(cls, transform_code: str, per_fold_accuracy, confusion: np.ndarray) -> "EvalReport":
        accs = np.asarray(per_fold_accuracy, dtype=np.float64)
        stats = boxplot_stats(accs)
        confusion = np.asarray(confusion, dtype=np.int64)
        row_totals = confusion.sum(axis=1)
        per_class = np.where(row_totals > 0, confusion.diagonal() / np.maximum(row_totals, 1), 0.0)
        return cls(
            transform_code=transform_code,
            per_fold_accuracy=[float(a) for a in accs],
            mean=float(accs.mean()),
            std=float(accs.std()),
            min=stats["min"],
            q1=stats["q1"],
            median=stats["median"],
            q3=stats["q3"],
            max=stats["max"],
            confusion=confusion,
            per_class_accuracy=[float(a) for a in per_class],
        )

    @property
    def overall_accuracy(self) -> float:
        total = self.confusion.sum()
        return float(self.confusion.trace() / total) if total else 0.0

    def to_json(self) -> str:
        obj = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "transform_code": self.transform_code,
            "per_fold_accuracy": self.per_fold_accuracy,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "confusion": self.confusion.tolist(),
            "per_class_accuracy": self.per_class_accuracy,
        }
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        obj = json.loads(text)
        if obj.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {obj.get('schema_version')!r}")
        return cls(
            transform_code=obj["transform_code"],
            per_fold_accuracy=obj["per_fold_accuracy"],
            mean=obj["mean"],
            std=obj["std"],
            min=obj["min"],
            q1=obj["q1"],
            median=obj["median"],
            q3=obj["q3"],
            max=obj["max"],
            confusion=np.asarray(obj["confusion"], dtype=np.int64),
            per_class_accuracy=obj["per_class_accuracy"],
        )

    def table_row(self) -> str:
        ref = REFERENCE_ACCURACY_PCT.get(self.transform_code)
        ref_str = f"{ref:.2f}" if ref is not None else ""
        return f"{self.transform_code},{self.mean:.6f},{self.std:.6f},{ref_str}"


def emit_report(report: EvalReport, path: str | Path) -> None:
    """Write the JSON report plus a single-row CSV sibling (<stem>.row.csv)."""
    path = Path(path)
    path.write_text(report.to_json(), newline="\n")
    row_path = path.with_suffix(".row.csv")
    row_path.write_text(TABLE_HEADER + "\n" + report.table_row() + "\n", newline="\n")


def aggregate_table(reports: list[EvalReport]) -> str:
    """CSV accuracy table over all transforms, best mean accuracy first."""
    ordered = sorted(reports, key=lambda r: (-r.mean, r.transform_code))
    return "\n".join([TABLE_HEADER] + [r.table_row() for r in ordered]) + "\n"


def render_confusion_grid(reports: list[EvalReport]) -> str:
    """Plain-text confusion matrices (rows true, columns predicted)."""
    names = [c.name for c in ConditionClass]
    width = max(len(n) for n in names) + 2
    blocks = []
    for rep in sorted(reports, key=lambda r: (-r.mean, r.transform_code)):
        lines = [
            f"{rep.transform_code}  (overall accuracy {rep.overall_accuracy:.4f})",
            " " * width + "".join(f"{n[:8]:>9}" for n in names),
        ]
        for i, name in enumerate(names):
            cells = "".join(f"{int(v):>9}" for v in rep.confusion[i])
            lines.append(f"{name:<{width}}" + cells)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _validation_k(pool_labels: np.ndarray) -> int:
    """Inner split granularity: 10% holdout when classes allow, else coarser."""
    counts = np.bincount(pool_labels)
    min_count = counts[counts > 0].min()
    return 10 if min_count >= 10 else max(2, int(min_count))


def run_cv(
    manifest: DatasetManifest,
    transform_code: str,
    train_config: cnn.TrainConfig,
    pipeline_config: PipelineConfig,
    results_dir: str | Path | None = None,
) -> EvalReport:
    """Stratified k-fold cross-validation of the CNN on one transform's images.

    Records are ordered by id before fold assignment so the plan does not
    depend on manifest order.  Within each fold's training pool, a stratified
    slice (10% when class counts allow) is held out for early stopping.
    Optionally writes per-fold history CSVs and checkpoints under
    ``results_dir/<code>/fold<j>/``.
    """
    images, labels, ids = pipeline.load_images(manifest, transform_code, pipeline_config.dataset.out_dir)
    order = np.argsort(np.asarray(ids))
    images, labels = images[order], labels[order]

    k = pipeline_config.eval.k
    plan = stratified_kfold(labels, k, pipeline_config.eval.fold_seed)
    fold_accuracies = []
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)

    for fold in range(k):
        test_mask = plan.assignments == fold
        pool_idx = np.flatnonzero(~test_mask)
        pool_labels = labels[pool_idx]
        inner = stratified_kfold(
            pool_labels, _validation_k(pool_labels), derive_seed(pipeline_config.eval.fold_seed, 1000 + fold)
        )
        val_idx = pool_idx[inner.assignments == 0]
        tr_idx = pool_idx[inner.assignments != 0]

        model = cnn.CnnModel.init(derive_seed(train_config.seed, fold))
        history = cnn.train(
            model, images[tr_idx], labels[tr_idx], images[val_idx], labels[val_idx], train_config
        )
        preds, _ = cnn.predict(model, images[test_mask])
        fold_accuracies.append(float((preds == labels[test_mask]).mean()))
        confusion += confusion_matrix(labels[test_mask], preds)

        if results_dir is not None:
            fold_dir = Path(results_dir) / transform_code / f"fold{fold}"
            fold_dir.mkdir(parents=True, exist_ok=True)
            cnn.write_history_csv(history, fold_dir / "history.csv")
            cnn.save_checkpoint(model, fold_dir / "model.wdnn")

    return EvalReport.from_folds(transform_code, fold_accuracies, confusion)
