"""Command-line pipeline: gen -> transform -> cv -> report.

Each stage is idempotent under an unchanged config.  Exit codes: 0 success,
1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evalharness, pipeline
from .config import ConfigError, load_config
from .raster import TRANSFORM_CODES
from .signals import DatasetConfig, DatasetManifest, build_dataset, record_seed

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _manifest_path(cfg) -> Path:
    return Path(cfg.dataset.out_dir) / "manifest.json"


def _dataset_is_current(cfg) -> bool:
    """True when the manifest on disk matches the config and files exist."""
    path = _manifest_path(cfg)
    if not path.exists():
        return False
    try:
        manifest = DatasetManifest.load(path)
    except (ValueError, KeyError, TypeError):
        return False
    d = cfg.dataset
    expected_count = 25 * d.records_per_cell
    if (
        manifest.duration_s != d.duration_s
        or manifest.sample_rate_hz != d.sample_rate_hz
        or len(manifest.records) != expected_count
    ):
        return False
    root = Path(d.out_dir)
    for entry in manifest.records:
        idx = int(entry.id.rsplit("_r", 1)[1])
        if entry.seed != record_seed(d.master_seed, entry.class_code, entry.load_pct, idx):
            return False
        if not (root / entry.path).exists():
            return False
    return True


def cmd_gen(cfg, args) -> int:
    if _dataset_is_current(cfg):
        manifest = DatasetManifest.load(_manifest_path(cfg))
        print(f"reusing existing dataset at {cfg.dataset.out_dir}")
        print(f"manifest: {_manifest_path(cfg)}")
        print(f"{len(manifest.records)} records")
        return EXIT_OK
    d = cfg.dataset
    manifest = build_dataset(
        DatasetConfig(
            records_per_cell=d.records_per_cell,
            duration_s=d.duration_s,
            sample_rate_hz=d.sample_rate_hz,
            master_seed=d.master_seed,
            out_dir=d.out_dir,
        )
    )
    print(f"manifest: {_manifest_path(cfg)}")
    print(f"{len(manifest.records)} records")
    return EXIT_OK


def cmd_transform(cfg, args) -> int:
    manifest = DatasetManifest.load(_manifest_path(cfg))
    built = pipeline.ensure_images(
        manifest, args.transform, cfg.dataset.out_dir, cfg.transform, threads=args.threads
    )
    skipped = len(manifest.records) - built
    note = f" ({skipped} already up to date)" if skipped else ""
    print(f"{args.transform}: {len(manifest.records)} images{note}")
    return EXIT_OK


def cmd_cv(cfg, args) -> int:
    manifest = DatasetManifest.load(_manifest_path(cfg))
    results_dir = Path(cfg.eval.results_dir)
    report = evalharness.run_cv(manifest, args.transform, cfg.train, cfg, results_dir=results_dir)
    code_dir = results_dir / args.transform
    code_dir.mkdir(parents=True, exist_ok=True)
    evalharness.emit_report(report, code_dir / "report.json")
    print(f"{args.transform}: mean={report.mean:.3f} std={report.std:.3f}")
    return EXIT_OK


def cmd_report(cfg, args) -> int:
    results_dir = Path(cfg.eval.results_dir)
    reports = []
    for code in TRANSFORM_CODES:
        path = results_dir / code / "report.json"
        if path.exists():
            reports.append(evalharness.EvalReport.from_json(path.read_text()))
    if not reports:
        print(f"no reports found under {results_dir}", file=sys.stderr)
        return EXIT_RUNTIME
    table = evalharness.aggregate_table(reports)
    (results_dir / "table.csv").write_text(table, newline="\n")
    grid = evalharness.render_confusion_grid(reports)
    (results_dir / "confusion_matrices.txt").write_text(grid, newline="\n")
    print(table, end="")
    print(f"wrote {results_dir / 'table.csv'} and {results_dir / 'confusion_matrices.txt'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavediag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_transform in (("gen", False), ("transform", True), ("cv", True), ("report", False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--threads", type=int, default=1, help="worker threads for parallel stages")
        if needs_transform:
            p.add_argument("--transform", required=True, help=f"one of: {', '.join(TRANSFORM_CODES)}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "transform", None) is not None and args.transform not in TRANSFORM_CODES:
        print(
            f"unknown transform code {args.transform!r}; valid codes: {', '.join(TRANSFORM_CODES)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if getattr(args, "threads", 1) < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handler = {"gen": cmd_gen, "transform": cmd_transform, "cv": cmd_cv, "report": cmd_report}[args.command]
    try:
        return handler(cfg, args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())
