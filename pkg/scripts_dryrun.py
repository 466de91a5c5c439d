"""Full desk-scale dry run matching the acceptance configuration."""
import time
from pathlib import Path

from wavediag import cnn
from wavediag.config import PipelineConfig
from wavediag.evalharness import run_cv
from wavediag.pipeline import ensure_images, load_images
from wavediag.raster import TRANSFORM_CODES
from wavediag.signals import DatasetConfig, DatasetManifest, build_dataset

ROOT = Path("/tmp/wavediag_dry")
ROOT.mkdir(parents=True, exist_ok=True)

cfg = PipelineConfig()
cfg.dataset.out_dir = str(ROOT / "data")
cfg.eval.results_dir = str(ROOT / "results")

t0 = time.time()
manifest_path = Path(cfg.dataset.out_dir) / "manifest.json"
if manifest_path.exists():
    manifest = DatasetManifest.load(manifest_path)
    print(f"reusing dataset ({len(manifest.records)} records)")
else:
    manifest = build_dataset(DatasetConfig(out_dir=cfg.dataset.out_dir))
    print(f"gen: {len(manifest.records)} records in {time.time()-t0:.1f}s", flush=True)

for code in TRANSFORM_CODES:
    t0 = time.time()
    built = ensure_images(manifest, code, cfg.dataset.out_dir, cfg.transform, threads=2)
    print(f"transform {code}: {built} built in {time.time()-t0:.1f}s", flush=True)

# initial loss on real images (for the ledger)
images, labels, _ = load_images(manifest, "wt-morse", cfg.dataset.out_dir)
model = cnn.CnnModel.init(0)
loss, _ = cnn.loss_softmax_ce(cnn.forward(model, images[:100]), labels[:100])
print(f"initial He-init loss on real wt-morse images: {loss:.4f}", flush=True)

for code in TRANSFORM_CODES:
    t0 = time.time()
    report = run_cv(manifest, code, cfg.train, cfg, results_dir=cfg.eval.results_dir)
    print(
        f"cv {code}: mean={report.mean:.4f} std={report.std:.4f} "
        f"folds={[round(a,3) for a in report.per_fold_accuracy]} in {time.time()-t0:.1f}s",
        flush=True,
    )

# criterion 10 probe: memorization on 100 real images
sub = slice(0, 100)
tc = cnn.TrainConfig(epochs=50, batch_size=32, learning_rate=1e-3, seed=9, early_stop_patience=50)
model = cnn.CnnModel.init(9)
t0 = time.time()
hist = cnn.train(model, images[sub], labels[sub], images[sub], labels[sub], tc)
preds, _ = cnn.predict(model, images[sub])
acc = (preds == labels[sub]).mean()
print(f"memorization: acc={acc:.3f} epochs={len(hist)} in {time.time()-t0:.1f}s", flush=True)
