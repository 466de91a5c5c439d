"""Small convolutional network for 32x32 RGB time-frequency images.

Everything is plain NumPy in float64: layers are pure functions with exact
analytic backward passes (pinned against finite differences in the tests),
and training is a deterministic mini-batch loop whose shuffles come from the
package's counter PRNG.  Fixed architecture:

    Conv 3x3, 3->16, same padding -> ReLU -> MaxPool 2x2
    Conv 3x3, 16->32, same padding -> ReLU -> MaxPool 2x2
    Flatten (8*8*32 = 2048) -> Dense 2048->128 -> ReLU -> Dense 128->5

268,005 parameters in total.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .prng import CounterRng, derive_seed

N_CLASSES = 5
INPUT_SHAPE = (32, 32, 3)
CHECKPOINT_MAGIC = b"WDNN"
CHECKPOINT_VERSION = 1

PARAM_SHAPES = {
    "conv1_w": (3, 3, 3, 16),
    "conv1_b": (16,),
    "conv2_w": (3, 3, 16, 32),
    "conv2_b": (32,),
    "fc1_w": (2048, 128),
    "fc1_b": (128,),
    "fc2_w": (128, 5),
    "fc2_b": (5,),
}
PARAM_ORDER = tuple(PARAM_SHAPES)


# ---------------------------------------------------------------------------
# layer primitives (NHWC layout)


def _im2col(x: np.ndarray) -> np.ndarray:
    """Gather 3x3 neighborhoods (zero padded) into (B*H*W, 9*Cin) columns.

    Column order is (ky, kx, channel), matching a row-major reshape of the
    (3, 3, Cin, Cout) weight tensor.  Copies row-wise: for each kernel row
    the (kx, channel) values are contiguous in the padded array, so one
    strided view covers three taps at a time.
    """
    bsz, h, wd, cin = x.shape
    padded = np.zeros((bsz, h + 2, wd + 2, cin))
    padded[:, 1:-1, 1:-1, :] = x
    cols = np.empty((bsz, h, wd, 9 * cin))
    sb, sy, sx, sc = padded.strides
    for ky in range(3):
        rows = np.lib.stride_tricks.as_strided(
            padded[:, ky:, :, :], shape=(bsz, h, wd, 3 * cin), strides=(sb, sy, sx, sc)
        )
        cols[..., ky * 3 * cin : (ky + 1) * 3 * cin] = rows
    return cols.reshape(-1, 9 * cin)


def _col2im(dcols: np.ndarray, x_shape) -> np.ndarray:
    """Scatter-add column gradients back onto the (unpadded) input."""
    bsz, h, wd, cin = x_shape
    dpadded = np.zeros((bsz, h + 2, wd + 2, cin))
    for tap in range(9):
        ky, kx = divmod(tap, 3)
        dpadded[:, ky : ky + h, kx : kx + wd, :] += dcols[..., tap * cin : (tap + 1) * cin]
    return dpadded[:, 1:-1, 1:-1, :]


def conv3x3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, cols: np.ndarray | None = None):
    """Same-padded 3x3 convolution, stride 1, as one im2col matmul.

    Returns (out, cols); pass ``cols`` back to :func:`conv3x3_backward` to
    avoid regathering.
    """
    bsz, h, wd, cin = x.shape
    cout = w.shape[3]
    if cols is None:
        cols = _im2col(x)
    out = (cols @ w.reshape(9 * cin, cout) + b).reshape(bsz, h, wd, cout)
    return out, cols


def conv3x3_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, x_shape, need_dx: bool = True):
    """Gradients (dx, dw, db) for :func:`conv3x3_forward`.

    ``need_dx=False`` skips the input gradient (first layer), returning None
    in its place.
    """
    bsz, h, wd, cin = x_shape
    cout = w.shape[3]
    dflat = dout.reshape(-1, cout)
    dw = (cols.T @ dflat).reshape(w.shape)
    db = dout.sum(axis=(0, 1, 2))
    if not need_dx:
        return None, dw, db
    dcols = (dflat @ w.reshape(9 * cin, cout).T).reshape(bsz, h, wd, 9 * cin)
    return _col2im(dcols, x_shape), dw, db


def maxpool2_forward(x: np.ndarray):
    """2x2 max pooling, stride 2, on even spatial dims; returns (out, winner).

    ``winner`` holds the flat window position (0..3, row-major) of the
    maximum, first position winning ties, as :func:`maxpool2_backward` needs.
    """
    bsz, h, wd, c = x.shape
    if h % 2 or wd % 2:
        raise ValueError("maxpool2 requires even spatial dimensions")
    v = [x[:, ky::2, kx::2, :] for ky in (0, 1) for kx in (0, 1)]
    top_right = v[1] > v[0]
    best_top = np.where(top_right, np.int8(1), np.int8(0))
    val_top = np.maximum(v[0], v[1])
    bot_right = v[3] > v[2]
    best_bot = np.where(bot_right, np.int8(3), np.int8(2))
    val_bot = np.maximum(v[2], v[3])
    bot_wins = val_bot > val_top
    winner = np.where(bot_wins, best_bot, best_top)
    return np.maximum(val_top, val_bot), winner


def maxpool2_backward(dout: np.ndarray, winner: np.ndarray, x_shape) -> np.ndarray:
    """Route gradients to the winning position of each window."""
    dx = np.zeros(x_shape)
    for tap in range(4):
        ky, kx = divmod(tap, 2)
        np.copyto(dx[:, ky::2, kx::2, :], dout, where=winner == tap)
    return dx


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def dense_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0.0)


# ---------------------------------------------------------------------------
# model


@dataclass
class CnnModel:
    """Parameter container for the fixed two-block architecture."""

    params: dict[str, np.ndarray]
    rng_seed: int = 0

    @classmethod
    def init(cls, seed: int) -> "CnnModel":
        """He-normal weights (std sqrt(2/fan_in)), zero biases, drawn from
        one counter stream in PARAM_ORDER."""
        rng = CounterRng(seed)
        params = {}
        for name, shape in PARAM_SHAPES.items():
            if name.endswith("_b"):
                params[name] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[:-1]))
                std = np.sqrt(2.0 / fan_in)
                params[name] = std * rng.normals(int(np.prod(shape))).reshape(shape)
        return cls(params=params, rng_seed=int(seed))

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}


def forward_cached(model: CnnModel, batch: np.ndarray):
    """Forward pass keeping the activations needed by :func:`backward`."""
    if batch.ndim != 4 or batch.shape[1:] != INPUT_SHAPE:
        raise ValueError(f"expected batch of shape (B, 32, 32, 3), got {batch.shape}")
    p = model.params
    cache = {"x": batch}
    cache["z1"], cache["cols1"] = conv3x3_forward(batch, p["conv1_w"], p["conv1_b"])
    cache["a1"] = relu(cache["z1"])
    cache["p1"], cache["i1"] = maxpool2_forward(cache["a1"])
    cache["z2"], cache["cols2"] = conv3x3_forward(cache["p1"], p["conv2_w"], p["conv2_b"])
    cache["a2"] = relu(cache["z2"])
    cache["p2"], cache["i2"] = maxpool2_forward(cache["a2"])
    cache["flat"] = cache["p2"].reshape(batch.shape[0], -1)
    cache["z3"] = dense_forward(cache["flat"], p["fc1_w"], p["fc1_b"])
    cache["a3"] = relu(cache["z3"])
    logits = dense_forward(cache["a3"], p["fc2_w"], p["fc2_b"])
    return logits, cache


def forward(model: CnnModel, batch: np.ndarray) -> np.ndarray:
    """Logits for a batch of images with values in [0, 1]."""
    return forward_cached(model, batch)[0]


def backward(model: CnnModel, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Exact analytic gradients for every parameter tensor."""
    p = model.params
    grads = {}
    da3, grads["fc2_w"], grads["fc2_b"] = dense_backward(dlogits, cache["a3"], p["fc2_w"])
    dz3 = relu_backward(da3, cache["z3"])
    dflat, grads["fc1_w"], grads["fc1_b"] = dense_backward(dz3, cache["flat"], p["fc1_w"])
    dp2 = dflat.reshape(cache["p2"].shape)
    da2 = maxpool2_backward(dp2, cache["i2"], cache["a2"].shape)
    dz2 = relu_backward(da2, cache["z2"])
    dp1, grads["conv2_w"], grads["conv2_b"] = conv3x3_backward(
        dz2, cache["cols2"], p["conv2_w"], cache["p1"].shape
    )
    da1 = maxpool2_backward(dp1, cache["i1"], cache["a1"].shape)
    dz1 = relu_backward(da1, cache["z1"])
    _, grads["conv1_w"], grads["conv1_b"] = conv3x3_backward(
        dz1, cache["cols1"], p["conv1_w"], cache["x"].shape, need_dx=False
    )
    return grads


def loss_softmax_ce(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy with log-sum-exp stabilization; returns (loss, dlogits)."""
    labels = np.asarray(labels)
    bsz = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    loss = -logp[np.arange(bsz), labels].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(bsz), labels] -= 1.0
    return float(loss), dlogits / bsz


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict(model: CnnModel, images: np.ndarray, batch_size: int = 64):
    """(class codes, probability rows); argmax ties break to the lowest code."""
    probs = np.concatenate(
        [softmax_probs(forward(model, images[i : i + batch_size])) for i in range(0, len(images), batch_size)]
    )
    return probs.argmax(axis=1), probs


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    early_stop_patience: int = 8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size, learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_acc: float
    val_acc: float
    train_loss: float
    val_loss: float


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for name in PARAM_ORDER:
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            mhat = m / (1.0 - self.beta1**self.t)
            vhat = v / (1.0 - self.beta2**self.t)
            params[name] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for name in PARAM_ORDER:
            params[name] -= self.lr * grads[name]


def evaluate(model: CnnModel, images: np.ndarray, labels: np.ndarray, batch_size: int = 64):
    """(mean loss, accuracy) over a labeled image set."""
    total_loss = 0.0
    correct = 0
    for i in range(0, len(images), batch_size):
        xb, yb = images[i : i + batch_size], labels[i : i + batch_size]
        logits = forward(model, xb)
        loss, _ = loss_softmax_ce(logits, yb)
        total_loss += loss * len(xb)
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total_loss / len(images), correct / len(images)


def train(
    model: CnnModel,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    val_images: np.ndarray,
    val_labels: np.ndarray,
    config: TrainConfig,
) -> list[EpochStats]:
    """Mini-batch training with early stopping on validation loss.

    Shuffle order per epoch is a pure function of (config.seed, epoch);
    stops once val_loss has not improved for ``early_stop_patience`` epochs
    and restores the best-validation parameters.  Returns the per-epoch
    history; the model is updated in place.
    """
    if len(train_images) == 0 or len(val_images) == 0:
        raise ValueError("training and validation splits must be nonempty")
    if config.batch_size > len(train_images):
        raise ValueError("batch_size exceeds training-set size")
    opt = _Adam(config.learning_rate) if config.optimizer == "adam" else _Sgd(config.learning_rate)
    history: list[EpochStats] = []
    best_loss = np.inf
    best_params = model.copy_params()
    wait = 0

    for epoch in range(config.epochs):
        perm = CounterRng(derive_seed(config.seed, epoch)).permutation(len(train_images))
        running_loss = 0.0
        running_correct = 0
        for i in range(0, len(perm), config.batch_size):
            idx = perm[i : i + config.batch_size]
            xb, yb = train_images[idx], train_labels[idx]
            logits, cache = forward_cached(model, xb)
            loss, dlogits = loss_softmax_ce(logits, yb)
            grads = backward(model, cache, dlogits)
            opt.step(model.params, grads)
            running_loss += loss * len(idx)
            running_correct += int((logits.argmax(axis=1) == yb).sum())
        val_loss, val_acc = evaluate(model, val_images, val_labels)
        history.append(
            EpochStats(
                epoch=epoch,
                train_acc=running_correct / len(perm),
                val_acc=val_acc,
                train_loss=running_loss / len(perm),
                val_loss=val_loss,
            )
        )
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = model.copy_params()
            wait = 0
        else:
            wait += 1
            if wait >= config.early_stop_patience:
                break
    model.params = best_params
    return history


def write_history_csv(history: list[EpochStats], path: str | Path) -> None:
    lines = ["epoch,train_acc,val_acc,train_loss,val_loss"]
    for h in history:
        lines.append(f"{h.epoch},{h.train_acc!r},{h.val_acc!r},{h.train_loss!r},{h.val_loss!r}")
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: CnnModel, path: str | Path) -> None:
    """Binary: magic, u32 version, u32 n_tensors, then per tensor
    u32 rank, u32 dims..., little-endian float64 data, in PARAM_ORDER."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(PARAM_ORDER))]
    for name in PARAM_ORDER:
        arr = model.params[name]
        chunks.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        chunks.append(arr.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> CnnModel:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint")
    version, n_tensors = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    if n_tensors != len(PARAM_ORDER):
        raise ValueError(f"{path}: expected {len(PARAM_ORDER)} tensors, found {n_tensors}")
    offset = 12
    params = {}
    for name in PARAM_ORDER:
        (rank,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}I", raw, offset)
        offset += 4 * rank
        if dims != PARAM_SHAPES[name]:
            raise ValueError(f"{path}: tensor {name} has shape {dims}, expected {PARAM_SHAPES[name]}")
        count = int(np.prod(dims))
        params[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(dims).copy()
        offset += 8 * count
    return CnnModel(params=params, rng_seed=0)
