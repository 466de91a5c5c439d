import numpy as np
import pytest

from wavediag import cnn
from wavediag.prng import CounterRng


def tiny_params(seed=11):
    """8x8x3 input -> conv 3x3x3->2 (same) -> relu -> pool -> dense 32->5."""
    rng = CounterRng(seed)
    return {
        "cw": np.sqrt(2 / 27) * rng.normals(54).reshape(3, 3, 3, 2),
        "cb": 0.1 * rng.normals(2),
        "dw": np.sqrt(2 / 32) * rng.normals(160).reshape(32, 5),
        "db": 0.1 * rng.normals(5),
    }


def tiny_forward(p, x, y):
    z, cols = cnn.conv3x3_forward(x, p["cw"], p["cb"])
    a = cnn.relu(z)
    pool, winner = cnn.maxpool2_forward(a)
    flat = pool.reshape(len(x), -1)
    logits = cnn.dense_forward(flat, p["dw"], p["db"])
    loss, dlogits = cnn.loss_softmax_ce(logits, y)
    cache = (z, cols, a, pool, winner, flat)
    return loss, dlogits, cache


def tiny_backward(p, x, dlogits, cache):
    z, cols, a, pool, winner, flat = cache
    dflat, ddw, ddb = cnn.dense_backward(dlogits, flat, p["dw"])
    da = cnn.maxpool2_backward(dflat.reshape(pool.shape), winner, a.shape)
    dz = cnn.relu_backward(da, z)
    _, dcw, dcb = cnn.conv3x3_backward(dz, cols, p["cw"], x.shape)
    return {"cw": dcw, "cb": dcb, "dw": ddw, "db": ddb}


def fd_check(params, loss_fn, grads, h=1e-5):
    """Max relative error of analytic grads vs central finite differences."""
    worst = 0.0
    for name, arr in params.items():
        flat = arr.ravel()
        analytic = grads[name].ravel()
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            plus = loss_fn()
            flat[i] = saved - h
            minus = loss_fn()
            flat[i] = saved
            fd = (plus - minus) / (2 * h)
            denom = max(abs(analytic[i]), abs(fd))
            err = abs(analytic[i] - fd) if denom < 1e-8 else abs(analytic[i] - fd) / denom
            worst = max(worst, err)
    return worst


class TestGradients:
    def test_tiny_model_finite_difference_check(self):
        p = tiny_params()
        rng = CounterRng(12)
        x = rng.uniforms(2 * 8 * 8 * 3).reshape(2, 8, 8, 3)
        y = np.array([1, 4])
        loss, dlogits, cache = tiny_forward(p, x, y)
        grads = tiny_backward(p, x, dlogits, cache)
        worst = fd_check(p, lambda: tiny_forward(p, x, y)[0], grads)
        assert worst < 1e-6

    def test_full_model_sampled_finite_differences(self):
        model = cnn.CnnModel.init(21)
        rng = CounterRng(22)
        x = rng.uniforms(2 * 32 * 32 * 3).reshape(2, 32, 32, 3) * 0.4
        y = np.array([0, 3])
        logits, cache = cnn.forward_cached(model, x)
        _, dlogits = cnn.loss_softmax_ce(logits, y)
        grads = cnn.backward(model, cache, dlogits)

        def loss_fn():
            lg = cnn.forward(model, x)
            return cnn.loss_softmax_ce(lg, y)[0]

        h = 1e-5
        worst = 0.0
        pick = CounterRng(23)
        for name, arr in model.params.items():
            flat = arr.ravel()
            idxs = (pick.uniforms(12) * flat.size).astype(int)
            for i in idxs:
                saved = flat[i]
                flat[i] = saved + h
                plus = loss_fn()
                flat[i] = saved - h
                minus = loss_fn()
                flat[i] = saved
                fd = (plus - minus) / (2 * h)
                ga = grads[name].ravel()[i]
                denom = max(abs(ga), abs(fd))
                err = abs(ga - fd) if denom < 1e-8 else abs(ga - fd) / denom
                worst = max(worst, err)
        assert worst < 1e-6

    def test_zero_dlogits_zero_grads(self):
        p = tiny_params()
        rng = CounterRng(14)
        x = rng.uniforms(2 * 8 * 8 * 3).reshape(2, 8, 8, 3)
        y = np.array([0, 2])
        _, _, cache = tiny_forward(p, x, y)
        grads = tiny_backward(p, x, np.zeros((2, 5)), cache)
        assert all(np.all(g == 0) for g in grads.values())

    def test_backward_linear_in_dlogits(self):
        p = tiny_params()
        rng = CounterRng(15)
        x = rng.uniforms(2 * 8 * 8 * 3).reshape(2, 8, 8, 3)
        y = np.array([0, 2])
        _, dlogits, cache = tiny_forward(p, x, y)
        g1 = tiny_backward(p, x, dlogits, cache)
        g2 = tiny_backward(p, x, 2.0 * dlogits, cache)
        for name in g1:
            assert np.abs(g2[name] - 2.0 * g1[name]).max() < 1e-12


class TestLoss:
    def test_uniform_logits_give_ln5(self):
        loss, _ = cnn.loss_softmax_ce(np.zeros((4, 5)), np.array([0, 1, 2, 3]))
        assert loss == pytest.approx(np.log(5.0), abs=1e-12)

    def test_saturated_correct_logits(self):
        logits = np.zeros((3, 5))
        labels = np.array([1, 2, 4])
        logits[np.arange(3), labels] = 50.0
        loss, _ = cnn.loss_softmax_ce(logits, labels)
        assert loss < 1e-15

    def test_dlogits_rows_sum_to_zero(self):
        rng = CounterRng(8)
        logits = rng.normals(6 * 5).reshape(6, 5)
        _, dlogits = cnn.loss_softmax_ce(logits, np.array([0, 1, 2, 3, 4, 0]))
        assert np.abs(dlogits.sum(axis=1)).max() < 1e-12

    def test_extreme_logits_stable(self):
        logits = np.array([[1000.0, 0.0, 0.0, 0.0, 0.0]])
        loss, dlogits = cnn.loss_softmax_ce(logits, np.array([0]))
        assert np.isfinite(loss) and np.isfinite(dlogits).all()


class TestForward:
    def test_zero_model_uniform_softmax(self):
        model = cnn.CnnModel.init(1)
        for name in model.params:
            model.params[name] = np.zeros_like(model.params[name])
        x = CounterRng(2).uniforms(3 * 32 * 32 * 3).reshape(3, 32, 32, 3)
        logits = cnn.forward(model, x)
        assert np.all(logits == 0.0)
        _, probs = cnn.predict(model, x)
        assert np.allclose(probs, 0.2)

    def test_identical_images_identical_logits(self):
        model = cnn.CnnModel.init(3)
        x = np.tile(CounterRng(4).uniforms(32 * 32 * 3).reshape(1, 32, 32, 3), (4, 1, 1, 1))
        logits = cnn.forward(model, x)
        assert np.all(logits == logits[0])

    def test_batch_permutation_permutes_logits(self):
        model = cnn.CnnModel.init(5)
        x = CounterRng(6).uniforms(6 * 32 * 32 * 3).reshape(6, 32, 32, 3)
        perm = np.array([3, 1, 5, 0, 2, 4])
        assert np.array_equal(cnn.forward(model, x)[perm], cnn.forward(model, x[perm]))

    def test_wrong_shape_rejected(self):
        model = cnn.CnnModel.init(1)
        with pytest.raises(ValueError, match="32, 32, 3"):
            cnn.forward(model, np.zeros((2, 16, 16, 3)))


class TestPredict:
    def test_tie_breaks_to_lowest_code(self):
        probs = cnn.softmax_probs(np.zeros((1, 5)))
        assert probs.argmax() == 0
        model = cnn.CnnModel.init(1)
        for name in model.params:
            model.params[name] = np.zeros_like(model.params[name])
        codes, _ = cnn.predict(model, np.zeros((2, 32, 32, 3)))
        assert codes.tolist() == [0, 0]

    def test_probabilities_normalized(self):
        model = cnn.CnnModel.init(7)
        x = CounterRng(8).uniforms(5 * 32 * 32 * 3).reshape(5, 32, 32, 3)
        _, probs = cnn.predict(model, x)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-12

    def test_shift_invariance(self):
        rng = CounterRng(9)
        logits = rng.normals(4 * 5).reshape(4, 5)
        shifted = logits + 3.7
        assert np.array_equal(logits.argmax(axis=1), shifted.argmax(axis=1))
        assert np.abs(cnn.softmax_probs(logits) - cnn.softmax_probs(shifted)).max() < 1e-12


class TestModel:
    def test_parameter_count(self):
        assert cnn.CnnModel.init(0).param_count() == 268005

    def test_he_init_deterministic_and_scaled(self):
        a = cnn.CnnModel.init(42)
        b = cnn.CnnModel.init(42)
        for name in a.params:
            assert np.array_equal(a.params[name], b.params[name])
        w = a.params["conv1_w"]
        assert abs(w.std() - np.sqrt(2 / 27)) < 0.02
        assert np.all(a.params["conv1_b"] == 0)

    def test_checkpoint_round_trip(self, tmp_path):
        model = cnn.CnnModel.init(13)
        path = tmp_path / "model.wdnn"
        cnn.save_checkpoint(model, path)
        raw = path.read_bytes()
        assert raw[:4] == b"WDNN"
        loaded = cnn.load_checkpoint(path)
        for name in model.params:
            assert np.array_equal(loaded.params[name], model.params[name])
        cnn.save_checkpoint(loaded, tmp_path / "again.wdnn")
        assert (tmp_path / "again.wdnn").read_bytes() == raw

    def test_checkpoint_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wdnn"
        path.write_bytes(b"XXXX" + b"\0" * 100)
        with pytest.raises(ValueError, match="not a model checkpoint"):
            cnn.load_checkpoint(path)


def toy_dataset(n=100, n_classes=5, seed=9):
    """Trivially separable images: one bright row band per class."""
    rng = CounterRng(seed)
    images = 0.1 * rng.uniforms(n * 32 * 32 * 3).reshape(n, 32, 32, 3)
    labels = np.arange(n) % n_classes
    for i in range(n):
        row = 2 + 5 * labels[i]
        images[i, row : row + 4, :, labels[i] % 3] += 0.8
    return images, labels


class TestTraining:
    def test_toy_set_reaches_full_train_accuracy(self):
        images, labels = toy_dataset(100, n_classes=2)
        model = cnn.CnnModel.init(2)
        config = cnn.TrainConfig(epochs=50, batch_size=16, learning_rate=1e-3, seed=1,
                                 early_stop_patience=50)
        history = cnn.train(model, images, labels, images[:20], labels[:20], config)
        assert max(h.train_acc for h in history) == 1.0
        assert len(history) <= 50

    def test_history_deterministic(self):
        images, labels = toy_dataset(60)
        config = cnn.TrainConfig(epochs=3, batch_size=16, learning_rate=1e-3, seed=5,
                                 early_stop_patience=8)
        h1 = cnn.train(cnn.CnnModel.init(4), images, labels, images[:10], labels[:10], config)
        h2 = cnn.train(cnn.CnnModel.init(4), images, labels, images[:10], labels[:10], config)
        assert h1 == h2

    def test_early_stopping_restores_best(self):
        images, labels = toy_dataset(60)
        config = cnn.TrainConfig(epochs=40, batch_size=16, learning_rate=3e-2, optimizer="sgd",
                                 seed=3, early_stop_patience=2)
        model = cnn.CnnModel.init(4)
        history = cnn.train(model, images, labels, images[:10], labels[:10], config)
        best_epoch = min(history, key=lambda h: h.val_loss)
        val_loss, _ = cnn.evaluate(model, images[:10], labels[:10])
        assert val_loss == pytest.approx(best_epoch.val_loss, abs=1e-12)

    def test_initial_loss_near_ln5_on_balanced_data(self):
        rng = CounterRng(31)
        images = rng.uniforms(100 * 32 * 32 * 3).reshape(100, 32, 32, 3) * 0.2
        labels = np.arange(100) % 5
        for seed in (0, 1, 2):
            model = cnn.CnnModel.init(seed)
            loss, _ = cnn.loss_softmax_ce(cnn.forward(model, images), labels)
            assert abs(loss - np.log(5.0)) <= 0.1

    def test_batch_size_validation(self):
        images, labels = toy_dataset(20)
        config = cnn.TrainConfig(epochs=1, batch_size=64, learning_rate=1e-3, seed=1)
        with pytest.raises(ValueError, match="batch_size"):
            cnn.train(cnn.CnnModel.init(0), images, labels, images[:5], labels[:5], config)

    def test_empty_split_rejected(self):
        images, labels = toy_dataset(20)
        config = cnn.TrainConfig(epochs=1, batch_size=4, learning_rate=1e-3, seed=1)
        with pytest.raises(ValueError, match="nonempty"):
            cnn.train(cnn.CnnModel.init(0), images, labels, images[:0], labels[:0], config)

    def test_sgd_optimizer_supported(self):
        images, labels = toy_dataset(40)
        config = cnn.TrainConfig(epochs=2, batch_size=8, learning_rate=1e-2, optimizer="sgd", seed=2)
        history = cnn.train(cnn.CnnModel.init(1), images, labels, images[:8], labels[:8], config)
        assert len(history) == 2

    def test_history_csv_format(self, tmp_path):
        stats = [cnn.EpochStats(0, 0.5, 0.4, 1.2, 1.3), cnn.EpochStats(1, 0.8, 0.7, 0.6, 0.7)]
        path = tmp_path / "history.csv"
        cnn.write_history_csv(stats, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,train_acc,val_acc,train_loss,val_loss"
        assert lines[1].startswith("0,0.5,0.4,")


def test_train_config_validation():
    with pytest.raises(ValueError):
        cnn.TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        cnn.TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        cnn.TrainConfig(learning_rate=-1.0)
