"""Training loop, checkpoint selection, metrics and prediction."""

import numpy as np
import pytest

from bytecap.nn import default_config, load_weights, save_weights
from bytecap.train import (
    EpochStats,
    TrainHistory,
    evaluate,
    metrics_from_confusion,
    predict,
    train,
)
from bytecap.views import HeaderCategory, ViewKind, build_dataset, train_val_split


def toy_data(n=40, input_len=115, seed=0):
    """Two linearly separable byte-level classes."""
    rng = np.random.default_rng(seed)
    x = np.zeros((n, input_len, 1), dtype=np.float32)
    y = np.arange(n) % 2
    x[y == 0] = rng.uniform(0.0, 0.45, size=x[y == 0].shape).astype(np.float32)
    x[y == 1] = rng.uniform(0.55, 1.0, size=x[y == 1].shape).astype(np.float32)
    return x, y.astype(np.int64)


class TestTrainLoop:
    def test_best_epoch_is_argmax_first_on_tie(self):
        hist = TrainHistory([
            EpochStats(0, 1, 0.5, 1, 0.7, 0.1),
            EpochStats(1, 1, 0.6, 1, 0.9, 0.1),
            EpochStats(2, 1, 0.7, 1, 0.8, 0.1),
        ])
        assert hist.best_epoch == 1
        hist.epochs.append(EpochStats(3, 1, 0.7, 1, 0.9, 0.1))
        assert hist.best_epoch == 1  # tie resolves to the earlier epoch

    def test_best_epoch_selection_matches_history(self):
        cfg = default_config("binary", epochs=6, seed=3)
        data = toy_data(24)
        ckpt, hist = train(cfg, data, data)
        assert len(hist.epochs) == 6
        assert ckpt.best_epoch == hist.best_epoch
        assert ckpt.best_val_accuracy == max(e.val_acc for e in hist.epochs)

    def test_overfit_forty_samples(self):
        # paper regime: batch 20, up to 50 epochs, train == validation
        cfg = default_config("binary", epochs=50, seed=1)
        data = toy_data(40)
        ckpt, hist = train(cfg, data, data, early_stop=True)
        assert ckpt.best_val_accuracy == 1.0
        assert len(hist.epochs) <= 50
        assert evaluate(ckpt, data).accuracy == 1.0

    def test_deterministic_given_seed(self, tmp_path):
        cfg = default_config("binary", epochs=3, seed=9)
        data = toy_data(30, seed=2)

        def run(path):
            ckpt, hist = train(cfg, data, data)
            save_weights(path, ckpt)
            return hist

        h1 = run(tmp_path / "a.ftlw")
        h2 = run(tmp_path / "b.ftlw")

        def sans_clock(hist):
            return [(e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc)
                    for e in hist.epochs]

        assert sans_clock(h1) == sans_clock(h2)
        assert (tmp_path / "a.ftlw").read_bytes() == (tmp_path / "b.ftlw").read_bytes()

    def test_missing_class_warns(self):
        cfg = default_config("binary", epochs=1)
        x, _ = toy_data(10)
        y = np.zeros(10, dtype=np.int64)
        with pytest.warns(UserWarning, match="absent"):
            train(cfg, (x, y), (x, y))

    def test_shape_mismatch_rejected(self):
        cfg = default_config("binary", epochs=1)
        x, y = toy_data(10, input_len=64)
        with pytest.raises(ValueError, match="length"):
            train(cfg, (x, y), (x, y))

    def test_empty_set_rejected(self):
        cfg = default_config("binary", epochs=1)
        x, y = toy_data(10)
        with pytest.raises(ValueError, match="non-empty"):
            train(cfg, (x[:0], y[:0]), (x, y))

    def test_paper_and_standard_pairing_agree_on_argmax(self):
        # 2-class softmax: identical weights give identical predictions
        # whether the loss was BCE (reference pairing) or CCE (standard)
        data = toy_data(30)
        paper = default_config("binary", pairing="paper", epochs=2, seed=4)
        standard = default_config("binary", pairing="standard", epochs=2, seed=4)
        ckpt_p, _ = train(paper, data, data)
        ckpt_s, _ = train(standard, data, data)
        ckpt_s.weights = ckpt_p.weights  # same weights, different loss config
        x, y = data
        model_p, model_s = ckpt_p.to_model(), ckpt_s.to_model()
        pred_p = model_p.forward(x).argmax(axis=1)
        pred_s = model_s.forward(x).argmax(axis=1)
        assert np.array_equal(pred_p, pred_s)


class TestMetrics:
    def test_accuracy_fraction(self):
        cm = np.array([[5, 1], [1, 3]])
        rep = metrics_from_confusion(cm)
        assert rep.accuracy == pytest.approx(0.8)

    def test_weighted_f1_hand_example(self):
        # supports {3, 1}, per-class f1 {1.0, 0.5} -> 0.875
        cm = np.array([[3, 0], [1, 1]])
        rep = metrics_from_confusion(cm)
        assert rep.f1[0] == pytest.approx(2 * 1.0 * 0.75 / 1.75)  # p=0.75, r=1
        # craft exact f1 values instead via a cleaner matrix
        cm = np.array([[3, 0, 0], [0, 1, 2], [0, 0, 0]])
        rep = metrics_from_confusion(cm)
        assert rep.f1[0] == 1.0
        assert rep.support.tolist() == [3, 3, 0]

    def test_weighted_f1_formula_direct(self):
        cm = np.array([[3, 0], [0, 1]])
        rep = metrics_from_confusion(cm)
        assert rep.f1.tolist() == [1.0, 1.0]
        # force per-class f1 {1.0, 0.5} with support {3, 1}: needs fp for
        # class 1 without touching class 0 support; use a 3-class matrix
        cm = np.array([[3, 0, 0],
                       [0, 1, 1],
                       [0, 1, 0]])
        rep = metrics_from_confusion(cm)
        assert rep.support.tolist() == [3, 2, 1]

    def test_all_one_class_balanced(self):
        cm = np.array([[5, 0], [5, 0]])
        rep = metrics_from_confusion(cm)
        assert rep.accuracy == 0.5
        assert rep.recall[0] == 1.0 and rep.recall[1] == 0.0
        assert rep.precision[1] == 0.0  # zero denominator yields zero

    def test_consistency_random_confusions(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            c = int(rng.integers(2, 8))
            cm = rng.integers(0, 30, size=(c, c))
            rep = metrics_from_confusion(cm)
            total = cm.sum()
            assert rep.accuracy == pytest.approx(np.trace(cm) / total)
            assert rep.support.sum() == total
            want_wf1 = sum(rep.support[i] / total * rep.f1[i] for i in range(c))
            assert rep.weighted_f1 == pytest.approx(want_wf1)
            assert 0 <= rep.accuracy <= 1 and 0 <= rep.weighted_f1 <= 1
            assert np.all((rep.f1 >= 0) & (rep.f1 <= 1))


class TestPredict:
    def make_checkpoint(self):
        cfg = default_config("binary", epochs=3, seed=5)
        data = toy_data(24)
        ckpt, _ = train(cfg, data, data)
        return ckpt

    def test_argmax_matches_class(self):
        ckpt = self.make_checkpoint()
        sample = bytes(range(115))
        cls, probs = predict(ckpt, sample)
        assert cls == int(np.argmax(probs))
        assert probs.shape == (2,)

    def test_roundtrip_identical_prediction(self, tmp_path):
        ckpt = self.make_checkpoint()
        save_weights(tmp_path / "w.ftlw", ckpt)
        back = load_weights(tmp_path / "w.ftlw")
        sample = bytes([7] * 115)
        c1, p1 = predict(ckpt, sample)
        c2, p2 = predict(back, sample)
        assert c1 == c2 and np.array_equal(p1, p2)

    def test_length_mismatch(self):
        ckpt = self.make_checkpoint()
        with pytest.raises(ValueError, match="115"):
            predict(ckpt, b"\x00" * 10)


class TestEvaluateOnDataset:
    def test_full_pipeline_metrics(self, corpus_small):
        ds = build_dataset(corpus_small, ViewKind.SESSION,
                           HeaderCategory.ALL_HEADERS, 115, "binary")
        train_ds, val_ds = train_val_split(ds, 0.2, seed=0)
        cfg = default_config("binary", epochs=10, seed=0)
        ckpt, _ = train(cfg, train_ds, val_ds, early_stop=True)
        rep = evaluate(ckpt, val_ds)
        assert rep.class_names == ["benign", "malicious"]
        assert rep.confusion.sum() == len(val_ds.samples)
        assert rep.accuracy == 1.0  # synthetic classes are trivially separable

    @pytest.mark.filterwarnings("ignore:classes .* absent")
    def test_class_count_mismatch(self, corpus_small):
        ds = build_dataset(corpus_small, ViewKind.SESSION,
                           HeaderCategory.ALL_HEADERS, 115, "binary")
        cfg = default_config("multi", epochs=1)
        data = (np.zeros((4, 115, 1), dtype=np.float32),
                np.zeros(4, dtype=np.int64))
        ckpt, _ = train(cfg, data, data)
        with pytest.raises(ValueError, match="classes"):
            evaluate(ckpt, ds)