import math

import numpy as np
import pytest

from pathssl.probe import (
    LabeledEmbeddings,
    ProbeConfig,
    ProbeModel,
    cosine_lr,
    evaluate_accuracy,
    train_linear_probe,
)


def gaussian_blobs(rng, n_per_class=200, dim=8, separation=10.0):
    """Two unit-variance blobs separated by `separation` along the first axis."""
    shift = np.zeros(dim)
    shift[0] = separation
    neg = rng.normal(size=(n_per_class, dim))
    pos = rng.normal(size=(n_per_class, dim)) + shift
    emb = np.concatenate([neg, pos])
    labels = np.concatenate([np.zeros(n_per_class, np.int64), np.ones(n_per_class, np.int64)])
    order = rng.permutation(2 * n_per_class)
    return LabeledEmbeddings(embeddings=emb[order], labels=labels[order])


class TestCosineLr:
    def test_starts_at_base(self):
        cfg = ProbeConfig(iterations=100, base_lr=0.4, final_lr=0.1)
        assert cosine_lr(0, cfg) == 0.4

    def test_ends_at_final(self):
        cfg = ProbeConfig(iterations=100, base_lr=0.4, final_lr=0.1)
        assert math.isclose(cosine_lr(100, cfg), 0.1, rel_tol=1e-12)

    def test_midpoint_is_average(self):
        cfg = ProbeConfig(iterations=100, base_lr=0.4, final_lr=0.1)
        assert math.isclose(cosine_lr(50, cfg), 0.25, rel_tol=1e-12)

    def test_monotone_decreasing(self):
        cfg = ProbeConfig(iterations=50, base_lr=0.1, final_lr=0.0)
        rates = [cosine_lr(t, cfg) for t in range(51)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    @pytest.mark.parametrize("t", [-1, 101])
    def test_out_of_range(self, t):
        with pytest.raises(ValueError):
            cosine_lr(t, ProbeConfig(iterations=100))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ProbeConfig(iterations=-1)
        with pytest.raises(ValueError):
            ProbeConfig(base_lr=0.01, final_lr=0.02)
        with pytest.raises(ValueError):
            ProbeConfig(momentum=1.0)
        with pytest.raises(ValueError):
            ProbeConfig(batch_size=0)


class TestTrainLinearProbe:
    def test_zero_iterations_returns_zero_weights(self):
        rng = np.random.default_rng(0)
        data = gaussian_blobs(rng)
        cfg = ProbeConfig(iterations=0, batch_size=64, rng_seed=0)
        model = train_linear_probe(data, cfg)
        np.testing.assert_array_equal(model.weights, 0.0)
        np.testing.assert_array_equal(model.bias, 0.0)
        assert model.final_train_loss is None

    def test_separable_blobs_reach_high_train_accuracy(self):
        rng = np.random.default_rng(1)
        data = gaussian_blobs(rng, n_per_class=500)
        cfg = ProbeConfig(iterations=2000, batch_size=256, rng_seed=3)
        model = train_linear_probe(data, cfg)
        assert evaluate_accuracy(model, data) >= 0.99
        assert model.final_train_loss < 0.05

    def test_bit_identical_given_seed(self):
        rng = np.random.default_rng(2)
        data = gaussian_blobs(rng, n_per_class=100)
        cfg = ProbeConfig(iterations=300, batch_size=50, rng_seed=11)
        a = train_linear_probe(data, cfg)
        b = train_linear_probe(data, cfg)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)
        assert a.final_train_loss == b.final_train_loss

    def test_seed_changes_trajectory(self):
        rng = np.random.default_rng(3)
        data = gaussian_blobs(rng, n_per_class=100)
        a = train_linear_probe(data, ProbeConfig(iterations=100, batch_size=50, rng_seed=1))
        b = train_linear_probe(data, ProbeConfig(iterations=100, batch_size=50, rng_seed=2))
        assert not np.array_equal(a.weights, b.weights)

    def test_loss_trend_is_downward_on_separable_data(self):
        rng = np.random.default_rng(4)
        data = gaussian_blobs(rng, n_per_class=200)
        losses = []
        for iters in (10, 100, 400, 1200):
            cfg = ProbeConfig(iterations=iters, batch_size=100, rng_seed=5)
            losses.append(train_linear_probe(data, cfg).final_train_loss)
        assert all(a > b for a, b in zip(losses, losses[1:]))

    def test_single_class_rejected(self):
        data = LabeledEmbeddings(
            embeddings=np.random.default_rng(5).normal(size=(20, 4)),
            labels=np.zeros(20, np.int64),
        )
        with pytest.raises(ValueError, match="single class"):
            train_linear_probe(data, ProbeConfig(iterations=10, batch_size=10))

    def test_batch_size_larger_than_n_rejected(self):
        rng = np.random.default_rng(6)
        data = gaussian_blobs(rng, n_per_class=10)
        with pytest.raises(ValueError, match="batch_size"):
            train_linear_probe(data, ProbeConfig(iterations=10, batch_size=21))

    def test_multiclass(self):
        rng = np.random.default_rng(7)
        centers = np.eye(3) * 8.0
        emb = np.concatenate([rng.normal(size=(150, 3)) + c for c in centers])
        labels = np.repeat(np.arange(3, dtype=np.int64), 150)
        data = LabeledEmbeddings(embeddings=emb, labels=labels)
        model = train_linear_probe(data, ProbeConfig(iterations=1500, batch_size=128, rng_seed=0))
        assert model.weights.shape == (3, 3)
        assert evaluate_accuracy(model, data) >= 0.98


class TestEvaluateAccuracy:
    def test_perfect_model(self):
        emb = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        labels = np.array([0, 1, 0], dtype=np.int64)
        model = ProbeModel(weights=np.eye(2), bias=np.zeros(2))
        assert evaluate_accuracy(model, LabeledEmbeddings(emb, labels)) == 1.0

    def test_random_model_on_balanced_data_is_near_half(self):
        rng = np.random.default_rng(8)
        emb = rng.normal(size=(10_000, 8))
        labels = np.concatenate([np.zeros(5000, np.int64), np.ones(5000, np.int64)])
        model = ProbeModel(weights=rng.normal(size=(2, 8)), bias=rng.normal(size=2))
        accuracy = evaluate_accuracy(model, LabeledEmbeddings(emb, labels))
        assert abs(accuracy - 0.5) < 0.05

    def test_argmax_ties_take_lowest_class(self):
        emb = np.array([[1.0, 1.0]])
        model = ProbeModel(weights=np.array([[0.5, 0.5], [0.5, 0.5]]), bias=np.zeros(2))
        assert evaluate_accuracy(model, LabeledEmbeddings(emb, np.array([0]))) == 1.0
        assert evaluate_accuracy(model, LabeledEmbeddings(emb, np.array([1]))) == 0.0

    def test_dimension_mismatch_rejected(self):
        model = ProbeModel(weights=np.zeros((2, 4)), bias=np.zeros(2))
        data = LabeledEmbeddings(np.zeros((3, 5)), np.zeros(3, np.int64))
        with pytest.raises(ValueError, match="mismatch"):
            evaluate_accuracy(model, data)

    def test_empty_test_set_rejected(self):
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.zeros((0, 4)), np.zeros(0, np.int64))

    def test_accuracy_invariant_under_row_permutation(self):
        rng = np.random.default_rng(9)
        emb = rng.normal(size=(500, 6))
        labels = rng.integers(0, 3, 500).astype(np.int64)
        model = ProbeModel(weights=rng.normal(size=(3, 6)), bias=rng.normal(size=3))
        base = evaluate_accuracy(model, LabeledEmbeddings(emb, labels))
        perm = rng.permutation(500)
        shuffled = evaluate_accuracy(model, LabeledEmbeddings(emb[perm], labels[perm]))
        assert base == shuffled

    def test_predictions_invariant_under_positive_logit_rescaling(self):
        rng = np.random.default_rng(10)
        emb = rng.normal(size=(200, 5))
        labels = rng.integers(0, 4, 200).astype(np.int64)
        model = ProbeModel(weights=rng.normal(size=(4, 5)), bias=rng.normal(size=4))
        scaled = ProbeModel(weights=3.7 * model.weights, bias=3.7 * model.bias)
        data = LabeledEmbeddings(emb, labels)
        assert evaluate_accuracy(model, data) == evaluate_accuracy(scaled, data)

    def test_labeled_embeddings_validation(self):
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.zeros((3, 2)), np.zeros((3, 1), np.int64))
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.zeros((3, 2)), np.array([0.0, 1.0, 0.0]))
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.full((3, 2), np.nan), np.zeros(3, np.int64))
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.zeros((3, 2)), np.array([0, -1, 1]))
