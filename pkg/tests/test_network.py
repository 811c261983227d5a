"""Network-level tests: softmax, loss, stacking, full backward, position scores."""

import numpy as np
import pytest

from nctc.diagnostics import model_gradient_report
from nctc.network import (
    Model,
    ModelConfig,
    backward_model,
    cross_entropy,
    forward_model,
    init_model,
    one_hot,
    parameter_arrays,
    parameter_names,
    per_position_scores,
    predict,
    softmax,
)


def small_model(layers=1, order=2, hidden=4, word_dim=3, labels=("a", "b", "c"), decay=0.5,
                dropout=0.0, seed=0):
    config = ModelConfig(
        order=order,
        hidden=hidden,
        layers=layers,
        decay=decay,
        dropout=dropout,
        label_names=list(labels),
        word_dim=word_dim,
    )
    return init_model(config, np.random.default_rng(seed))


class TestSoftmax:
    def test_zeros_give_uniform(self):
        np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3), atol=1e-15)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal(6)
        np.testing.assert_allclose(softmax(v), softmax(v + 17.3), atol=1e-14)

    def test_log_values(self):
        out = softmax(np.log([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out, [1 / 6, 2 / 6, 3 / 6], atol=1e-14)

    def test_sums_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            v = rng.standard_normal(5) * rng.uniform(0.1, 100)
            assert abs(softmax(v).sum() - 1.0) < 1e-12


class TestCrossEntropy:
    def test_perfect_prediction(self):
        assert cross_entropy([0.0, 1.0, 0.0], [0.0, 1.0, 0.0]) == 0.0

    def test_uniform_is_log_m(self):
        assert cross_entropy(np.full(5, 0.2), one_hot(2, 5)) == pytest.approx(np.log(5), abs=1e-12)

    def test_half_half(self):
        assert cross_entropy([0.5, 0.5], [1.0, 0.0]) == pytest.approx(np.log(2), abs=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = softmax(rng.standard_normal(4))
            y = softmax(rng.standard_normal(4))
            assert cross_entropy(p, y) >= 0.0

    def test_rejects_non_distribution(self):
        with pytest.raises(ValueError):
            cross_entropy([0.5, 0.5], [0.5, 0.6])
        with pytest.raises(ValueError):
            cross_entropy([0.5, 0.5], [1.5, -0.5])


class TestForwardModel:
    def test_zero_classifier_is_uniform(self):
        model = small_model()
        rng = np.random.default_rng(3)
        out = forward_model(model, rng.standard_normal((5, 3)))
        np.testing.assert_allclose(out.probs, np.full(3, 1 / 3), atol=1e-15)

    def test_single_position_mean(self):
        model = small_model(order=2, hidden=4, word_dim=3)
        x = np.random.default_rng(4).standard_normal((1, 3))
        out = forward_model(model, x)
        lp = model.layers[0]
        expected = np.maximum(lp.mix.T @ (lp.slots[0] @ x[0]) + lp.bias, 0.0)
        np.testing.assert_allclose(out.layer_means[0], expected, atol=1e-12)

    def test_eval_mode_deterministic(self):
        model = small_model(dropout=0.5)
        x = np.random.default_rng(5).standard_normal((4, 3))
        a = forward_model(model, x)
        b = forward_model(model, x)
        assert np.array_equal(a.probs, b.probs)

    def test_train_mode_deterministic_given_seed(self):
        model = small_model(dropout=0.5)
        x = np.random.default_rng(6).standard_normal((4, 3))
        a = forward_model(model, x, train=True, rng=np.random.default_rng(9))
        b = forward_model(model, x, train=True, rng=np.random.default_rng(9))
        assert np.array_equal(a.probs, b.probs)

    def test_train_mode_dropout_needs_rng(self):
        model = small_model(dropout=0.5)
        with pytest.raises(ValueError):
            forward_model(model, np.zeros((2, 3)), train=True)

    def test_zero_input_layer1_activations_equal_bias(self):
        model = small_model(layers=2)
        out = forward_model(model, np.zeros((3, 3)))
        assert np.all(out.records[0].active == 0.01)

    def test_activations_nonnegative(self):
        model = small_model(layers=2, seed=8)
        x = np.random.default_rng(7).standard_normal((6, 3))
        out = forward_model(model, x)
        for rec in out.records:
            assert np.all(rec.active >= 0.0)

    def test_dropout_masks_recorded_and_applied(self):
        model = small_model(dropout=0.5, hidden=32)
        x = np.abs(np.random.default_rng(8).standard_normal((4, 3))) + 0.5
        out = forward_model(model, x, train=True, rng=np.random.default_rng(12))
        mask = out.records[0].mask
        assert mask is not None
        dropped = mask == 0.0
        kept = ~dropped
        assert dropped.any() and kept.any()
        assert np.all(mask[kept] == 2.0)  # inverted dropout at p=0.5
        assert np.all(out.records[0].active[:, dropped] == 0.0)


class TestBackwardModel:
    def test_zero_classifier_dw_identity(self):
        # with probs uniform, dW = concat_means (outer) (probs - y)
        model = small_model(seed=10)
        x = np.random.default_rng(11).standard_normal((5, 3))
        out = forward_model(model, x, train=True)
        y = one_hot(1, 3)
        grads = backward_model(model, out, y)
        expected = np.outer(np.concatenate(out.layer_means), out.probs - y)
        np.testing.assert_allclose(grads.softmax_w, expected, atol=1e-14)

    def test_gradient_vanishes_at_fit_point(self):
        model = small_model(seed=12)
        x = np.random.default_rng(13).standard_normal((4, 3))
        out = forward_model(model, x, train=True)
        grads = backward_model(model, out, out.probs.copy())
        for g in grads.arrays():
            np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_requires_records(self):
        model = small_model()
        out = forward_model(model, np.zeros((2, 3)))
        out.records = []
        with pytest.raises(ValueError):
            backward_model(model, out, one_hot(0, 3))

    def test_full_model_finite_differences(self):
        model = small_model(layers=2, order=3, hidden=5, word_dim=4, seed=14)
        rng = np.random.default_rng(15)
        model.softmax_w[...] = rng.uniform(-0.5, 0.5, size=model.softmax_w.shape)
        x = rng.standard_normal((6, 4))
        rows = model_gradient_report(model, x, one_hot(2, 3))
        assert len(rows) == 2 * (3 + 2) + 1
        for name, err in rows:
            assert err < 1e-4, f"{name} exceeded tolerance: {err}"

    def test_dropout_gradients_match_finite_differences(self):
        # fixed mask replayed from the records; compare against FD on the masked loss
        from nctc.diagnostics import central_difference, max_relative_error
        from nctc.network import cross_entropy as ce

        model = small_model(layers=2, order=2, hidden=4, word_dim=3, dropout=0.4, seed=16)
        rng = np.random.default_rng(17)
        model.softmax_w[...] = rng.uniform(-0.5, 0.5, size=model.softmax_w.shape)
        x = rng.standard_normal((5, 3))
        y = one_hot(0, 3)
        out = forward_model(model, x, train=True, rng=np.random.default_rng(21))
        analytic = backward_model(model, out, y).arrays()
        masks = [rec.mask for rec in out.records]

        def masked_loss():
            current = x
            means = []
            for lp, mask in zip(model.layers, masks):
                from nctc.layer import forward as layer_forward

                pre, _ = layer_forward(lp, current, model.config.decay)
                active = np.maximum(pre + lp.bias, 0.0) * mask
                means.append(active.mean(axis=0))
                current = active
            probs = softmax(np.concatenate(means) @ model.softmax_w)
            return ce(probs, y)

        for array, grad in zip(parameter_arrays(model), analytic):
            numeric = central_difference(masked_loss, array)
            assert max_relative_error(grad, numeric) < 1e-4


class TestPerPositionScores:
    def test_zero_classifier_uniform_scores(self):
        model = small_model()
        x = np.random.default_rng(18).standard_normal((4, 3))
        table = per_position_scores(model, x, [-1.0, 0.0, 1.0])
        assert table.shape == (4, 4)
        np.testing.assert_allclose(table[:, :3], 1 / 3, atol=1e-15)
        np.testing.assert_allclose(table[:, 3], 0.0, atol=1e-15)

    def test_expected_score_within_range(self):
        model = small_model(seed=19)
        rng = np.random.default_rng(20)
        model.softmax_w[...] = rng.standard_normal(model.softmax_w.shape)
        scores = np.array([-2.0, 0.0, 2.0])
        table = per_position_scores(model, rng.standard_normal((7, 3)), scores)
        assert np.all(table[:, -1] >= scores.min())
        assert np.all(table[:, -1] <= scores.max())

    def test_single_position_matches_forward_probs(self):
        model = small_model(seed=21)
        rng = np.random.default_rng(22)
        model.softmax_w[...] = rng.standard_normal(model.softmax_w.shape)
        x = rng.standard_normal((1, 3))
        table = per_position_scores(model, x, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(table[0, :3], forward_model(model, x).probs, atol=1e-12)

    def test_rejects_wrong_score_count(self):
        model = small_model()
        with pytest.raises(ValueError):
            per_position_scores(model, np.zeros((2, 3)), [1.0, 2.0])


class TestPredict:
    def test_uniform_ties_break_low(self):
        model = small_model()
        assert predict(model, np.zeros((3, 3))) == 0

    def test_deterministic(self):
        model = small_model(seed=23)
        rng = np.random.default_rng(24)
        model.softmax_w[...] = rng.standard_normal(model.softmax_w.shape)
        x = rng.standard_normal((5, 3))
        assert predict(model, x) == predict(model, x)

    def test_logit_shift_invariance(self):
        model = small_model(seed=25)
        rng = np.random.default_rng(26)
        model.softmax_w[...] = rng.standard_normal(model.softmax_w.shape)
        x = rng.standard_normal((5, 3))
        base = predict(model, x)
        shifted = model.copy()
        shifted.softmax_w += 3.7  # shared shift across labels moves no argmax
        assert predict(shifted, x) == base


class TestModelStructure:
    def test_parameter_inventory(self):
        model = small_model(layers=2, order=3)
        names = parameter_names(model)
        arrays = parameter_arrays(model)
        assert len(names) == len(arrays) == 2 * (3 + 2) + 1
        assert names[-1] == "softmax_w"
        assert names[0] == "layer1.slot1"

    def test_rejects_bad_chain(self):
        model = small_model(layers=2)
        with pytest.raises(ValueError):
            Model(layers=[model.layers[0], model.layers[0]], softmax_w=model.softmax_w,
                  config=model.config)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(order=2, hidden=4, layers=1, decay=1.0, dropout=0.0,
                        label_names=["a"], word_dim=3)
        with pytest.raises(ValueError):
            ModelConfig(order=2, hidden=4, layers=1, decay=0.5, dropout=0.0,
                        label_names=[], word_dim=3)
        with pytest.raises(ValueError):
            ModelConfig(order=2, hidden=4, layers=1, decay=0.5, dropout=0.0,
                        label_names=["a", "a"], word_dim=3)
