"""Accuracy metrics, the classical recurrent baseline and result exports."""

import csv

import numpy as np
import pytest

from qrnn.data import ScalingParams, WindowedDataset
from qrnn.evaluation import (
    BaselineRNNConfig,
    baseline_batch_loss,
    baseline_predictions,
    baseline_rnn_forward,
    classification_accuracy,
    export_predictions,
    fit_baseline,
    init_baseline_weights,
    prediction_accuracy,
    render_line_chart,
)
from qrnn.training import TrainConfig


class TestPredictionAccuracy:
    def test_hand_value(self):
        """Relative errors of 10% each give 1 - 0.1 = 90%."""
        acc = prediction_accuracy(np.array([1.0, 2.0]), np.array([1.1, 1.8]))
        np.testing.assert_allclose(acc, 90.0)

    def test_perfect_fit_scores_100(self):
        a = np.array([3.0, 4.0, 5.0])
        np.testing.assert_allclose(prediction_accuracy(a, a), 100.0)

    def test_errors_average_in_quadrature(self):
        acc = prediction_accuracy(np.array([1.0, 1.0]), np.array([1.3, 1.0]))
        np.testing.assert_allclose(acc, 100.0 * (1.0 - 0.3 / np.sqrt(2)))

    def test_near_zero_actual_rejected_with_index(self):
        with pytest.raises(ValueError, match="index 1"):
            prediction_accuracy(np.array([1.0, 1e-12]), np.array([1.0, 0.0]))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            prediction_accuracy(np.zeros(2), np.zeros(3))
        with pytest.raises(ValueError):
            prediction_accuracy(np.array([]), np.array([]))


class TestClassificationAccuracy:
    def test_threshold_at_half(self):
        probs = np.array([0.9, 0.2, 0.51, 0.49])
        labels = np.array([1, 0, 1, 0])
        assert classification_accuracy(probs, labels) == 100.0

    def test_ties_count_as_class_zero(self):
        assert classification_accuracy(np.array([0.5]), np.array([0])) == 100.0
        assert classification_accuracy(np.array([0.5]), np.array([1])) == 0.0

    def test_partial_credit(self):
        probs = np.array([0.9, 0.9, 0.1, 0.1])
        labels = np.array([1, 0, 0, 1])
        assert classification_accuracy(probs, labels) == 50.0

    def test_label_validation(self):
        with pytest.raises(ValueError):
            classification_accuracy(np.array([0.5]), np.array([2]))


class TestBaselineRNN:
    def test_parameter_budget_is_49(self):
        """6 input weights + 36 recurrent + 6 output + 1 bias."""
        assert BaselineRNNConfig().n_params == 49
        assert BaselineRNNConfig(hidden_size=4).n_params == 4 + 16 + 4 + 1

    def test_zero_weights_output_bias_only(self):
        config = BaselineRNNConfig()
        w = np.zeros(49)
        w[-1] = 0.7
        assert baseline_rnn_forward(config, np.array([0.3, 0.9]), w) == 0.7

    def test_single_step_tanh_identity(self):
        """With v = 1, W = 0, u = e_0 and b = 0 a one-step window x gives
        tanh(x); tanh(0.5) ~ 0.4621."""
        config = BaselineRNNConfig(hidden_size=1)
        w = np.zeros(config.n_params)
        w[0] = 1.0   # input weight
        w[2] = 1.0   # output weight (layout: v, W, u, b)
        out = baseline_rnn_forward(config, np.array([0.5]), w)
        np.testing.assert_allclose(out, np.tanh(0.5), atol=1e-12)
        np.testing.assert_allclose(out, 0.46211715726000974)

    def test_two_step_recurrence_hand_rollout(self):
        config = BaselineRNNConfig(hidden_size=2)
        rng = np.random.default_rng(0)
        w = rng.uniform(-0.5, 0.5, config.n_params)
        v, rec, u, b = w[:2], w[2:6].reshape(2, 2), w[6:8], w[8]
        x = np.array([0.2, 0.8])
        h = np.zeros(2)
        for t in range(2):
            h = np.tanh(v * x[t] + rec @ h)
        np.testing.assert_allclose(
            baseline_rnn_forward(config, x, w), float(u @ h + b), atol=1e-12
        )

    def test_init_is_seeded_uniform(self):
        config = BaselineRNNConfig()
        a = init_baseline_weights(config, seed=4)
        b = init_baseline_weights(config, seed=4)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (49,)
        assert np.all(np.abs(a) <= 0.5)

    def test_batch_predictions_match_per_window_forward(self):
        config = BaselineRNNConfig()
        rng = np.random.default_rng(5)
        w = init_baseline_weights(config, seed=5)
        ds = WindowedDataset(
            inputs=rng.uniform(0, np.pi, (6, 4)),
            targets=rng.uniform(1.0, 2.0, 6),
            scaling=ScalingParams(1.0, 2.0),
            window=4,
        )
        got = baseline_predictions(config, w, ds)
        span = 1.0
        for i in range(6):
            raw = baseline_rnn_forward(config, ds.inputs[i] / np.pi, w)
            np.testing.assert_allclose(got[i], raw * span + 1.0, atol=1e-12)

    def test_training_reduces_loss(self):
        rng = np.random.default_rng(6)
        values = 10 + np.sin(np.arange(30) / 4.0) + 0.05 * rng.standard_normal(30)
        angles = np.pi * (values - values.min()) / (values.max() - values.min())
        idx = np.arange(3)[None, :] + np.arange(27)[:, None]
        ds = WindowedDataset(
            inputs=angles[idx],
            targets=values[3:],
            scaling=ScalingParams(float(values.min()), float(values.max())),
            window=3,
        )
        hist = fit_baseline(BaselineRNNConfig(), ds, TrainConfig(epochs=8, learning_rate=0.05, seed=0))
        assert baseline_batch_loss(BaselineRNNConfig(), hist.params, ds) < hist.losses[0]


class TestExports:
    def test_csv_round_trip_is_bitwise(self, tmp_path):
        rng = np.random.default_rng(7)
        actual = rng.standard_normal(20) * 7.3
        predicted = actual + rng.standard_normal(20) * 0.1
        csv_path, svg_path = export_predictions(actual, predicted, tmp_path / "out")
        assert csv_path.name == "out.csv"
        assert svg_path.name == "out.svg"
        with open(csv_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 20
        back_a = np.array([float(r["actual"]) for r in rows])
        back_p = np.array([float(r["predicted"]) for r in rows])
        np.testing.assert_array_equal(back_a, actual)
        np.testing.assert_array_equal(back_p, predicted)

    def test_explicit_suffix_is_replaced(self, tmp_path):
        a = np.array([1.0, 2.0])
        csv_path, svg_path = export_predictions(a, a, tmp_path / "plot.svg")
        assert csv_path.exists()
        assert svg_path.exists()

    def test_input_validation(self, tmp_path):
        with pytest.raises(ValueError):
            export_predictions(np.zeros(2), np.zeros(3), tmp_path / "x")
        with pytest.raises(ValueError):
            export_predictions(np.array([]), np.array([]), tmp_path / "x")

    def test_chart_has_two_polylines_axes_and_legend(self):
        svg = render_line_chart(np.array([1.0, 2.0, 3.0]), np.array([1.1, 1.9, 3.2]))
        assert svg.count("<polyline") == 2
        assert svg.count("<line") == 2
        assert "actual" in svg and "predicted" in svg
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_chart_handles_constant_series(self):
        svg = render_line_chart(np.array([2.0, 2.0]), np.array([2.0, 2.0]))
        assert svg.count("<polyline") == 2

    def test_chart_coordinates_stay_inside_canvas(self):
        rng = np.random.default_rng(8)
        svg = render_line_chart(rng.uniform(-5, 5, 50), rng.uniform(-5, 5, 50),
                                width=300, height=200)
        for line in svg.splitlines():
            if line.startswith("<polyline"):
                pts = line.split('points="')[1].split('"')[0].split()
                coords = np.array([[float(c) for c in p.split(",")] for p in pts])
                assert np.all(coords[:, 0] >= 0) and np.all(coords[:, 0] <= 300)
                assert np.all(coords[:, 1] >= 0) and np.all(coords[:, 1] <= 200)
