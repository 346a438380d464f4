"""Metrics, the classical recurrent baseline, and prediction exports.

The regression score is a relative-error accuracy:
``(1 - sqrt(mean(((actual - predicted) / actual)^2))) * 100``. It is
undefined for near-zero actuals, which are rejected rather than silently
clamped. Classification accuracy thresholds the readout probability at 0.5
(ties count as class 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SentenceDataset, WindowedDataset
from .model import rescale_prediction
from .training import TrainConfig, TrainingHistory, finite_difference_gradient, fit_loop, l2_loss

ZERO_ACTUAL_ATOL = 1e-9


def prediction_accuracy(actuals: np.ndarray, predicted: np.ndarray) -> float:
    """Relative-RMS accuracy in percent; 100 for a perfect fit."""
    actuals = np.asarray(actuals, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actuals.shape != predicted.shape or actuals.ndim != 1:
        raise ValueError("actuals and predicted must be equal-length vectors")
    if actuals.size == 0:
        raise ValueError("cannot score an empty batch")
    near_zero = np.abs(actuals) < ZERO_ACTUAL_ATOL
    if np.any(near_zero):
        raise ValueError(
            f"actual value at index {int(np.argmax(near_zero))} is within "
            f"{ZERO_ACTUAL_ATOL} of zero; relative error is undefined"
        )
    rel = (actuals - predicted) / actuals
    return float((1.0 - np.sqrt(np.mean(rel**2))) * 100.0)


def classification_accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Percent of correct labels with predicted class = (p > 0.5)."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.shape != labels.shape or probs.ndim != 1:
        raise ValueError("probs and labels must be equal-length vectors")
    if probs.size == 0:
        raise ValueError("cannot score an empty batch")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    predicted = (probs > 0.5).astype(labels.dtype)
    return float(np.mean(predicted == labels) * 100.0)


# -- classical recurrent baseline ----------------------------------------------


@dataclass(frozen=True)
class BaselineRNNConfig:
    """Single-layer recurrent net: h_t = tanh(v x_t + W h_{t-1}), y = u . h_T + b."""

    hidden_size: int = 6
    output_bias: bool = True

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")

    @property
    def n_params(self) -> int:
        h = self.hidden_size
        return h + h * h + h + (1 if self.output_bias else 0)


def _unpack(config: BaselineRNNConfig, weights: np.ndarray):
    h = config.hidden_size
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (config.n_params,):
        raise ValueError(f"expected {config.n_params} weights, got shape {weights.shape}")
    v_in = weights[:h]
    w_rec = weights[h : h + h * h].reshape(h, h)
    u_out = weights[h + h * h : h + h * h + h]
    bias = weights[-1] if config.output_bias else 0.0
    return v_in, w_rec, u_out, bias


def baseline_rnn_forward(config: BaselineRNNConfig, window: np.ndarray, weights: np.ndarray) -> float:
    """Scalar output after consuming a window of normalized inputs (h_0 = 0)."""
    v_in, w_rec, u_out, bias = _unpack(config, weights)
    hidden = np.zeros(config.hidden_size)
    for x in np.asarray(window, dtype=np.float64).reshape(-1):
        hidden = np.tanh(v_in * x + w_rec @ hidden)
    return float(u_out @ hidden + bias)


def init_baseline_weights(config: BaselineRNNConfig, seed: int) -> np.ndarray:
    """Seeded uniform [-0.5, 0.5] init."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, size=config.n_params)


def _batch_outputs(config: BaselineRNNConfig, windows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """baseline_rnn_forward over equal-length rows, vectorized across the batch."""
    v_in, w_rec, u_out, bias = _unpack(config, weights)
    hidden = np.zeros((windows.shape[0], config.hidden_size))
    for t in range(windows.shape[1]):
        hidden = np.tanh(windows[:, t, None] * v_in + hidden @ w_rec.T)
    return hidden @ u_out + bias


def baseline_predictions(
    config: BaselineRNNConfig, weights: np.ndarray, dataset: WindowedDataset | SentenceDataset
) -> np.ndarray:
    """Predictions in data units over a dataset.

    The dataset stores encoder angles in [0, pi]; the baseline consumes the
    same information as x = angle / pi in [0, 1] and its output goes through
    the same rescale map as the quantum readout, so the two model families
    are compared on identical footing.
    """
    windows = dataset.windows()
    outputs = np.empty(len(windows))
    by_length: dict[int, list[int]] = {}
    for i, w in enumerate(windows):
        by_length.setdefault(len(w), []).append(i)
    for _, idx in by_length.items():
        batch = np.stack([np.asarray(windows[i], dtype=np.float64) / np.pi for i in idx])
        outputs[np.asarray(idx)] = _batch_outputs(config, batch, weights)
    return rescale_prediction(outputs, dataset.scaling)


def baseline_batch_loss(
    config: BaselineRNNConfig, weights: np.ndarray, dataset: WindowedDataset | SentenceDataset
) -> float:
    return l2_loss(baseline_predictions(config, weights, dataset), dataset.targets)


def fit_baseline(
    config: BaselineRNNConfig,
    dataset: WindowedDataset | SentenceDataset,
    train_config: TrainConfig,
    initial_weights: np.ndarray | None = None,
) -> TrainingHistory:
    """Train the baseline with the same loop, loss and FD gradients as the
    quantum model (sampled mode does not apply to a classical net)."""
    if initial_weights is None:
        initial_weights = init_baseline_weights(config, train_config.seed)

    def loss_fn(weights, _epoch):
        return baseline_batch_loss(config, weights, dataset)

    def grad_fn(weights, _epoch):
        return finite_difference_gradient(
            lambda w: baseline_batch_loss(config, w, dataset),
            weights,
            train_config.fd_delta,
            workers=train_config.workers,
        )

    return fit_loop(loss_fn, grad_fn, initial_weights, train_config)


# -- exports -------------------------------------------------------------------


def _svg_polyline(xs, ys, color: str) -> str:
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}" />'


def render_line_chart(
    actuals: np.ndarray,
    predicted: np.ndarray,
    title: str = "actual vs predicted",
    width: int = 720,
    height: int = 420,
) -> str:
    """Static SVG with exactly two polylines (actual, predicted) and a legend."""
    actuals = np.asarray(actuals, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    margin = 48.0
    lo = min(actuals.min(), predicted.min())
    hi = max(actuals.max(), predicted.max())
    if hi <= lo:
        hi = lo + 1.0
    n = len(actuals)
    xs = margin + (width - 2 * margin) * (np.arange(n) / max(n - 1, 1))

    def to_y(vals):
        return height - margin - (height - 2 * margin) * (vals - lo) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white" />',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black" stroke-width="1" />',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black" stroke-width="1" />',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{margin:.0f}" y="{margin - 8:.0f}" font-size="11">{hi:.4g}</text>',
        f'<text x="{margin:.0f}" y="{height - margin + 16:.0f}" font-size="11">{lo:.4g}</text>',
        _svg_polyline(xs, to_y(actuals), "#1f6fb2"),
        _svg_polyline(xs, to_y(predicted), "#d1495b"),
        f'<rect x="{width - margin - 150:.0f}" y="{margin:.0f}" width="12" height="12" fill="#1f6fb2" />',
        f'<text x="{width - margin - 132:.0f}" y="{margin + 11:.0f}" font-size="12">actual</text>',
        f'<rect x="{width - margin - 150:.0f}" y="{margin + 20:.0f}" width="12" height="12" fill="#d1495b" />',
        f'<text x="{width - margin - 132:.0f}" y="{margin + 31:.0f}" font-size="12">predicted</text>',
        "</svg>",
    ]
    return "\n".join(parts)


def export_predictions(actuals: np.ndarray, predicted: np.ndarray, path: str | Path) -> tuple[Path, Path]:
    """Write <stem>.csv (index, actual, predicted; full decimal precision so the
    round trip is bitwise) and <stem>.svg next to it. Returns both paths."""
    actuals = np.asarray(actuals, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actuals.shape != predicted.shape or actuals.ndim != 1 or actuals.size == 0:
        raise ValueError("need equal-length non-empty vectors")
    base = Path(path)
    if base.suffix:
        base = base.with_suffix("")
    csv_path = base.with_suffix(".csv")
    svg_path = base.with_suffix(".svg")
    lines = ["index,actual,predicted"]
    lines += [f"{i},{repr(float(a))},{repr(float(p))}" for i, (a, p) in enumerate(zip(actuals, predicted))]
    csv_path.write_text("\n".join(lines) + "\n")
    svg_path.write_text(render_line_chart(actuals, predicted) + "\n")
    return csv_path, svg_path
