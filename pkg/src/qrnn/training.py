"""Losses, gradients and optimizers for the recurrent quantum models.

Gradient routes:

* central finite differences - model-agnostic, exactly 2 * |params|
  batch-loss evaluations per gradient;
* parameter shift - exact analytic derivatives. Parameters are shared across
  time steps, so d p / d theta_j is the sum over step occurrences of shifted
  readout evaluations; the loss derivative w.r.t. each readout probability is
  applied as a classical chain-rule weight. Shift constants depend on the
  gate family: half-angle rotations (Rx, Ry, Rz) use (pi/2, 1/2); the ZZ
  coupler's generator has eigenvalue gap 2, so it uses (pi/4, 1).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .circuits import GateKind, build_ansatz, param_count
from .data import ScalingParams, SentenceDataset, WindowedDataset
from .density import sample_mean
from .model import ModelConfig, forward_batch, rescale_prediction

_SHIFT_RULES = {
    GateKind.RX: (np.pi / 2, 0.5),
    GateKind.RY: (np.pi / 2, 0.5),
    GateKind.RZ: (np.pi / 2, 0.5),
    GateKind.RZZ: (np.pi / 4, 1.0),
}


@dataclass(frozen=True)
class TrainConfig:
    """Full-batch training settings.

    `grad_method` defaults to finite differences analytically and to the
    parameter-shift rule when shots are enabled (FD differences drown in
    shot noise).
    """

    epochs: int
    learning_rate: float = 0.03
    optimizer: str = "gd"
    grad_method: str | None = None
    fd_delta: float = 1e-4
    seed: int = 0
    shots: int | None = None
    workers: int = 1
    small_init: bool = False
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("gd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.grad_method is None:
            resolved = "parameter_shift" if self.shots else "finite_difference"
            object.__setattr__(self, "grad_method", resolved)
        if self.grad_method not in ("finite_difference", "parameter_shift"):
            raise ValueError(f"unknown grad_method {self.grad_method!r}")
        if self.fd_delta <= 0:
            raise ValueError("fd_delta must be positive")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 when set")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def init_params(spec, seed: int, small: bool = False) -> np.ndarray:
    """Seeded init: uniform [0, 2 pi) by default, [-0.1, 0.1] when `small`."""
    rng = np.random.default_rng(seed)
    n = param_count(spec)
    if small:
        return rng.uniform(-0.1, 0.1, size=n)
    return rng.uniform(0.0, 2.0 * np.pi, size=n)


def l2_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error (1/N) sum (y_hat - y)^2."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError("predictions and targets must align")
    if predictions.size == 0:
        raise ValueError("cannot average an empty batch")
    return float(np.mean((predictions - targets) ** 2))


def _derived_seed(*components: int) -> int:
    """Stable per-evaluation seed, independent of execution order."""
    return int(np.random.SeedSequence([int(c) & 0xFFFFFFFF for c in components]).generate_state(1)[0])


def _length_groups(windows: list[np.ndarray]) -> dict[int, np.ndarray]:
    groups: dict[int, list[int]] = {}
    for i, w in enumerate(windows):
        groups.setdefault(len(w), []).append(i)
    return {length: np.asarray(idx) for length, idx in groups.items()}


def predict_probs(
    config: ModelConfig,
    params: np.ndarray,
    dataset: WindowedDataset | SentenceDataset,
    shift: tuple[int, int, float] | None = None,
    shots: int | None = None,
    seed_components: tuple[int, ...] = (),
) -> np.ndarray:
    """Final-step readout probability per sample.

    Equal-length windows run as one batched forward; mixed lengths (text
    corpora) are grouped by length. With `shots`, each sample's readout is
    sampled with a generator derived from (seed components, sample index),
    so results do not depend on evaluation schedule. A `shift` applies to
    the given step occurrence in every window long enough to reach it.
    """
    windows = dataset.windows()
    out = np.empty(len(windows), dtype=np.float64)
    for length, idx in _length_groups(windows).items():
        if shift is not None and shift[1] >= length:
            group_shift = None  # occurrence does not exist in shorter windows
        else:
            group_shift = shift
        batch = np.stack([windows[i] for i in idx])
        out[idx] = forward_batch(config, batch, params, shift=group_shift)[:, -1]
    if shots is not None:
        out = np.array(
            [sample_mean(p, shots, _derived_seed(*seed_components, i)) for i, p in enumerate(out)]
        )
    return out


def predictions(
    config: ModelConfig,
    params: np.ndarray,
    dataset: WindowedDataset | SentenceDataset,
    shots: int | None = None,
    seed_components: tuple[int, ...] = (),
) -> np.ndarray:
    """Model outputs in data units: readout probability through the rescale map."""
    probs = predict_probs(config, params, dataset, shots=shots, seed_components=seed_components)
    return rescale_prediction(probs, dataset.scaling)


def batch_loss(
    config: ModelConfig,
    params: np.ndarray,
    dataset: WindowedDataset | SentenceDataset,
    shots: int | None = None,
    seed_components: tuple[int, ...] = (),
) -> float:
    """L2 loss of rescaled predictions against raw targets over a dataset."""
    preds = predictions(config, params, dataset, shots=shots, seed_components=seed_components)
    return l2_loss(preds, dataset.targets)


def finite_difference_gradient(fn, params: np.ndarray, delta: float, workers: int = 1) -> np.ndarray:
    """Central differences (f(x+d e_j) - f(x-d e_j)) / 2d, one pair per component.

    Exactly 2 * len(params) evaluations of `fn`.
    """
    params = np.asarray(params, dtype=np.float64)
    points = []
    for j in range(len(params)):
        for sign in (+1.0, -1.0):
            shifted = params.copy()
            shifted[j] += sign * delta
            points.append(shifted)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(fn, points))
    else:
        values = [fn(p) for p in points]
    values = np.asarray(values, dtype=np.float64)
    return (values[0::2] - values[1::2]) / (2.0 * delta)


def grad_finite_difference(
    config: ModelConfig,
    params: np.ndarray,
    dataset: WindowedDataset | SentenceDataset,
    delta: float = 1e-4,
    shots: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """FD gradient of the batch loss. In sampled mode each probe point keeps
    its own derived seed so the noise is frozen per evaluation."""
    counter = iter(range(10**9))

    def fn(p):
        tag = next(counter)
        comps = (seed, 1, tag) if shots is not None else ()
        return batch_loss(config, p, dataset, shots=shots, seed_components=comps)

    return finite_difference_gradient(fn, params, delta, workers=workers)


def _slot_kinds(config: ModelConfig) -> list[GateKind]:
    """Gate family per parameter slot, with the structural rotation check."""
    probe = build_ansatz(config.ansatz, np.zeros(param_count(config.ansatz)))
    kinds: dict[int, GateKind] = {}
    for gate in probe.gates:
        if gate.param_slot is None:
            continue
        if gate.kind not in _SHIFT_RULES:
            raise ValueError(f"gate {gate.kind.value} has no parameter-shift rule")
        kinds[gate.param_slot] = gate.kind
    return [kinds[j] for j in range(len(kinds))]


def grad_parameter_shift(
    config: ModelConfig,
    params: np.ndarray,
    dataset: WindowedDataset | SentenceDataset,
    shots: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Exact gradient via shifted readout evaluations plus the classical chain rule.

    For parameter j occurring at every time step t, with shift s and weight c
    of its gate family:  dp/dtheta_j = sum_t c * (p(+s at t) - p(-s at t)),
    and dL/dtheta_j = sum_i (2/N) (yhat_i - y_i) (x_max - x_min) dp_i/dtheta_j.
    Costs 2 * |params| * window_length readout passes over the batch.
    """
    params = np.asarray(params, dtype=np.float64)
    scaling: ScalingParams = dataset.scaling
    base_comps = (seed, 2) if shots is not None else ()
    base_probs = predict_probs(config, params, dataset, shots=shots, seed_components=base_comps)
    preds = rescale_prediction(base_probs, scaling)
    span = scaling.x_max - scaling.x_min
    weights = 2.0 / len(dataset.targets) * (preds - dataset.targets) * span

    max_steps = max(len(w) for w in dataset.windows())
    kinds = _slot_kinds(config)

    def occurrence_term(job):
        j, t = job
        shift_size, coeff = _SHIFT_RULES[kinds[j]]
        comps_p = (seed, 3, j, t, 0) if shots is not None else ()
        comps_m = (seed, 3, j, t, 1) if shots is not None else ()
        p_plus = predict_probs(config, params, dataset, shift=(j, t, +shift_size), shots=shots, seed_components=comps_p)
        p_minus = predict_probs(config, params, dataset, shift=(j, t, -shift_size), shots=shots, seed_components=comps_m)
        return j, coeff * (p_plus - p_minus)

    jobs = [(j, t) for j in range(len(params)) for t in range(max_steps)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(occurrence_term, jobs))
    else:
        terms = [occurrence_term(job) for job in jobs]

    grad = np.zeros(len(params), dtype=np.float64)
    for j, dp in terms:
        grad[j] += float(np.dot(weights, dp))
    return grad


# -- optimizers ----------------------------------------------------------------


def sgd_update(params: np.ndarray, grads: np.ndarray, learning_rate: float) -> np.ndarray:
    """Plain gradient descent step."""
    return np.asarray(params) - learning_rate * np.asarray(grads)


@dataclass(frozen=True)
class OptimizerState:
    """Adam moment estimates and step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n_params: int) -> OptimizerState:
    return OptimizerState(m=np.zeros(n_params), v=np.zeros(n_params))


def adam_update(
    state: OptimizerState, params: np.ndarray, grads: np.ndarray, learning_rate: float
) -> tuple[OptimizerState, np.ndarray]:
    """One bias-corrected Adam step; returns (new state, new params)."""
    grads = np.asarray(grads, dtype=np.float64)
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_params = np.asarray(params) - learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, step=step), new_params


# -- training loop -------------------------------------------------------------


@dataclass
class TrainingHistory:
    """Per-epoch loss curve (at pre-update parameters) and the final parameters."""

    losses: list[float]
    params: np.ndarray
    epoch_seconds: list[float] = field(default_factory=list)


def fit_loop(
    loss_fn,
    grad_fn,
    params: np.ndarray,
    train_config: TrainConfig,
    checkpoint_payload=None,
) -> TrainingHistory:
    """Generic full-batch loop: loss -> gradient -> optimizer update, per epoch.

    `checkpoint_payload(params, state, epoch)` returning a JSON-able dict is
    called per epoch when a checkpoint path is configured.
    """
    params = np.array(params, dtype=np.float64, copy=True)
    state = adam_init(len(params)) if train_config.optimizer == "adam" else None
    history = TrainingHistory(losses=[], params=params)
    for epoch in range(train_config.epochs):
        started = time.perf_counter()
        history.losses.append(float(loss_fn(params, epoch)))
        grads = grad_fn(params, epoch)
        if train_config.optimizer == "adam":
            state, params = adam_update(state, params, grads, train_config.learning_rate)
        else:
            params = sgd_update(params, grads, train_config.learning_rate)
        history.epoch_seconds.append(time.perf_counter() - started)
        if train_config.checkpoint_path and checkpoint_payload is not None:
            payload = checkpoint_payload(params, state, epoch)
            Path(train_config.checkpoint_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    history.params = params
    return history


def _optimizer_dict(state: OptimizerState | None):
    if state is None:
        return None
    return {
        "m": state.m.tolist(),
        "v": state.v.tolist(),
        "step": state.step,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
    }


def model_descriptor(config: ModelConfig) -> dict:
    """JSON-able summary of a model's shape (for checkpoints and metrics)."""
    return {
        "data_qubits": config.data_qubits,
        "history_qubits": config.history_qubits,
        "kind": config.kind,
        "entangler": config.ansatz.entangler.layout,
        "entangler_rounds": config.ansatz.entangler.rounds,
        "single_qubit_layers": config.ansatz.single_qubit_layers,
        "n_params": param_count(config.ansatz),
    }


def fit(
    config: ModelConfig,
    dataset: WindowedDataset | SentenceDataset,
    train_config: TrainConfig,
    initial_params: np.ndarray | None = None,
) -> TrainingHistory:
    """Train the quantum model on a dataset; deterministic for a fixed seed."""
    if initial_params is None:
        initial_params = init_params(config.ansatz, train_config.seed, small=train_config.small_init)

    def loss_fn(params, epoch):
        comps = (train_config.seed, 0, epoch) if train_config.shots is not None else ()
        return batch_loss(config, params, dataset, shots=train_config.shots, seed_components=comps)

    if train_config.grad_method == "finite_difference":
        def grad_fn(params, epoch):
            return grad_finite_difference(
                config, params, dataset,
                delta=train_config.fd_delta, shots=train_config.shots,
                seed=_derived_seed(train_config.seed, 4, epoch) if train_config.shots is not None else 0,
                workers=train_config.workers,
            )
    else:
        def grad_fn(params, epoch):
            return grad_parameter_shift(
                config, params, dataset,
                shots=train_config.shots,
                seed=_derived_seed(train_config.seed, 4, epoch) if train_config.shots is not None else 0,
                workers=train_config.workers,
            )

    def checkpoint_payload(params, state, epoch):
        return {
            "model": model_descriptor(config),
            "params": params.tolist(),
            "optimizer": _optimizer_dict(state),
            "epoch": epoch,
            "seed": train_config.seed,
        }

    return fit_loop(loss_fn, grad_fn, initial_params, train_config, checkpoint_payload)
