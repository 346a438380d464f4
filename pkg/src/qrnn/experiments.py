"""Config-driven experiment runner behind the command line.

A run is described by one JSON document with sections ``model``, ``data``,
``train`` and ``output``. Validation is strict: unknown keys are rejected
with their full field path, values are type- and range-checked before any
work starts.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import training
from .circuits import AnsatzSpec, EntanglerConfig, build_ansatz, format_circuit, param_count
from .data import (
    MC_TRAIN_SIZE,
    RawSeries,
    build_sentence_dataset,
    load_mc_json,
    load_series_csv,
    prepare_split_windows,
    split_sentences,
    synth_mc_corpus,
    synth_series,
    write_mc_json,
    write_series_csv,
)
from .evaluation import classification_accuracy, export_predictions, prediction_accuracy
from .model import DEFAULT_QUBIT_CAP, ModelConfig, rescale_prediction


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


# -- validation helpers ---------------------------------------------------------


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(section: dict, allowed: set[str], path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _get(section: dict, key: str, path: str, kind, default=None, required: bool = False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected int, got bool")
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _positive(value, path: str):
    if value is not None and value <= 0:
        raise ConfigError(f"{path}: must be positive")
    return value


# -- typed config ---------------------------------------------------------------


@dataclass(frozen=True)
class DataConfig:
    source: str
    kind: str = "sine_noise"
    length: int = 500
    seed: int = 7
    noise_amplitude: float = 0.1
    period: float = 40.0
    amplitude: float = 1.0
    offset: float = 10.0
    slope: float = 0.01
    path: str | None = None
    column: str | None = None
    window: int = 7
    n_train: int = 300


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig | None
    data: DataConfig | None
    train: training.TrainConfig | None
    out_dir: Path

    @property
    def task(self) -> str:
        return "classification" if self.data.source in ("mc_synth", "mc_json") else "regression"


def _parse_model(section: dict, path: str = "model") -> ModelConfig:
    section = _require_mapping(section, path)
    allowed = {
        "data_qubits", "history_qubits", "kind", "entangler", "entangler_rounds",
        "single_qubit_layers", "max_qubits",
    }
    _reject_unknown(section, allowed, path)
    d = _positive(_get(section, "data_qubits", path, int, required=True), f"{path}.data_qubits")
    h = _positive(_get(section, "history_qubits", path, int, required=True), f"{path}.history_qubits")
    kind = _get(section, "kind", path, str, default="plain")
    layout = _get(section, "entangler", path, str, default="CB")
    rounds = _positive(_get(section, "entangler_rounds", path, int, default=2), f"{path}.entangler_rounds")
    layers = _positive(_get(section, "single_qubit_layers", path, int, default=1), f"{path}.single_qubit_layers")
    cap = _positive(_get(section, "max_qubits", path, int, default=DEFAULT_QUBIT_CAP), f"{path}.max_qubits")
    try:
        ansatz = AnsatzSpec(d + h, EntanglerConfig(layout, rounds), single_qubit_layers=layers)
        return ModelConfig(d, h, kind, ansatz, max_qubits=cap)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_data(section: dict, path: str = "data") -> DataConfig:
    section = _require_mapping(section, path)
    allowed = {
        "source", "kind", "length", "seed", "noise_amplitude", "period", "amplitude",
        "offset", "slope", "path", "column", "window", "n_train",
    }
    _reject_unknown(section, allowed, path)
    source = _get(section, "source", path, str, required=True)
    if source not in ("synth", "csv", "mc_synth", "mc_json"):
        raise ConfigError(f"{path}.source: unknown source {source!r}")
    cfg = DataConfig(
        source=source,
        kind=_get(section, "kind", path, str, default="sine_noise"),
        length=_positive(_get(section, "length", path, int, default=500), f"{path}.length"),
        seed=_get(section, "seed", path, int, default=7),
        noise_amplitude=_get(section, "noise_amplitude", path, float, default=0.1),
        period=_positive(_get(section, "period", path, float, default=40.0), f"{path}.period"),
        amplitude=_get(section, "amplitude", path, float, default=1.0),
        offset=_get(section, "offset", path, float, default=10.0),
        slope=_get(section, "slope", path, float, default=0.01),
        path=_get(section, "path", path, str),
        column=_get(section, "column", path, str),
        window=_positive(_get(section, "window", path, int, default=7), f"{path}.window"),
        n_train=_positive(
            _get(section, "n_train", path, int, default=MC_TRAIN_SIZE if source.startswith("mc") else 300),
            f"{path}.n_train",
        ),
    )
    if source == "csv" and (cfg.path is None or cfg.column is None):
        raise ConfigError(f"{path}: csv source needs both path and column")
    if source == "mc_json" and cfg.path is None:
        raise ConfigError(f"{path}.path: required for mc_json source")
    return cfg


def _parse_train(section: dict, path: str = "train") -> training.TrainConfig:
    section = _require_mapping(section, path)
    allowed = {
        "epochs", "learning_rate", "optimizer", "grad_method", "fd_delta", "seed",
        "shots", "workers", "small_init",
    }
    _reject_unknown(section, allowed, path)
    try:
        return training.TrainConfig(
            epochs=_get(section, "epochs", path, int, required=True),
            learning_rate=_get(section, "learning_rate", path, float, default=0.03),
            optimizer=_get(section, "optimizer", path, str, default="gd"),
            grad_method=_get(section, "grad_method", path, str),
            fd_delta=_get(section, "fd_delta", path, float, default=1e-4),
            seed=_get(section, "seed", path, int, default=0),
            shots=_get(section, "shots", path, int),
            workers=_get(section, "workers", path, int, default=1),
            small_init=_get(section, "small_init", path, bool, default=False),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_config(
    raw: dict,
    need: tuple[str, ...] = ("model", "data", "train"),
    seed_override: int | None = None,
    workers_override: int | None = None,
    out_override: str | None = None,
) -> ExperimentConfig:
    """Validate a raw JSON document into typed configs.

    `need` lists the sections the command requires; sections that are
    present are validated either way.
    """
    raw = _require_mapping(raw, "config")
    _reject_unknown(raw, {"model", "data", "train", "output"}, "config")
    for name in need:
        if name not in raw:
            raise ConfigError(f"config.{name}: required for this command")

    model = _parse_model(raw["model"]) if "model" in raw else None
    data = _parse_data(raw["data"]) if "data" in raw else None
    train = _parse_train(raw["train"]) if "train" in raw else None

    out_dir = "out"
    if "output" in raw:
        section = _require_mapping(raw["output"], "output")
        _reject_unknown(section, {"dir"}, "output")
        out_dir = _get(section, "dir", "output", str, default="out")
    if out_override is not None:
        out_dir = out_override

    if train is not None and seed_override is not None:
        train = training.TrainConfig(
            epochs=train.epochs, learning_rate=train.learning_rate, optimizer=train.optimizer,
            grad_method=train.grad_method, fd_delta=train.fd_delta, seed=seed_override,
            shots=train.shots, workers=train.workers, small_init=train.small_init,
        )
    if train is not None and workers_override is not None:
        train = training.TrainConfig(
            epochs=train.epochs, learning_rate=train.learning_rate, optimizer=train.optimizer,
            grad_method=train.grad_method, fd_delta=train.fd_delta, seed=train.seed,
            shots=train.shots, workers=workers_override, small_init=train.small_init,
        )
    return ExperimentConfig(model=model, data=data, train=train, out_dir=Path(out_dir))


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


# -- dataset assembly -----------------------------------------------------------


def build_raw_series(data: DataConfig) -> RawSeries:
    if data.source == "synth":
        return synth_series(
            data.kind, data.length, data.seed,
            noise_amplitude=data.noise_amplitude, period=data.period,
            amplitude=data.amplitude, offset=data.offset, slope=data.slope,
        )
    if data.source == "csv":
        return load_series_csv(data.path, data.column)
    raise ConfigError(f"data.source {data.source!r} is not a series source")


def build_datasets(data: DataConfig):
    """(train, test) datasets for either task family."""
    if data.source in ("synth", "csv"):
        series = build_raw_series(data)
        try:
            return prepare_split_windows(series, n_train=data.n_train, window=data.window)
        except ValueError as exc:
            raise ConfigError(f"data: {exc}") from None
    if data.source == "mc_synth":
        samples, vocab = synth_mc_corpus(data.seed)
    else:
        samples, vocab = load_mc_json(data.path)
    try:
        train_samples, test_samples = split_sentences(samples, data.n_train)
    except ValueError as exc:
        raise ConfigError(f"data.n_train: {exc}") from None
    return build_sentence_dataset(train_samples, vocab), build_sentence_dataset(test_samples, vocab)


def _dataset_summary(config: ExperimentConfig, train_ds, test_ds) -> dict:
    info = {"source": config.data.source, "task": config.task,
            "n_train": len(train_ds), "n_test": len(test_ds)}
    if config.task == "regression":
        info["window"] = config.data.window
    if config.data.source == "synth":
        info["kind"] = config.data.kind
        info["seed"] = config.data.seed
    return info


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_metrics(path: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["generated_at"] = _now()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _evaluate(config: ExperimentConfig, params: np.ndarray, dataset) -> dict:
    probs = training.predict_probs(config.model, params, dataset)
    if config.task == "classification":
        return {
            "accuracy_percent": classification_accuracy(probs, dataset.targets),
            "loss": training.l2_loss(probs, dataset.targets),
        }
    preds = rescale_prediction(probs, dataset.scaling)
    return {
        "accuracy_percent": prediction_accuracy(dataset.targets, preds),
        "loss": training.l2_loss(preds, dataset.targets),
    }


# -- commands -------------------------------------------------------------------


def run_train(config: ExperimentConfig) -> dict:
    train_ds, test_ds = build_datasets(config.data)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = config.out_dir / "checkpoint.json"
    tc = config.train
    tc = training.TrainConfig(
        epochs=tc.epochs, learning_rate=tc.learning_rate, optimizer=tc.optimizer,
        grad_method=tc.grad_method, fd_delta=tc.fd_delta, seed=tc.seed, shots=tc.shots,
        workers=tc.workers, small_init=tc.small_init, checkpoint_path=str(checkpoint),
    )
    history = training.fit(config.model, train_ds, tc)

    (config.out_dir / "history.json").write_text(
        json.dumps(
            {"losses": history.losses, "epoch_seconds": history.epoch_seconds},
            indent=2, sort_keys=True,
        ) + "\n"
    )
    train_metrics = _evaluate(config, history.params, train_ds)
    test_metrics = _evaluate(config, history.params, test_ds)
    metrics = {
        "command": "train",
        "model": training.model_descriptor(config.model),
        "dataset": _dataset_summary(config, train_ds, test_ds),
        "train": {
            "epochs": tc.epochs, "learning_rate": tc.learning_rate, "optimizer": tc.optimizer,
            "grad_method": tc.grad_method, "seed": tc.seed, "shots": tc.shots,
        },
        "loss_first": history.losses[0],
        "loss_final": history.losses[-1],
        "accuracy_percent": {"train": train_metrics["accuracy_percent"],
                             "test": test_metrics["accuracy_percent"]},
        "n_samples": {"train": len(train_ds), "test": len(test_ds)},
    }
    write_metrics(config.out_dir / "metrics.json", metrics)
    return metrics


def load_checkpoint(path: Path, config: ExperimentConfig) -> np.ndarray:
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"checkpoint {path} not found (train first?)") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"checkpoint {path} is not valid JSON: {exc}") from None
    params = np.asarray(payload.get("params"), dtype=np.float64)
    expected = param_count(config.model.ansatz)
    if params.shape != (expected,):
        raise ConfigError(
            f"checkpoint {path} holds {params.size} parameters, model needs {expected}"
        )
    return params


def run_eval(config: ExperimentConfig, checkpoint: Path | None = None) -> dict:
    train_ds, test_ds = build_datasets(config.data)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    params = load_checkpoint(checkpoint or config.out_dir / "checkpoint.json", config)

    probs = training.predict_probs(config.model, params, test_ds)
    if config.task == "classification":
        predicted = probs
        actuals = test_ds.targets
    else:
        predicted = rescale_prediction(probs, test_ds.scaling)
        actuals = test_ds.targets
    export_predictions(actuals, predicted, config.out_dir / "predictions")

    test_metrics = _evaluate(config, params, test_ds)
    metrics = {
        "command": "eval",
        "model": training.model_descriptor(config.model),
        "dataset": _dataset_summary(config, train_ds, test_ds),
        "accuracy_percent": {"test": test_metrics["accuracy_percent"]},
        "loss_final": test_metrics["loss"],
        "n_samples": {"train": len(train_ds), "test": len(test_ds)},
    }
    write_metrics(config.out_dir / "metrics.json", metrics)
    return metrics


def run_predict(config: ExperimentConfig, values: list[float], checkpoint: Path | None = None) -> dict:
    if config.task != "regression":
        raise ConfigError("predict takes raw series values; use a regression data source")
    if len(values) != config.data.window:
        raise ConfigError(f"expected {config.data.window} values, got {len(values)}")
    train_ds, _ = build_datasets(config.data)
    params = load_checkpoint(checkpoint or config.out_dir / "checkpoint.json", config)
    from .circuits import rescale_to_angle

    angles = rescale_to_angle(np.asarray(values, dtype=np.float64),
                              train_ds.scaling.x_min, train_ds.scaling.x_max)
    from .model import forward

    trace = forward(config.model, angles, params)
    forecast = float(rescale_prediction(trace.final_prob, train_ds.scaling))
    return {"forecast": forecast, "readout_probability": trace.final_prob}


def run_synth(config: ExperimentConfig) -> dict:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    data = config.data
    if data.source in ("synth", "csv"):
        series = build_raw_series(data)
        out = config.out_dir / "series.csv"
        write_series_csv(out, series)
        return {"written": str(out), "length": len(series)}
    samples, vocab = synth_mc_corpus(data.seed)
    out = config.out_dir / "corpus.json"
    write_mc_json(out, samples, vocab)
    return {"written": str(out), "sentences": len(samples), "vocabulary": vocab.size}


def run_inspect(config: ExperimentConfig) -> str:
    spec = config.model.ansatz
    n_params = param_count(spec)
    circuit = build_ansatz(spec, np.zeros(n_params))
    header = (
        f"{config.model.kind} model: data={config.model.data_qubits} "
        f"history={config.model.history_qubits} qubits={config.model.n_qubits}\n"
        f"encoder: Ry(angle) on the data register, readout on its first qubit\n"
        f"ansatz: {spec.single_qubit_layers} single-qubit layer(s), "
        f"{spec.entangler.layout} x{spec.entangler.rounds} entangler rounds, "
        f"{n_params} trainable parameters\n"
    )
    return header + format_circuit(circuit)


def run_grad_check(config: ExperimentConfig | None) -> dict:
    """FD vs parameter-shift on a small seeded problem; reports the max gap."""
    if config is not None and config.model is not None:
        model = config.model
    else:
        from .circuits import default_ansatz

        model = ModelConfig(2, 2, "plain", default_ansatz(4))
    rng = np.random.default_rng(0)
    from .data import ScalingParams, WindowedDataset

    window = 3
    ds = WindowedDataset(
        inputs=rng.uniform(0.0, np.pi, size=(4, window)),
        targets=rng.uniform(1.0, 2.0, size=4),
        scaling=ScalingParams(1.0, 2.0),
        window=window,
    )
    params = training.init_params(model.ansatz, seed=1)
    g_fd = training.grad_finite_difference(model, params, ds, delta=1e-4)
    g_ps = training.grad_parameter_shift(model, params, ds)
    gap = float(np.max(np.abs(g_fd - g_ps)))
    return {"max_deviation": gap, "n_params": len(params), "tolerance": 1e-6, "ok": gap <= 1e-6}
