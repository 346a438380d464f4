"""Data pipeline: series loading, scaling, windowing, text encoding, synthesis.

Scaling is deliberately explicit everywhere: window inputs are mapped to
encoder angles with ScalingParams the caller fit on the training portion,
so no future data leaks into the preprocessing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuits import rescale_to_angle

DEFAULT_WINDOW = 7


@dataclass(frozen=True)
class ScalingParams:
    """Observed data range used for angle encoding and prediction rescaling."""

    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"need x_max > x_min, got ({self.x_min}, {self.x_max})")


@dataclass(frozen=True)
class RawSeries:
    """A named univariate series; values must be finite."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("series must be a non-empty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding-window samples: angle-encoded inputs, raw-unit targets.

    `inputs` is (N, window) of encoder angles in [0, pi]; `targets` is (N,)
    in original data units. All samples share one window length and one
    ScalingParams.
    """

    inputs: np.ndarray
    targets: np.ndarray
    scaling: ScalingParams
    window: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[1] != self.window:
            raise ValueError(f"inputs must be (N, {self.window}), got {inputs.shape}")
        if targets.shape != (inputs.shape[0],):
            raise ValueError("targets must align with inputs")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return len(self.targets)

    def windows(self) -> list[np.ndarray]:
        return list(self.inputs)


def load_series_csv(path: str | Path, column: str) -> RawSeries:
    """Read one numeric column from a headered CSV.

    Missing column, non-numeric cells (with their row number) and empty
    files each raise their own ValueError.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV, no header row")
        if column not in reader.fieldnames:
            raise ValueError(
                f"{path}: column {column!r} not found (have {reader.fieldnames})"
            )
        values = []
        for row_number, row in enumerate(reader, start=2):  # row 1 is the header
            cell = row[column]
            try:
                values.append(float(cell))
            except (TypeError, ValueError):
                raise ValueError(
                    f"{path}: row {row_number}: could not parse {cell!r} as a number"
                ) from None
    if not values:
        raise ValueError(f"{path}: no data rows")
    return RawSeries(name=column, values=np.asarray(values))


def write_series_csv(path: str | Path, series: RawSeries) -> None:
    """Write a series as a two-column CSV (index, <name>) with full precision."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", series.name])
        for i, v in enumerate(series.values):
            writer.writerow([i, repr(float(v))])


def fit_scaling(values: np.ndarray) -> ScalingParams:
    """Min/max over the given values (pass the training portion only)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot fit scaling on an empty array")
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi > lo:
        raise ValueError(f"constant data ({lo}) admits no scaling")
    return ScalingParams(lo, hi)


def make_windows(series: RawSeries, scaling: ScalingParams, window: int = DEFAULT_WINDOW) -> WindowedDataset:
    """All length-`window` input windows with the next element as target.

    Inputs are angle-encoded with `scaling` (values outside the fitted range
    clamp); targets stay in raw units. A series of length L yields
    L - window samples.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    values = series.values
    if len(values) < window + 1:
        raise ValueError(f"series of length {len(values)} too short for window {window}")
    n = len(values) - window
    idx = np.arange(window)[None, :] + np.arange(n)[:, None]
    inputs = rescale_to_angle(values[idx], scaling.x_min, scaling.x_max)
    targets = values[window:].copy()
    return WindowedDataset(inputs=inputs, targets=targets, scaling=scaling, window=window)


def chronological_split(dataset: WindowedDataset, n_train: int) -> tuple[WindowedDataset, WindowedDataset]:
    """First n_train windows for training, the rest for test. No shuffling."""
    if not 0 < n_train < len(dataset):
        raise ValueError(f"n_train must be in (0, {len(dataset)}), got {n_train}")
    train = WindowedDataset(
        inputs=dataset.inputs[:n_train],
        targets=dataset.targets[:n_train],
        scaling=dataset.scaling,
        window=dataset.window,
    )
    test = WindowedDataset(
        inputs=dataset.inputs[n_train:],
        targets=dataset.targets[n_train:],
        scaling=dataset.scaling,
        window=dataset.window,
    )
    return train, test


def prepare_split_windows(
    series: RawSeries, n_train: int, window: int = DEFAULT_WINDOW
) -> tuple[WindowedDataset, WindowedDataset]:
    """Windowing with leak-free scaling: fit on the raw values visible to
    the training windows (the first n_train + window elements), then split
    chronologically."""
    scaling = fit_scaling(series.values[: n_train + window])
    return chronological_split(make_windows(series, scaling, window), n_train)


# -- synthetic series ---------------------------------------------------------


def synth_series(
    kind: str,
    length: int,
    seed: int,
    noise_amplitude: float = 0.1,
    period: float = 40.0,
    amplitude: float = 1.0,
    offset: float = 10.0,
    slope: float = 0.01,
) -> RawSeries:
    """Seeded synthetic series, bounded away from zero for relative-error metrics.

    "sine_noise":    offset + amplitude * sin(2 pi t / period) + noise
    "trend_season":  the same plus slope * t
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if kind not in ("sine_noise", "trend_season"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    t = np.arange(length, dtype=np.float64)
    values = offset + amplitude * np.sin(2.0 * np.pi * t / period)
    if kind == "trend_season":
        values = values + slope * t
    if noise_amplitude:
        rng = np.random.default_rng(seed)
        values = values + noise_amplitude * rng.standard_normal(length)
    return RawSeries(name=kind, values=values)


# -- sentence classification --------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    """Fixed word list; a word's angle is pi * (index + 1) / (size + 1)."""

    words: tuple[str, ...]

    def __post_init__(self):
        if len(self.words) < 2:
            raise ValueError("vocabulary needs at least 2 words")
        if len(set(self.words)) != len(self.words):
            raise ValueError("vocabulary has duplicate words")

    @property
    def size(self) -> int:
        return len(self.words)

    def index(self, word: str) -> int:
        try:
            return self.words.index(word)
        except ValueError:
            raise ValueError(f"word {word!r} not in vocabulary") from None


def encode_sentence(words: list[str] | tuple[str, ...], vocab: Vocabulary) -> np.ndarray:
    """Angles pi*(i+1)/(V+1) per word: strictly inside (0, pi), equally spaced."""
    if not words:
        raise ValueError("cannot encode an empty sentence")
    idx = np.array([vocab.index(w) for w in words], dtype=np.float64)
    return np.pi * (idx + 1.0) / (vocab.size + 1.0)


@dataclass(frozen=True)
class SentenceSample:
    """One labelled sentence (label 0 or 1)."""

    words: tuple[str, ...]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if not self.words:
            raise ValueError("sentence cannot be empty")


@dataclass(frozen=True)
class SentenceDataset:
    """Angle-encoded sentences with binary labels.

    Sentences may differ in length, so inputs are a list of angle arrays.
    `scaling` is the identity range (0, 1): the readout probability is the
    class score directly.
    """

    sentences: tuple[np.ndarray, ...]
    targets: np.ndarray
    vocab: Vocabulary
    scaling: ScalingParams = field(default_factory=lambda: ScalingParams(0.0, 1.0))

    def __len__(self) -> int:
        return len(self.targets)

    def windows(self) -> list[np.ndarray]:
        return list(self.sentences)


def build_sentence_dataset(samples: list[SentenceSample], vocab: Vocabulary) -> SentenceDataset:
    return SentenceDataset(
        sentences=tuple(encode_sentence(s.words, vocab) for s in samples),
        targets=np.array([float(s.label) for s in samples]),
        vocab=vocab,
    )


# Two 3-to-4-word template grammars over one 17-word vocabulary; the classes
# share the subject "person" and both trailing adverbs. Word angles follow
# sorted vocabulary position, so the class-exclusive words are chosen to sort
# to opposite ends of the alphabet: the angle axis is class-monotone and only
# the adverb-ending sentences force the model to use its carried state.
_SHARED_WORDS = ("person", "skillfully", "today")
_FOOD = {
    "subjects": ("baker", "person"),
    "verbs": ("bakes", "cooks"),
    "adjective": "fresh",
    "objects": ("bread", "cake", "dish"),
}
_IT = {
    "subjects": ("user", "person"),
    "verbs": ("updates", "writes"),
    "adjective": "useful",
    "objects": ("utility", "website", "widget"),
}
MC_CLASS_SIZE = 65
MC_TRAIN_SIZE = 100


def _class_sentences(grammar: dict) -> list[tuple[str, ...]]:
    # Adverbs sit mid-sentence: every pattern ends on a class noun, the way
    # the classic two-topic sentence sets do.
    out = []
    for s in grammar["subjects"]:
        for v in grammar["verbs"]:
            for o in grammar["objects"]:
                out.append((s, v, o))
                out.append((s, v, grammar["adjective"], o))
                for adv in ("skillfully", "today"):
                    out.append((s, adv, v, o))
    return out


def synth_mc_corpus(seed: int) -> tuple[list[SentenceSample], Vocabulary]:
    """Seeded two-class sentence corpus: 130 sentences, 65 per class,
    3-or-4-word sentences over a fixed 17-word vocabulary with 3 shared words.

    The returned order is a seeded shuffle with both classes interleaved, so
    a positional 100/30 split keeps both classes on both sides.
    """
    words = set(_SHARED_WORDS)
    for grammar in (_FOOD, _IT):
        words.update(grammar["subjects"] + grammar["verbs"] + grammar["objects"])
        words.add(grammar["adjective"])
    vocab = Vocabulary(words=tuple(sorted(words)))

    rng = np.random.default_rng(seed)
    samples = []
    for label, grammar in enumerate((_FOOD, _IT)):
        pool = _class_sentences(grammar)
        picks = rng.choice(len(pool), size=MC_CLASS_SIZE, replace=True)
        samples.extend(SentenceSample(words=pool[i], label=label) for i in picks)
    order = rng.permutation(len(samples))
    return [samples[i] for i in order], vocab


def split_sentences(
    samples: list[SentenceSample], n_train: int = MC_TRAIN_SIZE
) -> tuple[list[SentenceSample], list[SentenceSample]]:
    """Positional split of an already-shuffled corpus."""
    if not 0 < n_train < len(samples):
        raise ValueError(f"n_train must be in (0, {len(samples)}), got {n_train}")
    return samples[:n_train], samples[n_train:]


def write_mc_json(path: str | Path, samples: list[SentenceSample], vocab: Vocabulary) -> None:
    """Corpus file: {"vocab": [..], "sentences": [{"words": [..], "label": 0|1}, ..]}."""
    payload = {
        "vocab": list(vocab.words),
        "sentences": [{"words": list(s.words), "label": s.label} for s in samples],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_mc_json(path: str | Path) -> tuple[list[SentenceSample], Vocabulary]:
    with open(path) as fh:
        payload = json.load(fh)
    try:
        vocab = Vocabulary(words=tuple(payload["vocab"]))
        samples = [
            SentenceSample(words=tuple(entry["words"]), label=int(entry["label"]))
            for entry in payload["sentences"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed corpus file ({exc})") from None
    return samples, vocab
