"""Quantum recurrent neural networks on a dense density-matrix simulator.

Subpackages by responsibility: density (simulator kernels), circuits (gates
and the trainable ansatz), model (the recurrent cell), training (losses,
gradients, optimizers), data (series/text pipeline), evaluation (metrics,
classical baseline, exports), cli (JSON-config command line).
"""

from .circuits import (
    AnsatzSpec,
    Circuit,
    EntanglerConfig,
    Gate,
    GateKind,
    build_ansatz,
    build_encoder,
    default_ansatz,
    entangler_pairs,
    gate_matrix,
    param_count,
    rescale_to_angle,
    rzz_decomposition,
)
from .data import (
    RawSeries,
    ScalingParams,
    SentenceDataset,
    SentenceSample,
    Vocabulary,
    WindowedDataset,
    chronological_split,
    encode_sentence,
    fit_scaling,
    load_series_csv,
    make_windows,
    synth_mc_corpus,
    synth_series,
)
from .model import ForwardTrace, ModelConfig, Roles, forward, qrb_step, rescale_prediction, role_schedule

__version__ = "0.1.0"
