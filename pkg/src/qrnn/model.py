"""Quantum recurrent cell: encode, entangle, read out, reset, repeat.

Two architectures share the cell:

* ``plain``    - qubits 0..d-1 are the data register every step and are reset
                 after each readout; qubits d..d+h-1 carry history untouched.
* ``staggered``- requires d == h. The two halves swap roles every step: the
                 incoming-history half is reset after the readout and becomes
                 the next data register, so the just-encoded half carries the
                 memory and every qubit is reinitialized every second step.

The readout is P(|1>) on the first data-register qubit, taken after the
ansatz and before the reset.

``forward`` has two equivalent execution paths. ``mode="dense"`` folds
``qrb_step`` over the window with full density-matrix conjugation (the
reference semantics). ``mode="factored"`` exploits the reset structure: after
each reset the state is |0..0><0..0| on one register (x) sigma on the other,
so only a thin factor F with sigma = F F^dagger is propagated and each step
is one GEMM against the composed step unitary. Both paths agree to simulator
tolerance; the factored one is the default and is batched over windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import density
from .circuits import AnsatzSpec, build_ansatz, build_encoder, circuit_unitary, apply_circuit
from .data import ScalingParams

DEFAULT_QUBIT_CAP = 12


@dataclass(frozen=True)
class ModelConfig:
    """Register sizes, architecture kind and ansatz shape for one model."""

    data_qubits: int
    history_qubits: int
    kind: str
    ansatz: AnsatzSpec
    max_qubits: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if self.kind not in ("plain", "staggered"):
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.data_qubits < 1 or self.history_qubits < 1:
            raise ValueError("both registers need at least one qubit")
        if self.kind == "staggered" and self.data_qubits != self.history_qubits:
            raise ValueError("staggered mode needs equal register sizes")
        n = self.data_qubits + self.history_qubits
        if n > self.max_qubits:
            raise ValueError(
                f"{n} qubits exceeds the cap of {self.max_qubits}; "
                "raise max_qubits explicitly if you mean it"
            )
        if self.ansatz.n_qubits != n:
            raise ValueError(
                f"ansatz covers {self.ansatz.n_qubits} qubits, registers total {n}"
            )

    @property
    def n_qubits(self) -> int:
        return self.data_qubits + self.history_qubits


@dataclass(frozen=True)
class Roles:
    """Which qubits play which part during one step."""

    data_qubits: tuple[int, ...]
    history_qubits: tuple[int, ...]
    readout_qubit: int


def role_schedule(config: ModelConfig, step: int) -> Roles:
    """Register roles at a given step (0-based).

    Plain roles are static. Staggered roles alternate: even steps encode into
    the low half, odd steps into the high half; the readout follows the data
    register's first qubit.
    """
    if step < 0:
        raise ValueError("step must be >= 0")
    d, h = config.data_qubits, config.history_qubits
    low = tuple(range(d))
    high = tuple(range(d, d + h))
    if config.kind == "plain" or step % 2 == 0:
        return Roles(data_qubits=low, history_qubits=high, readout_qubit=0)
    return Roles(data_qubits=high, history_qubits=low, readout_qubit=d)


def qrb_step(
    dm: np.ndarray,
    x_angle: float,
    params: np.ndarray,
    roles: Roles,
    config: ModelConfig,
    _ansatz=None,
):
    """One recurrent block on a full density matrix.

    Encodes the input angle on the data register, runs the shared-parameter
    ansatz over all qubits, reads P(|1>) on the readout qubit, then applies
    the reset channel (plain: data register; staggered: incoming-history
    register). Returns ``(p, next_dm)``.

    The incoming data-register qubits are expected to be |0>; the reset
    discipline of forward() guarantees it.
    """
    circuit = _ansatz if _ansatz is not None else build_ansatz(config.ansatz, params)
    out = apply_circuit(dm, build_encoder(x_angle, roles.data_qubits))
    out = apply_circuit(out, circuit)
    p = float(density.prob_one(out, roles.readout_qubit))
    if config.kind == "plain":
        out = density.reset_qubits(out, roles.data_qubits)
    else:
        out = density.reset_qubits(out, roles.history_qubits)
    return p, out


@dataclass(frozen=True)
class ForwardTrace:
    """Per-step readout probabilities of one window pass."""

    step_probs: np.ndarray
    final_prob: float

    @property
    def steps(self) -> int:
        return len(self.step_probs)


def rescale_prediction(p: float, scaling: ScalingParams):
    """Map a readout probability back to data units: p * (max - min) + min."""
    return p * (scaling.x_max - scaling.x_min) + scaling.x_min


# -- factored fast path -------------------------------------------------------


def _encoder_vectors(angles: np.ndarray, d: int) -> np.ndarray:
    """Batched product state (x)_d (cos a/2, sin a/2); shape (B, 2**d)."""
    half = 0.5 * np.asarray(angles, dtype=np.float64)
    v = np.stack([np.cos(half), np.sin(half)], axis=-1).astype(np.complex128)
    psi = np.ones((len(half), 1), dtype=np.complex128)
    for _ in range(d):
        psi = (v[:, :, None] * psi[:, None, :]).reshape(len(half), -1)
    return psi


def _fat_matmul(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """(dim,dim) @ (B,dim,r) as a single GEMM over flattened batch columns."""
    b, dim, r = a.shape
    flat = a.transpose(1, 0, 2).reshape(dim, b * r)
    return (u @ flat).reshape(dim, b, r).transpose(1, 0, 2)


def _factor_from_sigma(sigma: np.ndarray) -> np.ndarray:
    """F with F F^dagger = sigma for a batch of PSD matrices (eigh, clipped)."""
    sym = 0.5 * (sigma + np.swapaxes(sigma, -1, -2).conj())
    vals, vecs = np.linalg.eigh(sym)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))[..., None, :]


def forward_batch(
    config: ModelConfig,
    windows: np.ndarray,
    params: np.ndarray,
    shift: tuple[int, int, float] | None = None,
) -> np.ndarray:
    """Factored forward over a batch of equal-length windows.

    `windows` is (B, T) of encoder angles; returns (B, T) readout
    probabilities. `shift=(slot, step, delta)` perturbs one parameter at one
    step occurrence only (used by the parameter-shift rule).
    """
    windows = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    n_batch, n_steps = windows.shape
    if n_steps < 1:
        raise ValueError("window must contain at least one step")
    d, h = config.data_qubits, config.history_qubits
    u_step = circuit_unitary(build_ansatz(config.ansatz, params))
    u_shifted = None
    if shift is not None:
        slot, shift_step, delta = shift
        bumped = np.array(params, dtype=np.float64, copy=True)
        bumped[slot] += delta
        u_shifted = circuit_unitary(build_ansatz(config.ansatz, bumped))
        if not 0 <= shift_step < n_steps:
            raise ValueError(f"shift step {shift_step} outside window of {n_steps}")

    probs = np.empty((n_batch, n_steps), dtype=np.float64)
    dim = 2**config.n_qubits
    basis_bits = np.arange(dim)
    # carried marginal of the untouched register, as a factor (B, 2**reg, r);
    # it starts on the high (history) qubits as |0..0>
    factor = np.zeros((n_batch, 2**h, 1), dtype=np.complex128)
    factor[:, 0, 0] = 1.0

    for step in range(n_steps):
        roles = role_schedule(config, step)
        data_low = roles.data_qubits[0] == 0
        psi = _encoder_vectors(windows[:, step], d)
        r = factor.shape[-1]
        if data_low:
            # row index = (carried bits << d) + data bits
            a = (factor[:, :, None, :] * psi[:, None, :, None]).reshape(n_batch, dim, -1)
        else:
            a = (psi[:, :, None, None] * factor[:, None, :, :]).reshape(n_batch, dim, -1)
        u = u_shifted if (shift is not None and step == shift[1]) else u_step
        m = _fat_matmul(u, a)

        mask = ((basis_bits >> roles.readout_qubit) & 1) == 1
        mm = m[:, mask, :]
        probs[:, step] = np.einsum("bic,bic->b", mm, mm.conj()).real

        if step == n_steps - 1:
            break
        if config.kind == "plain":
            reset_low = True  # reset the data register
        else:
            reset_low = not data_low  # reset the incoming-history register
        # row index always splits as (high-register bits << low_width) + low bits
        low_width = d if data_low else config.n_qubits - d
        v = m.reshape(n_batch, 2 ** (config.n_qubits - low_width), 2**low_width, -1)
        if reset_low:
            sigma = np.einsum("bhlc,bglc->bhg", v, v.conj())
        else:
            sigma = np.einsum("bhlc,bhmc->blm", v, v.conj())
        factor = _factor_from_sigma(sigma)
    return probs


def forward(
    config: ModelConfig,
    window_angles: np.ndarray,
    params: np.ndarray,
    mode: str = "factored",
    shots: int | None = None,
    seed: int = 0,
) -> ForwardTrace:
    """Run one window through the recurrent cell.

    Analytic readout by default; with `shots` set, the final prediction
    readout is replaced by a seeded Bernoulli estimate (intermediate step
    probabilities stay analytic).
    """
    window = np.asarray(window_angles, dtype=np.float64).reshape(-1)
    if window.size < 1:
        raise ValueError("window must contain at least one step")
    if mode == "factored":
        probs = forward_batch(config, window[None, :], params)[0]
    elif mode == "dense":
        params = np.asarray(params, dtype=np.float64)
        ansatz = build_ansatz(config.ansatz, params)
        dm = density.zero_density(config.n_qubits)
        probs = np.empty(window.size, dtype=np.float64)
        for step, angle in enumerate(window):
            roles = role_schedule(config, step)
            probs[step], dm = qrb_step(dm, float(angle), params, roles, config, _ansatz=ansatz)
    else:
        raise ValueError(f"unknown forward mode {mode!r}")
    final = float(probs[-1])
    if shots is not None:
        final = density.sample_mean(final, shots, seed)
    return ForwardTrace(step_probs=probs, final_prob=final)
