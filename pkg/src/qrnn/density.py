"""Dense density-matrix simulation primitives.

Convention: qubit 0 is the least-significant bit of the computational-basis
index, so basis state ``|b_{n-1} ... b_1 b_0>`` has index ``sum_q b_q 2^q``.

Density matrices are complex128 ndarrays of shape ``(..., 2**n, 2**n)``.
Every operation accepts leading batch dimensions, treats its inputs as
immutable and returns a new array. Gates are applied with index-sliced
kernels; the full ``2**n x 2**n`` embedding of a gate is never materialized.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

ATOL_UNITARY = 1e-10


def num_qubits(dim: int) -> int:
    """Number of qubits for a Hilbert-space dimension, rejecting non-powers of 2."""
    n = dim.bit_length() - 1
    if dim <= 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of 2")
    return n


def zero_state(n_qubits: int) -> np.ndarray:
    """State vector |0...0> on n qubits."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    state = np.zeros(2**n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def density_from_state(state: np.ndarray) -> np.ndarray:
    """Outer product |psi><psi| of a normalized state vector."""
    state = np.asarray(state, dtype=np.complex128)
    norm = np.linalg.norm(state, axis=-1)
    if not np.allclose(norm, 1.0, atol=1e-8):
        raise ValueError(f"state vector is not normalized (|psi| = {norm})")
    return state[..., :, None] * state[..., None, :].conj()


def zero_density(n_qubits: int) -> np.ndarray:
    """Density matrix |0...0><0...0| on n qubits."""
    return density_from_state(zero_state(n_qubits))


def _check_targets(n: int, targets: tuple[int, ...]) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits {targets}")
    for q in targets:
        if not 0 <= q < n:
            raise ValueError(f"target qubit {q} out of range for {n} qubits")


def _check_unitary(u: np.ndarray, k: int) -> None:
    dim = 2**k
    if u.shape[-2:] != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix for {k} target(s), got {u.shape}")
    eye = np.eye(dim)
    prod = u @ np.swapaxes(u, -1, -2).conj()
    if not np.allclose(prod, eye, atol=ATOL_UNITARY):
        raise ValueError("matrix is not unitary within 1e-10")


@lru_cache(maxsize=None)
def _basis_groups(n: int, targets: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    """Basis indices grouped by the bit pattern on `targets`.

    Group ``l`` holds, in ascending order, every basis index whose bits at
    ``targets`` spell the local index ``l`` (targets[0] = local LSB). Groups
    are aligned: entry j of every group shares the same non-target bits.
    """
    all_idx = np.arange(2**n)
    mask = 0
    for q in targets:
        mask |= 1 << q
    base = all_idx[(all_idx & mask) == 0]
    groups = []
    for local in range(2 ** len(targets)):
        offset = 0
        for j, q in enumerate(targets):
            if (local >> j) & 1:
                offset |= 1 << q
        groups.append(base + offset)
    return tuple(groups)


def _out_shape(mat: np.ndarray, u: np.ndarray) -> tuple[int, ...]:
    return np.broadcast_shapes(mat.shape[:-2], u.shape[:-2]) + mat.shape[-2:]


def _apply_left(mat: np.ndarray, u: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """mat -> (U embedded on targets) @ mat, acting on axis -2."""
    groups = _basis_groups(n, targets)
    k = len(groups)
    rows = [mat[..., g, :] for g in groups]
    out = np.empty(_out_shape(mat, u), dtype=np.complex128)
    for a in range(k):
        acc = u[..., a, 0, None, None] * rows[0]
        for b in range(1, k):
            acc = acc + u[..., a, b, None, None] * rows[b]
        out[..., groups[a], :] = acc
    return out


def _apply_right_dagger(mat: np.ndarray, u: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """mat -> mat @ (U embedded on targets)^dagger, acting on axis -1."""
    groups = _basis_groups(n, targets)
    k = len(groups)
    uc = u.conj()
    cols = [mat[..., :, g] for g in groups]
    out = np.empty(_out_shape(mat, u), dtype=np.complex128)
    for a in range(k):
        acc = uc[..., a, 0, None, None] * cols[0]
        for b in range(1, k):
            acc = acc + uc[..., a, b, None, None] * cols[b]
        out[..., :, groups[a]] = acc
    return out


def apply_unitary(dm: np.ndarray, u: np.ndarray, targets: tuple[int, ...] | list[int]) -> np.ndarray:
    """Conjugate: rho -> U rho U^dagger with U acting on 1 or 2 target qubits.

    `u` may carry leading batch dimensions matching `dm`'s.
    """
    dm = np.asarray(dm, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    targets = tuple(int(q) for q in targets)
    n = num_qubits(dm.shape[-1])
    if len(targets) not in (1, 2):
        raise ValueError(f"supported gate arities are 1 and 2, got {len(targets)}")
    _check_targets(n, targets)
    _check_unitary(u, len(targets))
    out = _apply_left(dm, u, targets, n)
    return _apply_right_dagger(out, u, targets, n)


def apply_unitary_state(state: np.ndarray, u: np.ndarray, targets: tuple[int, ...] | list[int]) -> np.ndarray:
    """State-vector fast path: psi -> (U embedded on targets) psi."""
    state = np.asarray(state, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    targets = tuple(int(q) for q in targets)
    n = num_qubits(state.shape[-1])
    _check_targets(n, targets)
    _check_unitary(u, len(targets))
    return _apply_left(state[..., :, None], u, targets, n)[..., :, 0]


def partial_trace(dm: np.ndarray, discard: tuple[int, ...] | list[int]) -> np.ndarray:
    """Trace out `discard`, keeping the remaining qubits in their relative order.

    Kept qubit q becomes qubit rank(q among kept) of the reduced matrix.
    """
    dm = np.asarray(dm, dtype=np.complex128)
    discard = tuple(int(q) for q in discard)
    n = num_qubits(dm.shape[-1])
    _check_targets(n, discard)
    if len(discard) >= n:
        raise ValueError("cannot discard every qubit")
    if not discard:
        return dm.copy()
    batch_shape = dm.shape[:-2]
    nb = len(batch_shape)
    work = dm.reshape(batch_shape + (2,) * (2 * n))
    m = n
    for q in sorted(discard, reverse=True):
        row_ax = nb + (m - 1 - q)
        work = np.trace(work, axis1=row_ax, axis2=row_ax + m)
        m -= 1
    return work.reshape(batch_shape + (2**m, 2**m))


@lru_cache(maxsize=None)
def _embed_indices(n: int, targets: tuple[int, ...]) -> np.ndarray:
    """Full-space indices of reduced basis states, with target bits pinned to 0."""
    kept = [q for q in range(n) if q not in targets]
    reduced = np.arange(2 ** len(kept))
    full = np.zeros_like(reduced)
    for j, q in enumerate(kept):
        full |= ((reduced >> j) & 1) << q
    return full


def reset_qubits(dm: np.ndarray, targets: tuple[int, ...] | list[int]) -> np.ndarray:
    """Reset channel: rho -> |0..0><0..0|_targets (x) tr_targets(rho).

    Non-selective reinitialization of `targets`; the rest of the register is
    untouched. Trace and positivity are preserved.
    """
    dm = np.asarray(dm, dtype=np.complex128)
    targets = tuple(int(q) for q in targets)
    n = num_qubits(dm.shape[-1])
    _check_targets(n, targets)
    if not targets:
        raise ValueError("reset needs at least one target qubit")
    if len(targets) >= n:
        raise ValueError("reset must keep at least one qubit")
    reduced = partial_trace(dm, targets)
    full_idx = _embed_indices(n, targets)
    out = np.zeros_like(dm)
    out[..., full_idx[:, None], full_idx[None, :]] = reduced
    return out


def prob_one(dm: np.ndarray, qubit: int) -> np.ndarray | float:
    """P(measuring |1>) on `qubit`: the diagonal mass where its bit is set."""
    dm = np.asarray(dm)
    n = num_qubits(dm.shape[-1])
    _check_targets(n, (qubit,))
    diag = np.einsum("...ii->...i", dm).real
    mask = (np.arange(2**n) >> qubit) & 1 == 1
    return diag[..., mask].sum(axis=-1)


def expectation_z(dm: np.ndarray, qubit: int) -> np.ndarray | float:
    """<Z> on `qubit`; equals 1 - 2 * prob_one."""
    return 1.0 - 2.0 * prob_one(dm, qubit)


def sample_mean(p: float, shots: int, seed: int) -> float:
    """Mean of `shots` Bernoulli(p) draws from a dedicated seeded generator.

    Deterministic per (p, shots, seed). Exact for p in {0, 1}: draws are
    uniform on [0, 1) and counted as hits when below p.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = float(np.clip(p, 0.0, 1.0))
    rng = np.random.default_rng(seed)
    return float(np.mean(rng.random(shots) < p))


def sample_prob_one(dm: np.ndarray, qubit: int, shots: int, seed: int) -> float:
    """Estimate prob_one from `shots` Bernoulli draws; see sample_mean."""
    return sample_mean(float(prob_one(dm, qubit)), shots, seed)


def purity(dm: np.ndarray) -> np.ndarray | float:
    """tr(rho^2); 1 for pure states, >= 1/2^n otherwise."""
    return np.einsum("...ij,...ji->...", dm, dm).real


def check_density_matrix(dm: np.ndarray, atol: float = 1e-10) -> None:
    """Validate trace 1, Hermiticity and positivity within `atol`."""
    dm = np.asarray(dm)
    num_qubits(dm.shape[-1])
    traces = np.einsum("...ii->...", dm)
    if not np.allclose(traces, 1.0, atol=atol):
        raise ValueError(f"trace deviates from 1 by {np.max(np.abs(traces - 1.0)):.3e}")
    herm_err = np.max(np.abs(dm - np.swapaxes(dm, -1, -2).conj()))
    if herm_err > atol:
        raise ValueError(f"matrix is not Hermitian (max deviation {herm_err:.3e})")
    eigs = np.linalg.eigvalsh(0.5 * (dm + np.swapaxes(dm, -1, -2).conj()))
    if np.min(eigs) < -atol:
        raise ValueError(f"matrix has negative eigenvalue {np.min(eigs):.3e}")
