"""Brute-force oracles shared by the test suite.

Everything here is built from explicit basis-index loops or Kronecker
products, deliberately avoiding the index-sliced kernels under test.
Qubit 0 is the least-significant bit of the basis index throughout.
"""

import numpy as np


def embed_gate(u: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Dense 2^n x 2^n embedding of a k-qubit operator via index bookkeeping."""
    dim = 2**n
    full = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        local_col = 0
        rest = col
        for j, q in enumerate(targets):
            local_col |= ((col >> q) & 1) << j
            rest &= ~(1 << q)
        for local_row in range(u.shape[0]):
            row = rest
            for j, q in enumerate(targets):
                row |= ((local_row >> j) & 1) << q
            full[row, col] = u[local_row, local_col]
    return full


def brute_partial_trace(dm: np.ndarray, discard: tuple[int, ...], n: int) -> np.ndarray:
    """Partial trace by summing matrix elements whose discarded bits agree."""
    kept = [q for q in range(n) if q not in discard]
    out = np.zeros((2 ** len(kept), 2 ** len(kept)), dtype=np.complex128)
    for i in range(2**n):
        if any((i >> q) & 1 for q in discard):
            continue
        for j in range(2**n):
            if any((j >> q) & 1 for q in discard):
                continue
            for pattern in range(2 ** len(discard)):
                offset = 0
                for a, q in enumerate(discard):
                    offset |= ((pattern >> a) & 1) << q
                r = sum(((i >> q) & 1) << a for a, q in enumerate(kept))
                c = sum(((j >> q) & 1) << a for a, q in enumerate(kept))
                out[r, c] += dm[i + offset, j + offset]
    return out


def brute_reset(dm: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Reset channel as an explicit Kraus sum: rho -> sum_b K_b rho K_b^dagger
    with K_b = |0..0><b| on the reset register."""
    k = len(targets)
    out = np.zeros_like(dm, dtype=np.complex128)
    for b in range(2**k):
        local = np.zeros((2**k, 2**k), dtype=np.complex128)
        local[0, b] = 1.0
        kraus = embed_gate(local, targets, n)
        out += kraus @ dm @ kraus.conj().T
    return out


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    """Full-rank random density matrix rho = A A^dagger / tr."""
    dim = 2**n
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish random unitary from the QR decomposition of a Ginibre matrix."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return psi / np.linalg.norm(psi)
