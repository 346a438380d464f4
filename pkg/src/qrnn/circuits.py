"""Circuit builders: gates, the angle encoder and the hardware-efficient ansatz.

The ansatz alternates single-qubit Rx-Rz-Rx triples with two-qubit Rzz
couplers laid out by an entangler pattern (nearest-neighbour chain, circuit
blocks, or all-to-all). Every rotation angle is an independently trainable
parameter; parameters are bound from a flat vector in gate order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import density


class GateKind(str, Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    HADAMARD = "h"
    CNOT = "cnot"
    RZZ = "rzz"


ROTATION_KINDS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ})
TWO_QUBIT_KINDS = frozenset({GateKind.CNOT, GateKind.RZZ})


@dataclass(frozen=True)
class Gate:
    """One gate application: kind, target qubits, and (for rotations) an angle.

    `param_slot` is set iff the angle is a trainable parameter; it records the
    index into the flat parameter vector the angle was bound from.
    """

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None
    param_slot: int | None = None

    def __post_init__(self):
        arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate targets {self.targets}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind.value} needs an angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind.value} takes no angle")
        if self.param_slot is not None and self.kind not in ROTATION_KINDS:
            raise ValueError(f"{self.kind.value} cannot be trainable")


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over a fixed register width."""

    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for gate in self.gates:
            for q in gate.targets:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"gate target {q} out of range for {self.n_qubits} qubits")

    def param_slots(self) -> list[int]:
        return [g.param_slot for g in self.gates if g.param_slot is not None]


def gate_matrix(kind: GateKind, angle: float | None = None) -> np.ndarray:
    """Unitary for one gate. 2x2 for single-qubit kinds, 4x4 for two-qubit.

    Two-qubit matrices index the local basis as targets[0] + 2 * targets[1]
    (first target = least-significant local bit). CNOT's control is
    targets[0]; Rzz(theta) = exp(i theta Z x Z) = diag(e^{i t}, e^{-i t},
    e^{-i t}, e^{i t}).
    """
    kind = GateKind(kind)
    if kind in ROTATION_KINDS:
        if angle is None:
            raise ValueError(f"{kind.value} needs an angle")
        t = float(angle)
    elif angle is not None:
        raise ValueError(f"{kind.value} takes no angle")
    if kind is GateKind.RX:
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind is GateKind.RY:
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind is GateKind.RZ:
        return np.array(
            [[np.exp(-0.5j * t), 0.0], [0.0, np.exp(0.5j * t)]], dtype=np.complex128
        )
    if kind is GateKind.HADAMARD:
        return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
    if kind is GateKind.CNOT:
        m = np.zeros((4, 4), dtype=np.complex128)
        m[0, 0] = m[2, 2] = 1.0  # control bit clear
        m[3, 1] = m[1, 3] = 1.0  # control bit set: flip target
        return m
    # RZZ: phase e^{i theta} on aligned local bits, e^{-i theta} otherwise
    aligned = np.exp(1j * t)
    anti = np.exp(-1j * t)
    return np.diag([aligned, anti, anti, aligned]).astype(np.complex128)


def rzz_decomposition(theta: float, j: int, k: int) -> Circuit:
    """Rzz(theta) on (j, k) as CNOT(j->k), Rz(-2 theta) on k, CNOT(j->k).

    Equals the Rzz matrix exactly (not just up to global phase).
    """
    if j == k:
        raise ValueError("coupler needs two distinct qubits")
    gates = (
        Gate(GateKind.CNOT, (j, k)),
        Gate(GateKind.RZ, (k,), angle=-2.0 * float(theta)),
        Gate(GateKind.CNOT, (j, k)),
    )
    return Circuit(n_qubits=max(j, k) + 1, gates=gates)


def rescale_to_angle(x, x_min: float, x_max: float):
    """Clamped linear map [x_min, x_max] -> [0, pi]. Vectorized over x."""
    if not x_max > x_min:
        raise ValueError(f"need x_max > x_min, got ({x_min}, {x_max})")
    frac = (np.asarray(x, dtype=np.float64) - x_min) / (x_max - x_min)
    return np.pi * np.clip(frac, 0.0, 1.0)


def build_encoder(angle: float, data_qubits: tuple[int, ...] | list[int]) -> Circuit:
    """Replicated angle encoding: Ry(angle) on every data qubit."""
    data_qubits = tuple(int(q) for q in data_qubits)
    if not data_qubits:
        raise ValueError("encoder needs at least one data qubit")
    gates = tuple(Gate(GateKind.RY, (q,), angle=float(angle)) for q in data_qubits)
    return Circuit(n_qubits=max(data_qubits) + 1, gates=gates)


@dataclass(frozen=True)
class EntanglerConfig:
    """Two-qubit coupler layout: one of "NN", "CB", "AA", repeated `rounds` times."""

    layout: str
    rounds: int = 1

    def __post_init__(self):
        if self.layout not in ("NN", "CB", "AA"):
            raise ValueError(f"unknown entangler layout {self.layout!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


def entangler_pairs(config: EntanglerConfig, n_qubits: int) -> list[tuple[int, int]]:
    """Ordered coupler pairs for one ansatz.

    NN: the open chain (0,1)..(n-2,n-1), repeated per round.
    CB: one round is the even matching (0,1),(2,3),.. followed by the odd
        wraparound matching (1,2),(3,4),..,(n-1,0); n qubits -> n pairs per
        round, each qubit used twice. Requires even n >= 2.
    AA: all unordered pairs in lexicographic order, repeated per round.
    """
    n = int(n_qubits)
    if n < 2:
        raise ValueError("entanglers need at least 2 qubits")
    if config.layout == "NN":
        round_pairs = [(q, q + 1) for q in range(n - 1)]
    elif config.layout == "CB":
        if n % 2 != 0:
            raise ValueError(f"CB layout needs an even qubit count, got {n}")
        round_pairs = [(q, q + 1) for q in range(0, n - 1, 2)]
        round_pairs += [(q, (q + 1) % n) for q in range(1, n, 2)]
    else:
        round_pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    return round_pairs * config.rounds


@dataclass(frozen=True)
class AnsatzSpec:
    """Shape of the trainable ansatz on a register of `n_qubits`."""

    n_qubits: int
    entangler: EntanglerConfig
    single_qubit_layers: int = 1

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("ansatz needs at least 2 qubits")
        if self.single_qubit_layers < 1:
            raise ValueError("single_qubit_layers must be >= 1")
        entangler_pairs(self.entangler, self.n_qubits)  # validates layout vs width


def default_ansatz(n_qubits: int) -> AnsatzSpec:
    """Default depth: 1 single-qubit layer + 2 CB rounds (30 params at 6 qubits)."""
    return AnsatzSpec(n_qubits, EntanglerConfig("CB", rounds=2), single_qubit_layers=1)


def param_count(spec: AnsatzSpec) -> int:
    """Trainable angles: 3 per qubit per single-qubit layer + 1 per coupler pair."""
    pairs = entangler_pairs(spec.entangler, spec.n_qubits)
    return 3 * spec.n_qubits * spec.single_qubit_layers + len(pairs)


def build_ansatz(spec: AnsatzSpec, params: np.ndarray) -> Circuit:
    """Bind a flat parameter vector into the ansatz gate list.

    Gate order is the binding order: for each single-qubit layer, an
    Rx-Rz-Rx triple on qubit 0, 1, ..; then one Rzz per entangler pair.
    """
    params = np.asarray(params, dtype=np.float64)
    expected = param_count(spec)
    if params.shape != (expected,):
        raise ValueError(f"expected {expected} parameters, got shape {params.shape}")
    gates = []
    slot = 0
    for _ in range(spec.single_qubit_layers):
        for q in range(spec.n_qubits):
            for kind in (GateKind.RX, GateKind.RZ, GateKind.RX):
                gates.append(Gate(kind, (q,), angle=float(params[slot]), param_slot=slot))
                slot += 1
    for j, k in entangler_pairs(spec.entangler, spec.n_qubits):
        gates.append(Gate(GateKind.RZZ, (j, k), angle=float(params[slot]), param_slot=slot))
        slot += 1
    return Circuit(n_qubits=spec.n_qubits, gates=tuple(gates))


def apply_circuit(dm: np.ndarray, circuit: Circuit, resymmetrize_every: int = 100) -> np.ndarray:
    """Run a gate list over a density matrix (conjugation gate by gate).

    Long chains re-symmetrize rho <- (rho + rho^dagger)/2 every
    `resymmetrize_every` gates to stop Hermiticity drift.
    """
    n = density.num_qubits(dm.shape[-1])
    if circuit.n_qubits > n:
        raise ValueError(f"circuit needs {circuit.n_qubits} qubits, state has {n}")
    out = dm
    for count, gate in enumerate(circuit.gates, start=1):
        out = density.apply_unitary(out, gate_matrix(gate.kind, gate.angle), gate.targets)
        if resymmetrize_every and count % resymmetrize_every == 0:
            out = 0.5 * (out + np.swapaxes(out, -1, -2).conj())
    return out


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a whole gate list (gates left-applied to the identity)."""
    dim = 2**circuit.n_qubits
    u = np.eye(dim, dtype=np.complex128)
    for gate in circuit.gates:
        u = density._apply_left(u, gate_matrix(gate.kind, gate.angle), gate.targets, circuit.n_qubits)
    return u


def format_circuit(circuit: Circuit) -> str:
    """One gate per line: kind, angle or slot, targets."""
    lines = []
    for gate in circuit.gates:
        qubits = ", ".join(f"q{t}" for t in gate.targets)
        if gate.param_slot is not None:
            lines.append(f"{gate.kind.value:<5} slot {gate.param_slot:<3} angle {gate.angle:+.6f}  [{qubits}]")
        elif gate.angle is not None:
            lines.append(f"{gate.kind.value:<5} angle {gate.angle:+.6f}  [{qubits}]")
        else:
            lines.append(f"{gate.kind.value:<5} [{qubits}]")
    return "\n".join(lines)
