"""Angle encoding and the convolution/pooling variational circuit.

The circuit follows the usual quantum-CNN shape: a rotation on every qubit,
then alternating stages of two-qubit convolution blocks on neighboring
active qubits (wrapped circularly) and pooling layers that entangle each
discarded qubit into its kept neighbor via a parameterized CRZ.  Stages
repeat until a single active qubit remains; that qubit is the readout.

Parameter budget per stage: two convolution sublayers of 3-parameter blocks
plus one CRZ per pooled pair.  For 4 qubits this yields 37 trainable
parameters and for 8 qubits 93.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simcore import Circuit, GateOp, _apply_1q, gate

__all__ = ["EncodingSpec", "AnsatzSpec", "encode", "encode_batch", "build_qcnn", "full_circuit"]


@dataclass(frozen=True)
class EncodingSpec:
    """Angle encoding: one RY(scale * x_i) per feature, on qubit i."""

    kind: str = "angle"
    scale: float = math.pi

    def __post_init__(self):
        if self.kind != "angle":
            raise ValueError(f"unsupported encoding kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("encoding scale must be > 0")


@dataclass(frozen=True)
class AnsatzSpec:
    """A variational circuit with a designated single readout qubit."""

    n_qubits: int
    circuit: Circuit
    readout: int
    n_params: int = field(default=-1)

    def __post_init__(self):
        if not 0 <= self.readout < self.n_qubits:
            raise ValueError("readout qubit out of range")
        if self.n_params == -1:
            object.__setattr__(self, "n_params", self.circuit.n_params)
        elif self.n_params != self.circuit.n_params:
            raise ValueError("n_params does not match the circuit")


def _check_features(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 1:
        raise ValueError("features must be a 1-d vector")
    if np.any(features < -1e-12) or np.any(features > 1.0 + 1e-12):
        raise ValueError("features must lie in [0, 1]")
    return np.clip(features, 0.0, 1.0)


def encode(features, spec: EncodingSpec = EncodingSpec()) -> list[GateOp]:
    """Fixed-angle RY gates preparing the input state from unit-scaled features."""
    features = _check_features(features)
    return [
        gate("ry", i, angle=spec.scale * x) for i, x in enumerate(features)
    ]


def encode_batch(features: np.ndarray, spec: EncodingSpec = EncodingSpec()) -> np.ndarray:
    """Encoded input states for a feature matrix; returns amplitudes (B, 2**n)."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ValueError("expected a (batch, n_features) matrix")
    if np.any(features < -1e-12) or np.any(features > 1.0 + 1e-12):
        raise ValueError("features must lie in [0, 1]")
    batch, n = features.shape
    amps = np.zeros((batch, 2**n), dtype=complex)
    amps[:, 0] = 1.0
    half = 0.5 * spec.scale * np.clip(features, 0.0, 1.0)
    for q in range(n):
        c, s = np.cos(half[:, q]), np.sin(half[:, q])
        mats = np.zeros((batch, 2, 2), dtype=complex)
        mats[:, 0, 0] = c
        mats[:, 0, 1] = -s
        mats[:, 1, 0] = s
        mats[:, 1, 1] = c
        amps = _apply_1q(amps, mats, n, q)
    return amps


def _conv_pairs(active: list[int]) -> list[tuple[int, int]]:
    """Adjacent active-qubit pairs, circularly; a 2-qubit ring is one pair."""
    m = len(active)
    if m == 2:
        return [(active[0], active[1])]
    return [(active[i], active[(i + 1) % m]) for i in range(m)]


def _qcnn_ops(n_qubits: int, min_active: int = 1) -> tuple[list[GateOp], int, list[int]]:
    """Gate list, parameter count, and the active qubits left after pooling."""
    ops: list[GateOp] = []
    slot = 0

    def take(width: int) -> int:
        nonlocal slot
        s = slot
        slot += width
        return s

    for q in range(n_qubits):
        ops.append(gate("ry", q, slot=take(1)))
    active = list(range(n_qubits))
    while len(active) >= 2 and len(active) - len(active) // 2 >= min_active:
        for _ in range(2):
            for a, b in _conv_pairs(active):
                ops.append(gate("block2q", a, b, slot=take(3)))
        kept = []
        pairs = [(active[2 * i], active[2 * i + 1]) for i in range(len(active) // 2)]
        for discarded, keep in pairs:
            ops.append(gate("crz", discarded, keep, slot=take(1)))
            kept.append(keep)
        if len(active) % 2 == 1:
            kept.append(active[-1])
        active = kept
    return ops, slot, active


def build_qcnn(n_qubits: int) -> AnsatzSpec:
    """Deterministic convolution/pooling ansatz; readout is the last active qubit."""
    if n_qubits < 2:
        raise ValueError("the ansatz needs at least 2 qubits")
    ops, n_params, active = _qcnn_ops(n_qubits, min_active=1)
    circuit = Circuit(n_qubits, ops, n_params)
    return AnsatzSpec(n_qubits, circuit, readout=active[0])


def build_qcnn_truncated(n_qubits: int, min_active: int) -> tuple[Circuit, list[int]]:
    """Ansatz with pooling stopped early so at least ``min_active`` qubits survive.

    Used by multi-qubit-readout baselines; returns the circuit and the
    surviving active qubits in index order.
    """
    if not 1 <= min_active <= n_qubits:
        raise ValueError("min_active must be in [1, n_qubits]")
    ops, n_params, active = _qcnn_ops(n_qubits, min_active=min_active)
    return Circuit(n_qubits, ops, n_params), sorted(active)


def full_circuit(features, encoding: EncodingSpec, ansatz: AnsatzSpec) -> Circuit:
    """Concatenate the encoding gates and the variational circuit."""
    features = np.asarray(features, dtype=float)
    if features.shape != (ansatz.n_qubits,):
        raise ValueError(
            f"got {features.shape[0] if features.ndim == 1 else features.shape} "
            f"features for a {ansatz.n_qubits}-qubit ansatz"
        )
    return Circuit(ansatz.n_qubits, tuple(encode(features, encoding)) + ansatz.circuit.ops)
