"""Reference classifiers: z-sign binary readout and one-hot multi-qubit readout.

Both baselines reuse the exact encoding and variational circuit of the main
classifier so that comparisons isolate the measurement strategy.  ``basebin``
reads a single z expectation whose sign picks one of two classes; ``basemea``
reads one z expectation per class against a +-1 one-hot target.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .ansatz import AnsatzSpec, EncodingSpec, build_qcnn, build_qcnn_truncated, encode_batch
from .data import RawDataset
from .simcore import Circuit, RunMode, expectation_z_batch, run_circuit_batch
from .simcore import evolve_density_batch, expectation_z_density_batch, _sample_from_expectation
from .training import EvalResult, TrainConfig, TrainedModel, minimize

__all__ = [
    "basebin_loss",
    "basebin_predict",
    "basemea_loss",
    "basemea_predict",
    "basemea_readouts",
    "train_basebin",
    "train_basemea",
    "evaluate_baseline",
]


def basebin_loss(z_expectation: float, y: int) -> float:
    """Squared error of a z expectation against a +-1 class target."""
    if y not in (-1, 1):
        raise ValueError("binary target must be +1 or -1")
    return float((z_expectation - y) ** 2)


def basebin_predict(z_expectation: float) -> int:
    """Class 0 carries the +1 target; an exact 0 expectation maps to it."""
    return 0 if z_expectation >= 0 else 1


def basemea_loss(z_expectations, y_onehot) -> float:
    """Mean squared error of per-class z expectations against a +-1 one-hot row."""
    z = np.asarray(z_expectations, dtype=float)
    y = np.asarray(y_onehot, dtype=float)
    if z.shape != y.shape:
        raise ValueError("expectation and target lengths differ")
    if not np.all(np.isin(y, (-1.0, 1.0))) or np.sum(y == 1.0) != 1:
        raise ValueError("target must be one-hot over {-1, +1}")
    return float(np.mean((z - y) ** 2))


def basemea_predict(z_expectations) -> int:
    """Class of the largest expectation; ties go to the smallest index."""
    return int(np.argmax(np.asarray(z_expectations, dtype=float)))


def basemea_readouts(n_qubits: int, n_classes: int) -> tuple[Circuit, tuple[int, ...]]:
    """Truncated-pooling circuit and its K lowest-index surviving qubits."""
    if n_classes > n_qubits:
        raise ValueError("one readout qubit per class requires K <= n_qubits")
    circuit, active = build_qcnn_truncated(n_qubits, min_active=n_classes)
    return circuit, tuple(active[:n_classes])


def _z_batch(circuit: Circuit, params, amps: np.ndarray, qubits: tuple[int, ...],
             mode: RunMode, rng: np.random.Generator | None) -> np.ndarray:
    """Per-qubit z expectations for a batch; returns (B, len(qubits))."""
    n = circuit.n_qubits
    out = np.empty((amps.shape[0], len(qubits)))
    if mode.is_noisy:
        rhos = np.einsum("bi,bj->bij", amps, amps.conj())
        evolved = evolve_density_batch(circuit, params, rhos, mode.noise)
        for col, q in enumerate(qubits):
            out[:, col] = expectation_z_density_batch(evolved, n, q, mode.noise)
    else:
        evolved = run_circuit_batch(circuit, params, amps)
        for col, q in enumerate(qubits):
            out[:, col] = expectation_z_batch(evolved, n, q)
    if mode.shots is not None:
        for col in range(len(qubits)):
            out[:, col] = _sample_from_expectation(out[:, col], mode.shots, rng)
    return out


def _shot_rng(config: TrainConfig):
    if config.mode.shots is None:
        return None
    return np.random.default_rng(np.random.SeedSequence((config.seed, 2)))


def train_basebin(dataset: RawDataset, ansatz: AnsatzSpec, encoding: EncodingSpec,
                  config: TrainConfig) -> TrainedModel:
    """Binary z-sign classifier on the shared ansatz; class 0 targets +1."""
    if dataset.n_classes != 2:
        raise ValueError("basebin handles exactly 2 classes")
    if dataset.n_features != ansatz.n_qubits:
        raise ValueError("feature dimension must equal the qubit count")
    amps = encode_batch(dataset.features, encoding)
    targets = np.where(dataset.labels == 0, 1.0, -1.0)
    rng = _shot_rng(config)
    qubits = (ansatz.readout,)

    def objective(p):
        z = _z_batch(ansatz.circuit, p, amps, qubits, config.mode, rng)[:, 0]
        return float(np.mean((z - targets) ** 2))

    x0 = np.random.default_rng(np.random.SeedSequence(config.seed)).uniform(
        0.0, 2.0 * np.pi, ansatz.n_params)
    settings = replace(config.optimizer, max_evals=config.supervised_steps)
    res = minimize(objective, x0, settings)
    return TrainedModel(
        kind="basebin", n_qubits=ansatz.n_qubits, n_classes=2,
        encoding=encoding, params=res.x, labels=None, config=config, r=None,
        readouts=qubits, history={"supervised": res.history},
    )


def train_basemea(dataset: RawDataset, n_qubits: int, encoding: EncodingSpec,
                  config: TrainConfig) -> TrainedModel:
    """One-hot multi-qubit readout classifier with truncated pooling."""
    if dataset.n_features != n_qubits:
        raise ValueError("feature dimension must equal the qubit count")
    circuit, readouts = basemea_readouts(n_qubits, dataset.n_classes)
    amps = encode_batch(dataset.features, encoding)
    onehot = -np.ones((len(dataset), dataset.n_classes))
    onehot[np.arange(len(dataset)), dataset.labels] = 1.0
    rng = _shot_rng(config)

    def objective(p):
        z = _z_batch(circuit, p, amps, readouts, config.mode, rng)
        return float(np.mean((z - onehot) ** 2))

    x0 = np.random.default_rng(np.random.SeedSequence(config.seed)).uniform(
        0.0, 2.0 * np.pi, circuit.n_params)
    settings = replace(config.optimizer, max_evals=config.supervised_steps)
    res = minimize(objective, x0, settings)
    return TrainedModel(
        kind="basemea", n_qubits=n_qubits, n_classes=dataset.n_classes,
        encoding=encoding, params=res.x, labels=None, config=config, r=None,
        readouts=readouts, history={"supervised": res.history},
    )


def _baseline_circuit(model: TrainedModel) -> Circuit:
    if model.kind == "basebin":
        return build_qcnn(model.n_qubits).circuit
    if model.kind == "basemea":
        circuit, readouts = basemea_readouts(model.n_qubits, model.n_classes)
        if readouts != model.readouts:
            raise ValueError("stored readouts do not match the rebuilt circuit")
        return circuit
    raise ValueError(f"not a baseline model: {model.kind}")


def evaluate_baseline(model: TrainedModel, dataset: RawDataset, seed=None) -> EvalResult:
    """Accuracy and confusion matrix for a baseline model."""
    circuit = _baseline_circuit(model)
    amps = encode_batch(dataset.features, model.encoding)
    rng = np.random.default_rng(seed) if model.config.mode.shots is not None else None
    z = _z_batch(circuit, model.params, amps, model.readouts, model.config.mode, rng)
    if model.kind == "basebin":
        preds = np.where(z[:, 0] >= 0, 0, 1)
    else:
        preds = np.argmax(z, axis=1)
    k = model.n_classes
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(dataset.labels, preds):
        confusion[t, p] += 1
    blochs = np.zeros((len(dataset), 3))
    blochs[:, 2] = z[:, 0]
    return EvalResult(accuracy=float(np.mean(preds == dataset.labels)),
                      confusion=confusion, predictions=preds, blochs=blochs)
