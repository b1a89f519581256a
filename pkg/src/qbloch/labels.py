"""Correlation-aware variational clustering of readout states into class labels.

Class similarity is measured by the MSE between class-average feature
patterns, min-max scaled so the most dissimilar pair gets weight 1 and the
most similar pair 0.5; diagonal entries get a negative constant so that
minimizing the weighted cosine distance pulls same-class readouts together
and pushes different-class readouts apart, harder for less similar classes.
After training, each class's label is the renormalized centroid of its
readout Bloch vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ansatz import AnsatzSpec, EncodingSpec, encode_batch
from .data import InsufficientDataError, RawDataset
from .simcore import EXACT, RunMode
from .tomography import BlochVector, readout_bloch_batch

__all__ = [
    "DegenerateReadoutError",
    "DegenerateClusterError",
    "PatternSet",
    "ScalerArray",
    "ClusterPairSet",
    "QuantumLabelSet",
    "average_patterns",
    "scaler_array",
    "build_pair_set",
    "cosine_distance",
    "clustering_loss",
    "clustering_objective",
    "compute_quantum_labels",
    "min_label_distance",
    "labels_to_text",
    "labels_from_text",
]


class DegenerateReadoutError(ValueError):
    """A readout Bloch vector has (near-)zero norm, so no direction exists."""


class DegenerateClusterError(ValueError):
    """A class centroid has (near-)zero norm: its readout states cancel out."""


@dataclass(frozen=True)
class PatternSet:
    """One average feature vector per class, stacked (K, d)."""

    patterns: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.patterns, dtype=float)
        if p.ndim != 2 or p.shape[0] < 2:
            raise ValueError("need at least 2 class patterns of equal dimension")
        object.__setattr__(self, "patterns", p)

    @property
    def n_classes(self) -> int:
        return self.patterns.shape[0]


@dataclass(frozen=True)
class ScalerArray:
    """Symmetric class-pair weights: negative diagonal, off-diagonal in [0.5, 1]."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("scaler array must be square")
        if np.max(np.abs(s - s.T)) > 1e-12:
            raise ValueError("scaler array must be symmetric")
        if np.any(np.diag(s) >= 0):
            raise ValueError("scaler diagonal must be negative")
        object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class ClusterPairSet:
    """All unordered pairs over a per-class sample of training instances."""

    features: np.ndarray   # (M, d) selected instances
    classes: np.ndarray    # (M,) class of each instance
    pairs: np.ndarray      # (P, 2) indices into the instance arrays

    def __len__(self) -> int:
        return self.pairs.shape[0]


@dataclass(frozen=True)
class QuantumLabelSet:
    """K unit Bloch vectors, one per class."""

    vectors: np.ndarray  # (K, 3)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 1:
            raise ValueError("labels must be a (K, 3) array")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("every label must have unit norm")
        if v.shape[0] >= 2:
            dots = np.clip(v @ v.T, -1.0, 1.0)
            dist = 1.0 - dots
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= 1e-6:
                raise ValueError("labels must be pairwise distinct directions")
        object.__setattr__(self, "vectors", v)

    @property
    def n_classes(self) -> int:
        return self.vectors.shape[0]

    def label(self, k: int) -> BlochVector:
        return BlochVector.from_array(self.vectors[k])


def average_patterns(dataset: RawDataset) -> PatternSet:
    """Elementwise mean feature vector of each class."""
    rows = []
    for k in range(dataset.n_classes):
        idx = dataset.class_indices(k)
        if idx.size == 0:
            raise InsufficientDataError(f"class {k} has no instances")
        rows.append(dataset.features[idx].mean(axis=0))
    return PatternSet(np.stack(rows))


def scaler_array(patterns: PatternSet, diag: float = -1.0) -> ScalerArray:
    """Pairwise-MSE weights, off-diagonals min-max scaled into [0.5, 1].

    The largest MSE (least similar pair) maps to 1 and the smallest to 0.5;
    if all off-diagonal MSEs coincide they all map to 1.
    """
    if diag >= 0:
        raise ValueError("diagonal constant must be negative")
    p = patterns.patterns
    k = patterns.n_classes
    diff = p[:, None, :] - p[None, :, :]
    mse = np.mean(diff**2, axis=2)
    off = ~np.eye(k, dtype=bool)
    vals = mse[off]
    lo, hi = vals.min(), vals.max()
    s = np.empty((k, k))
    if hi - lo <= 0:
        s[off] = 1.0
    else:
        s[off] = 0.5 + 0.5 * (mse[off] - lo) / (hi - lo)
    s[~off] = diag
    return ScalerArray(s)


def build_pair_set(dataset: RawDataset, per_class: int = 5, seed: int = 0) -> ClusterPairSet:
    """Sample ``per_class`` instances per class and pair all of them up.

    The result holds every unordered pair among the K*per_class selected
    instances, so its size is C(K*per_class, 2).
    """
    rng = np.random.default_rng(seed)
    feats, classes = [], []
    for k in range(dataset.n_classes):
        idx = dataset.class_indices(k)
        if idx.size < per_class:
            raise InsufficientDataError(
                f"class {k} has {idx.size} instances, need {per_class}"
            )
        pick = rng.choice(idx, size=per_class, replace=False)
        feats.append(dataset.features[pick])
        classes.append(np.full(per_class, k))
    features = np.concatenate(feats)
    classes = np.concatenate(classes)
    pairs = np.array(list(combinations(range(len(classes)), 2)), dtype=int)
    return ClusterPairSet(features=features, classes=classes, pairs=pairs)


def _as_vec(v) -> np.ndarray:
    return v.as_array() if isinstance(v, BlochVector) else np.asarray(v, dtype=float)


def cosine_distance(v1, v2) -> float:
    """1 - cos(angle between the vectors); ranges over [0, 2]."""
    a, b = _as_vec(v1), _as_vec(v2)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na <= 1e-9 or nb <= 1e-9:
        raise DegenerateReadoutError("cannot take a direction of a ~zero vector")
    return float(1.0 - np.dot(a, b) / (na * nb))


def clustering_loss(scaler: ScalerArray, i: int, j: int, vi, vj) -> float:
    """Weighted pair loss: -S[i, j] * distance(vi, vj).

    Nonnegative for same-class pairs (pulls together under minimization),
    nonpositive across classes (pushes apart, scaled by the pair weight).
    """
    k = scaler.s.shape[0]
    if not (0 <= i < k and 0 <= j < k):
        raise ValueError("class index out of range")
    return float(-scaler.s[i, j] * cosine_distance(vi, vj))


def _pair_blochs(params, features, ansatz: AnsatzSpec, encoding: EncodingSpec,
                 mode: RunMode, seed=None) -> np.ndarray:
    amps = encode_batch(features, encoding)
    return readout_bloch_batch(ansatz.circuit, params, amps, ansatz.readout, mode, seed)


def clustering_objective(params, pair_set: ClusterPairSet, scaler: ScalerArray,
                         ansatz: AnsatzSpec, encoding: EncodingSpec,
                         mode: RunMode = EXACT, seed=None) -> float:
    """Mean weighted pair loss over the clustering pair set.

    Each selected instance's Bloch vector is measured once per evaluation and
    shared across the pairs containing it; in exact mode this is identical to
    measuring per pair.
    """
    v = _pair_blochs(params, pair_set.features, ansatz, encoding, mode, seed)
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms <= 1e-9):
        raise DegenerateReadoutError("a readout state has ~zero Bloch norm")
    unit = v / norms[:, None]
    a, b = pair_set.pairs[:, 0], pair_set.pairs[:, 1]
    dist = 1.0 - np.sum(unit[a] * unit[b], axis=1)
    weights = scaler.s[pair_set.classes[a], pair_set.classes[b]]
    return float(np.mean(-weights * dist))


def compute_quantum_labels(params, dataset: RawDataset, per_class_eval: int,
                           ansatz: AnsatzSpec, encoding: EncodingSpec,
                           mode: RunMode = EXACT, seed_instances: int = 0,
                           seed_shots=None) -> QuantumLabelSet:
    """Renormalized per-class centroid of readout Bloch vectors.

    ``per_class_eval`` instances per class are drawn deterministically with
    ``seed_instances`` (pass a pre-selected dataset and per_class_eval equal
    to its class size to reuse specific instances).
    """
    rng = np.random.default_rng(seed_instances)
    rows = []
    for k in range(dataset.n_classes):
        idx = dataset.class_indices(k)
        if idx.size < per_class_eval:
            raise InsufficientDataError(
                f"class {k} has {idx.size} instances, need {per_class_eval}"
            )
        if idx.size == per_class_eval:
            pick = idx
        else:
            pick = rng.choice(idx, size=per_class_eval, replace=False)
        v = _pair_blochs(params, dataset.features[pick], ansatz, encoding, mode, seed_shots)
        centroid = v.mean(axis=0)
        norm = np.linalg.norm(centroid)
        if norm <= 1e-9:
            raise DegenerateClusterError(
                f"class {k} centroid is ~zero: its readout states cancel out"
            )
        rows.append(centroid / norm)
    return QuantumLabelSet(np.stack(rows))


def min_label_distance(labels: QuantumLabelSet) -> float:
    """Smallest pairwise cosine distance between class labels."""
    v = labels.vectors
    if v.shape[0] < 2:
        raise ValueError("need at least 2 labels")
    dist = 1.0 - v @ v.T
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def labels_to_text(labels: QuantumLabelSet) -> str:
    """Plain-text rows 'class_index rx ry rz' for offline plotting."""
    lines = []
    for k, (rx, ry, rz) in enumerate(labels.vectors):
        lines.append(f"{k} {float(rx)!r} {float(ry)!r} {float(rz)!r}")
    return "\n".join(lines) + "\n"


def labels_from_text(text: str) -> QuantumLabelSet:
    rows = []
    for line in text.strip().splitlines():
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"bad label row: {line!r}")
        rows.append([float(v) for v in fields[1:]])
    return QuantumLabelSet(np.array(rows))
