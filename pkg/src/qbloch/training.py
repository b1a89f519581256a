"""Label-supervised training, gradient-free optimization, prediction, evaluation.

The second training step starts from the clustering parameters and pulls each
readout state toward its class label by minimizing cosine distance.  When the
readout already sits within a radius ``r`` of its correct label, wrong labels
inside that same radius contribute a subtracted crowding term, so minimizing
the combined loss simultaneously pushes the readout away from nearby wrong
labels.  A weight ``w`` balances the two terms; ``w = 1`` disables the
crowding term entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.optimize

from .ansatz import AnsatzSpec, EncodingSpec, build_qcnn, encode_batch
from .data import RawDataset
from .labels import (
    DegenerateReadoutError,
    QuantumLabelSet,
    build_pair_set,
    clustering_objective,
    compute_quantum_labels,
    cosine_distance,
    min_label_distance,
    scaler_array,
    average_patterns,
)
from .simcore import EXACT, NoiseSpec, RunMode
from .tomography import readout_bloch_batch

__all__ = [
    "OptimizerSettings",
    "TrainConfig",
    "TrainedModel",
    "MinimizeResult",
    "ClusteringResult",
    "EvalResult",
    "supervised_loss",
    "adjuster",
    "combined_loss",
    "supervised_objective",
    "minimize",
    "nearest_label_accuracy",
    "train_clustering",
    "train_supervised",
    "train_two_step",
    "predict",
    "evaluate",
    "suggest_r",
    "save_model",
    "load_model",
    "mode_to_string",
    "mode_from_string",
]


# ---------------------------------------------------------------------------
# losses


def supervised_loss(v, y) -> float:
    """Cosine distance between a readout vector and its class label."""
    return cosine_distance(v, y)


def adjuster(v, labels: QuantumLabelSet, correct_k: int, r: float) -> float:
    """Crowding term: summed distances to wrong labels within radius ``r``.

    Active only once the readout is itself within ``r`` of its correct
    label; otherwise 0.  The correct label never contributes.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if not 0 <= correct_k < labels.n_classes:
        raise ValueError("correct_k out of range")
    if cosine_distance(v, labels.vectors[correct_k]) > r:
        return 0.0
    total = 0.0
    for k in range(labels.n_classes):
        if k == correct_k:
            continue
        d = cosine_distance(labels.vectors[k], v)
        if d <= r:
            total += d
    return total


def combined_loss(v, labels: QuantumLabelSet, correct_k: int, r: float, w: float) -> float:
    """w * supervised_loss - (1 - w) * adjuster; may be negative."""
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must be in [0, 1]")
    lsup = supervised_loss(v, labels.vectors[correct_k])
    if w == 1.0:
        return w * lsup
    return w * lsup - (1.0 - w) * adjuster(v, labels, correct_k, r)


def _bloch_batch(params, features, ansatz: AnsatzSpec, encoding: EncodingSpec,
                 mode: RunMode, seed=None) -> np.ndarray:
    amps = encode_batch(features, encoding)
    return readout_bloch_batch(ansatz.circuit, params, amps, ansatz.readout, mode, seed)


def _unit_rows(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms <= 1e-9):
        raise DegenerateReadoutError("a readout state has ~zero Bloch norm")
    return v / norms[:, None]


def supervised_objective(params, features, targets, labels: QuantumLabelSet,
                         r: float, w: float, ansatz: AnsatzSpec,
                         encoding: EncodingSpec, mode: RunMode = EXACT,
                         seed=None) -> float:
    """Mean combined loss over a training batch (full-batch, deterministic)."""
    targets = np.asarray(targets, dtype=int)
    unit = _unit_rows(_bloch_batch(params, features, ansatz, encoding, mode, seed))
    dist = 1.0 - unit @ labels.vectors.T          # (N, K)
    n = dist.shape[0]
    lsup = dist[np.arange(n), targets]
    if w == 1.0:
        return float(np.mean(lsup))
    active = lsup <= r
    within = dist <= r
    within[np.arange(n), targets] = False
    crowd = np.sum(dist * within, axis=1) * active
    return float(np.mean(w * lsup - (1.0 - w) * crowd))


# ---------------------------------------------------------------------------
# gradient-free minimization (COBYLA behind a budgeted, history-keeping wrapper)


@dataclass(frozen=True)
class OptimizerSettings:
    """Initial trust-region step, final tolerance, and evaluation budget.

    ``rhobeg`` is the initial step for fresh starts; ``rhobeg_warm`` is the
    smaller step used when fine-tuning from already-trained parameters.
    """

    rhobeg: float = 0.5
    rhobeg_warm: float = 0.2
    tol: float = 1e-6
    max_evals: int = 300

    def __post_init__(self):
        if self.rhobeg <= 0 or self.rhobeg_warm <= 0 or self.tol <= 0 or self.max_evals < 1:
            raise ValueError("invalid optimizer settings")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    history: list[float]
    n_evals: int
    budget_exhausted: bool


class _BudgetExhausted(Exception):
    pass


def minimize(objective, x0, settings: OptimizerSettings = OptimizerSettings()) -> MinimizeResult:
    """Derivative-free trust-region minimization with a hard evaluation budget.

    Deterministic for a given x0 and settings.  Every objective evaluation is
    recorded; the best point seen is returned even if the budget runs out
    mid-search (flagged via ``budget_exhausted``).
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.isfinite(float(objective(x0))):
        raise ValueError("objective is not finite at x0")
    history: list[float] = []
    best = {"f": np.inf, "x": x0.copy()}

    def wrapped(x):
        # Safety net: scipy's COBYLA already stops at maxiter evaluations.
        if len(history) >= settings.max_evals:
            raise _BudgetExhausted
        f = float(objective(np.asarray(x, dtype=float)))
        history.append(f)
        if f < best["f"]:
            best["f"] = f
            best["x"] = np.array(x, dtype=float)
        return f

    try:
        scipy.optimize.minimize(
            wrapped, x0, method="COBYLA", tol=settings.tol,
            options={"rhobeg": settings.rhobeg, "maxiter": settings.max_evals},
        )
    except _BudgetExhausted:
        pass
    return MinimizeResult(
        x=best["x"], fun=best["f"], history=history,
        n_evals=len(history), budget_exhausted=len(history) >= settings.max_evals,
    )


# ---------------------------------------------------------------------------
# configuration and the trained-model record


@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to reproduce a training run from a seed."""

    r: float | None = None          # None: derive from the trained labels
    w: float = 0.3
    cluster_steps: int = 300
    supervised_steps: int = 300
    mode: RunMode = EXACT
    seed: int = 0
    optimizer: OptimizerSettings = OptimizerSettings()
    per_class_pairs: int = 5
    scaler_diag: float = -1.0
    cluster_restarts: int = 6

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must be in [0, 1]")
        if self.r is not None and self.r < 0:
            raise ValueError("r must be >= 0")
        if self.cluster_steps < 1 or self.supervised_steps < 1:
            raise ValueError("step budgets must be >= 1")
        if self.per_class_pairs < 2:
            raise ValueError("per_class_pairs must be >= 2")
        if self.scaler_diag >= 0:
            raise ValueError("scaler_diag must be negative")
        if self.cluster_restarts < 1:
            raise ValueError("cluster_restarts must be >= 1")


@dataclass
class TrainedModel:
    """Ansatz description, optimized parameters, labels, and configuration."""

    kind: str                       # 'bloch', 'basebin', or 'basemea'
    n_qubits: int
    n_classes: int
    encoding: EncodingSpec
    params: np.ndarray
    labels: QuantumLabelSet | None
    config: TrainConfig
    r: float | None
    readouts: tuple[int, ...]
    history: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)

    def ansatz(self) -> AnsatzSpec:
        if self.kind in ("bloch", "basebin"):
            spec = build_qcnn(self.n_qubits)
            if spec.n_params != self.params.shape[0]:
                raise ValueError("stored parameters do not fit the ansatz")
            return spec
        raise ValueError(f"{self.kind} models have multiple readouts; use baselines")


# ---------------------------------------------------------------------------
# two-step training


def _shot_seed(rng_source: np.random.Generator | None):
    if rng_source is None:
        return None
    return int(rng_source.integers(2**63))


# Restarts scoring within this accuracy band of the best are considered tied
# and the one with the widest label separation is preferred.
_SCORE_BAND = 0.02


@dataclass
class ClusteringResult:
    params: np.ndarray
    labels: QuantumLabelSet
    scaler: np.ndarray
    pair_features: np.ndarray
    pair_classes: np.ndarray
    history: list[float]
    restart_scores: list[float]


def nearest_label_accuracy(params, labels: QuantumLabelSet, dataset: RawDataset,
                           ansatz: AnsatzSpec, encoding: EncodingSpec,
                           mode: RunMode = EXACT, seed=None) -> float:
    """Fraction of instances whose readout is nearest its own class label."""
    unit = _unit_rows(_bloch_batch(params, dataset.features, ansatz, encoding,
                                   mode, seed))
    preds = np.argmin(1.0 - unit @ labels.vectors.T, axis=1)
    return float(np.mean(preds == dataset.labels))


def train_clustering(dataset: RawDataset, ansatz: AnsatzSpec,
                     encoding: EncodingSpec, config: TrainConfig) -> ClusteringResult:
    """First step: cluster readout states by weighted pairwise cosine distance.

    The weighted objective barely distinguishes well-spread label geometries
    from ones where correlated classes collapse onto a single direction, so a
    single run is unreliable.  ``config.cluster_restarts`` independent runs
    are made from fresh uniform starts in [0, 2*pi).  The winner is chosen by
    nearest-label accuracy on the training set; among restarts within one or
    two misclassifications of the best, the most separated label set wins
    (larger minimum label distance means larger decision margins).  Labels
    are the renormalized centroids over the sampled pairing instances.
    """
    scaler = scaler_array(average_patterns(dataset), diag=config.scaler_diag)
    settings = replace(config.optimizer, max_evals=config.cluster_steps)
    candidates = []
    scores: list[float] = []
    for restart_ss in np.random.SeedSequence(config.seed).spawn(config.cluster_restarts):
        pair_ss, init_ss, shot_ss = restart_ss.spawn(3)
        pair_set = build_pair_set(dataset, config.per_class_pairs, seed=pair_ss)
        x0 = np.random.default_rng(init_ss).uniform(0.0, 2.0 * np.pi, ansatz.n_params)
        shot_rng = np.random.default_rng(shot_ss) if config.mode.shots is not None else None

        def objective(p):
            return clustering_objective(p, pair_set, scaler, ansatz, encoding,
                                        config.mode, seed=_shot_seed(shot_rng))

        res = minimize(objective, x0, settings)
        selected = RawDataset(pair_set.features, pair_set.classes, dataset.n_classes)
        try:
            labels = compute_quantum_labels(
                res.x, selected, config.per_class_pairs, ansatz, encoding,
                config.mode, seed_shots=_shot_seed(shot_rng),
            )
        except (DegenerateReadoutError, ValueError):
            scores.append(-1.0)
            continue
        score = nearest_label_accuracy(res.x, labels, dataset, ansatz, encoding,
                                       config.mode, seed=_shot_seed(shot_rng))
        scores.append(score)
        candidates.append((score, min_label_distance(labels), ClusteringResult(
            params=res.x, labels=labels, scaler=scaler.s,
            pair_features=pair_set.features, pair_classes=pair_set.classes,
            history=res.history, restart_scores=[],
        )))
    if not candidates:
        raise DegenerateReadoutError(
            "every clustering restart produced degenerate labels"
        )
    best_score = max(score for score, _, _ in candidates)
    qualified = [c for c in candidates if c[0] >= best_score - _SCORE_BAND]
    result = max(qualified, key=lambda c: c[1])[2]
    result.restart_scores = scores
    return result


def train_supervised(dataset: RawDataset, params0, labels: QuantumLabelSet,
                     ansatz: AnsatzSpec, encoding: EncodingSpec,
                     config: TrainConfig) -> TrainedModel:
    """Second step: fine-tune from the clustering parameters on the full set."""
    sup_ss = np.random.SeedSequence((config.seed, 1))
    shot_rng = np.random.default_rng(sup_ss) if config.mode.shots is not None else None
    r = config.r if config.r is not None else suggest_r(labels)

    def objective(p):
        return supervised_objective(p, dataset.features, dataset.labels, labels,
                                    r, config.w, ansatz, encoding, config.mode,
                                    seed=_shot_seed(shot_rng))

    settings = replace(config.optimizer, max_evals=config.supervised_steps,
                       rhobeg=config.optimizer.rhobeg_warm)
    res = minimize(objective, np.asarray(params0, dtype=float), settings)
    return TrainedModel(
        kind="bloch", n_qubits=ansatz.n_qubits, n_classes=labels.n_classes,
        encoding=encoding, params=res.x, labels=labels, config=config, r=r,
        readouts=(ansatz.readout,), history={"supervised": res.history},
    )


def train_two_step(dataset: RawDataset, ansatz: AnsatzSpec,
                   encoding: EncodingSpec, config: TrainConfig):
    """Run clustering then supervised fine-tuning; returns (clustering, model)."""
    clust = train_clustering(dataset, ansatz, encoding, config)
    model = train_supervised(dataset, clust.params, clust.labels, ansatz,
                             encoding, config)
    model.history["clustering"] = clust.history
    return clust, model


# ---------------------------------------------------------------------------
# inference


def predict(model: TrainedModel, features, seed=None) -> int:
    """Class of the nearest label by cosine distance; ties go to the smaller index."""
    dist = label_distances(model, features, seed=seed)
    return int(np.argmin(dist))


def label_distances(model: TrainedModel, features, seed=None) -> np.ndarray:
    """Cosine distances from one instance's readout to every class label."""
    features = np.asarray(features, dtype=float)
    if features.shape != (model.n_qubits,):
        raise ValueError(
            f"expected {model.n_qubits} features, got {features.shape}"
        )
    ansatz = model.ansatz()
    v = _bloch_batch(model.params, features[None, :], ansatz, model.encoding,
                     model.config.mode, seed=seed)
    unit = _unit_rows(v)
    return 1.0 - (unit @ model.labels.vectors.T)[0]


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray           # confusion[true, predicted]
    predictions: np.ndarray
    blochs: np.ndarray              # raw readout vectors, (N, 3)


def evaluate(model: TrainedModel, dataset: RawDataset, seed=None) -> EvalResult:
    """Accuracy and confusion matrix of a model over a labeled dataset."""
    ansatz = model.ansatz()
    v = _bloch_batch(model.params, dataset.features, ansatz, model.encoding,
                     model.config.mode, seed=seed)
    unit = _unit_rows(v)
    dist = 1.0 - unit @ model.labels.vectors.T
    preds = np.argmin(dist, axis=1)
    k = model.n_classes
    confusion = np.zeros((k, k), dtype=int)
    for t, p in zip(dataset.labels, preds):
        confusion[t, p] += 1
    return EvalResult(
        accuracy=float(np.mean(preds == dataset.labels)),
        confusion=confusion, predictions=preds, blochs=v,
    )


def suggest_r(labels: QuantumLabelSet) -> float:
    """Default crowding radius: 1.5x the smallest label separation."""
    return 1.5 * min_label_distance(labels)


# ---------------------------------------------------------------------------
# persistence (versioned plain text; parameters round-trip bit-exactly)


def mode_to_string(mode: RunMode) -> str:
    parts = []
    if mode.noise is not None:
        parts.append(
            f"noisy {mode.noise.p_depol_1q!r} {mode.noise.p_depol_2q!r} "
            f"{mode.noise.p_meas_flip!r}"
        )
    if mode.shots is not None:
        parts.append(f"shots {mode.shots}")
    return " ".join(parts) if parts else "exact"


def mode_from_string(text: str) -> RunMode:
    fields = text.split()
    if fields == ["exact"]:
        return EXACT
    shots = None
    noise = None
    i = 0
    while i < len(fields):
        if fields[i] == "noisy":
            noise = NoiseSpec(float(fields[i + 1]), float(fields[i + 2]),
                              float(fields[i + 3]))
            i += 4
        elif fields[i] == "shots":
            shots = int(fields[i + 1])
            i += 2
        else:
            raise ValueError(f"bad mode string {text!r}")
    return RunMode(shots=shots, noise=noise)


_FORMAT_HEADER = "qbloch model v1"


def save_model(model: TrainedModel, path) -> None:
    lines = [
        _FORMAT_HEADER,
        f"kind {model.kind}",
        f"n_qubits {model.n_qubits}",
        f"n_classes {model.n_classes}",
        f"readouts {' '.join(str(q) for q in model.readouts)}",
        f"encoding {model.encoding.kind} {model.encoding.scale!r}",
        f"r {'auto' if model.r is None else repr(model.r)}",
        f"config.w {model.config.w!r}",
        f"config.r {'auto' if model.config.r is None else repr(model.config.r)}",
        f"config.cluster_steps {model.config.cluster_steps}",
        f"config.supervised_steps {model.config.supervised_steps}",
        f"config.mode {mode_to_string(model.config.mode)}",
        f"config.seed {model.config.seed}",
        f"config.optimizer.rhobeg {model.config.optimizer.rhobeg!r}",
        f"config.optimizer.rhobeg_warm {model.config.optimizer.rhobeg_warm!r}",
        f"config.optimizer.tol {model.config.optimizer.tol!r}",
        f"config.per_class_pairs {model.config.per_class_pairs}",
        f"config.scaler_diag {model.config.scaler_diag!r}",
        f"config.cluster_restarts {model.config.cluster_restarts}",
        f"params {model.params.shape[0]}",
    ]
    lines.extend(repr(float(p)) for p in model.params)
    if model.labels is not None:
        lines.append(f"labels {model.labels.n_classes}")
        for k, (rx, ry, rz) in enumerate(model.labels.vectors):
            lines.append(f"{k} {float(rx)!r} {float(ry)!r} {float(rz)!r}")
    else:
        lines.append("labels 0")
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path) -> TrainedModel:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text or text[0] != _FORMAT_HEADER:
        raise ValueError(f"{path}: not a qbloch model file")
    kv = {}
    i = 1
    while i < len(text) and not text[i].startswith("params "):
        key, _, value = text[i].partition(" ")
        kv[key] = value
        i += 1
    n_params = int(text[i].split()[1])
    i += 1
    params = np.array([float(v) for v in text[i : i + n_params]])
    i += n_params
    n_labels = int(text[i].split()[1])
    i += 1
    labels = None
    if n_labels:
        rows = []
        for line in text[i : i + n_labels]:
            rows.append([float(v) for v in line.split()[1:]])
        labels = QuantumLabelSet(np.array(rows))
        i += n_labels
    if i >= len(text) or text[i] != "end":
        raise ValueError(f"{path}: truncated model file")
    enc_kind, enc_scale = kv["encoding"].split()
    config = TrainConfig(
        r=None if kv["config.r"] == "auto" else float(kv["config.r"]),
        w=float(kv["config.w"]),
        cluster_steps=int(kv["config.cluster_steps"]),
        supervised_steps=int(kv["config.supervised_steps"]),
        mode=mode_from_string(kv["config.mode"]),
        seed=int(kv["config.seed"]),
        optimizer=OptimizerSettings(
            rhobeg=float(kv["config.optimizer.rhobeg"]),
            rhobeg_warm=float(kv["config.optimizer.rhobeg_warm"]),
            tol=float(kv["config.optimizer.tol"]),
        ),
        per_class_pairs=int(kv["config.per_class_pairs"]),
        scaler_diag=float(kv["config.scaler_diag"]),
        cluster_restarts=int(kv["config.cluster_restarts"]),
    )
    return TrainedModel(
        kind=kv["kind"],
        n_qubits=int(kv["n_qubits"]),
        n_classes=int(kv["n_classes"]),
        encoding=EncodingSpec(enc_kind, float(enc_scale)),
        params=params,
        labels=labels,
        config=config,
        r=None if kv["r"] == "auto" else float(kv["r"]),
        readouts=tuple(int(q) for q in kv["readouts"].split()),
    )
