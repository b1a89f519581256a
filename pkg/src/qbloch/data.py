"""Dataset ingestion, PCA reduction, normalization, and deterministic splits.

Loaders cover the two file formats the pipeline consumes: a plain CSV with
four numeric fields plus a class name per row (the classic iris layout), and
the big-endian IDX image/label pair used by the MNIST distribution.  PCA is
fitted on training data only; projections are min-max scaled to [0, 1] with
ranges frozen from the training projection, and out-of-range test values are
clamped (encoding needs bounded angles).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "DataFormatError",
    "InsufficientDataError",
    "RawDataset",
    "PcaModel",
    "bundled_iris_path",
    "load_iris",
    "load_mnist",
    "subsample",
    "minmax_fit",
    "pca_fit",
    "pca_transform",
    "apply_pca",
    "save_pca",
    "load_pca",
]


class DataFormatError(ValueError):
    """A data file is malformed or inconsistent."""


class InsufficientDataError(ValueError):
    """A split or sampling request exceeds the available instances."""


IRIS_CLASS_NAMES = ("Iris-setosa", "Iris-versicolor", "Iris-virginica")


@dataclass(frozen=True)
class RawDataset:
    """Feature matrix plus integer class labels in [0, n_classes)."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if feats.ndim != 2 or labels.ndim != 1 or feats.shape[0] != labels.shape[0]:
            raise ValueError("features must be (N, d) with matching (N,) labels")
        if feats.shape[0] == 0:
            raise DataFormatError("dataset is empty")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise ValueError("labels outside [0, n_classes)")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_indices(self, k: int) -> np.ndarray:
        return np.nonzero(self.labels == k)[0]


def bundled_iris_path() -> Path:
    """Path of the iris CSV shipped with the package."""
    return Path(resources.files("qbloch").joinpath("datasets/iris.csv"))


def load_iris(path) -> RawDataset:
    """Parse a CSV of four numeric fields plus a class name per row."""
    names = {}
    for k, name in enumerate(IRIS_CLASS_NAMES):
        names[name] = k
        names[name.split("-", 1)[1]] = k
    rows, labels = [], []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 5 comma-separated fields, got {len(fields)}"
                )
            try:
                rows.append([float(v) for v in fields[:4]])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric feature") from exc
            cls = fields[4].strip()
            if cls not in names:
                raise DataFormatError(f"{path}:{lineno}: unknown class name {cls!r}")
            labels.append(names[cls])
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return RawDataset(np.array(rows), np.array(labels), n_classes=3)


def _read_idx(path, expected_magic: int) -> tuple[np.ndarray, tuple[int, ...]]:
    with open(path, "rb") as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise DataFormatError(f"{path}: truncated IDX header")
        (magic,) = struct.unpack(">I", header)
        if magic != expected_magic:
            raise DataFormatError(
                f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
            )
        ndim = magic & 0xFF
        dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    if data.size != int(np.prod(dims)):
        raise DataFormatError(f"{path}: payload size does not match header dims {dims}")
    return data, dims


def load_mnist(images_path, labels_path) -> RawDataset:
    """Load an IDX image/label file pair; pixels are scaled to [0, 1]."""
    images, idims = _read_idx(images_path, 0x00000803)
    labels, ldims = _read_idx(labels_path, 0x00000801)
    if idims[0] != ldims[0]:
        raise DataFormatError(
            f"image count {idims[0]} does not match label count {ldims[0]}"
        )
    feats = images.reshape(idims[0], -1).astype(float) / 255.0
    labels = labels.astype(int)
    return RawDataset(feats, labels, n_classes=int(labels.max()) + 1)


def subsample(dataset: RawDataset, per_class_train: int, per_class_test: int,
              classes=None, seed: int = 0) -> tuple[RawDataset, RawDataset]:
    """Disjoint per-class train/test draw, deterministic for a given seed.

    ``classes`` selects and re-labels a subset of classes (sorted order maps
    to 0..K-1); by default all classes are kept.
    """
    if classes is None:
        classes = list(range(dataset.n_classes))
    else:
        classes = sorted(int(c) for c in classes)
        if len(set(classes)) != len(classes):
            raise ValueError("duplicate classes in subset")
        if classes and (classes[0] < 0 or classes[-1] >= dataset.n_classes):
            raise ValueError("class subset outside [0, n_classes)")
    rng = np.random.default_rng(seed)
    tr_idx, te_idx, tr_lab, te_lab = [], [], [], []
    for new_k, k in enumerate(classes):
        idx = dataset.class_indices(k)
        need = per_class_train + per_class_test
        if idx.size < need:
            raise InsufficientDataError(
                f"class {k} has {idx.size} instances, need {need}"
            )
        perm = rng.permutation(idx)
        tr_idx.append(perm[:per_class_train])
        te_idx.append(perm[per_class_train:need])
        tr_lab.append(np.full(per_class_train, new_k))
        te_lab.append(np.full(per_class_test, new_k))
    train = RawDataset(dataset.features[np.concatenate(tr_idx)],
                       np.concatenate(tr_lab), n_classes=len(classes))
    test = RawDataset(dataset.features[np.concatenate(te_idx)],
                      np.concatenate(te_lab), n_classes=len(classes))
    return train, test


# ---------------------------------------------------------------------------
# PCA via Jacobi rotations


def _round_robin_rounds(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: d-1 rounds of pairwise-disjoint index pairs."""
    players = list(range(d)) + ([d] if d % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            x, y = players[i], players[m - 1 - i]
            if x != d and y != d:
                ps.append(min(x, y))
                qs.append(max(x, y))
        rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigen-decomposition of a real symmetric matrix by Jacobi rotations.

    Rotations are applied in round-robin rounds of disjoint index pairs so
    each round is one vectorized update; within a round the rotations commute
    because no two pairs share an index.  Each sweep only rotates pairs whose
    off-diagonal entry exceeds a threshold tied to the current off-diagonal
    norm, which leaves convergence intact (every rotation strictly shrinks
    the off-norm) while skipping useless work.  Returns (eigenvalues,
    eigenvectors) sorted by descending eigenvalue, eigenvectors in columns.
    """
    a = np.array(a, dtype=float)
    d = a.shape[0]
    if a.shape != (d, d) or np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("jacobi_eigh expects a symmetric square matrix")
    v = np.eye(d)
    if d == 1:
        return np.diag(a).copy(), v
    scale = max(np.max(np.abs(a)), 1e-300)
    rounds = _round_robin_rounds(d)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.square(a - np.diag(np.diag(a)))))
        if off <= tol * scale * d:
            break
        tau = off / (4.0 * d)
        for p_all, q_all in rounds:
            apq = a[p_all, q_all]
            live = np.abs(apq) > tau
            if not np.any(live):
                continue
            p, q = p_all[live], q_all[live]
            apq = apq[live]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.where(
                theta == 0.0, 1.0,
                np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0)),
            )
            c = 1.0 / np.hypot(t, 1.0)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * cp - s * cq
            a[:, q] = s * cp + c * cq
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    eigvals = np.diag(a).copy()
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], v[:, order]


@dataclass(frozen=True)
class PcaModel:
    """Projection onto the top principal directions plus frozen [0, 1] ranges."""

    mean: np.ndarray
    components: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def minmax_fit(features: np.ndarray) -> PcaModel:
    """Identity projection with min-max ranges only (no rotation).

    For datasets whose native dimension already matches the qubit count,
    skipping the PCA rotation keeps each feature on its own qubit.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("minmax_fit needs at least 2 instances")
    d = x.shape[1]
    return PcaModel(mean=np.zeros(d), components=np.eye(d),
                    lo=x.min(axis=0), hi=x.max(axis=0))


def pca_fit(features: np.ndarray, m: int) -> PcaModel:
    """Top-m principal directions of the training features.

    Covariance uses the 1/(N-1) estimator; each component's sign is fixed so
    its largest-magnitude entry is positive.  The min-max ranges of the
    training projection are stored for later normalization.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca_fit needs at least 2 instances")
    n, d = x.shape
    if not 1 <= m <= d:
        raise ValueError(f"cannot keep {m} components of {d}-dim data")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (n - 1)
    _, vecs = jacobi_eigh(cov)
    comps = vecs[:, :m].T.copy()
    for row in comps:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1.0
    proj = xc @ comps.T
    return PcaModel(mean=mean, components=comps,
                    lo=proj.min(axis=0), hi=proj.max(axis=0))


def pca_transform(model: PcaModel, features: np.ndarray) -> np.ndarray:
    """Project and min-max scale to [0, 1]; out-of-range values are clamped."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"expected {model.mean.shape[0]}-dim features, got {x.shape[1]}"
        )
    proj = (x - model.mean) @ model.components.T
    span = model.hi - model.lo
    span = np.where(span > 0, span, 1.0)
    out = np.clip((proj - model.lo) / span, 0.0, 1.0)
    return out[0] if single else out


def apply_pca(model: PcaModel, dataset: RawDataset) -> RawDataset:
    """Convenience: transform a whole dataset, keeping its labels."""
    return RawDataset(pca_transform(model, dataset.features), dataset.labels,
                      dataset.n_classes)


def save_pca(model: PcaModel, path, header_lines=()) -> None:
    """Plain-text projection file: mean row, component rows, range rows.

    Floats are written with repr so they round-trip exactly.
    """
    lines = list(header_lines)
    lines.append(f"pca {model.components.shape[0]} {model.components.shape[1]}")
    for row in (model.mean[None, :], model.components,
                model.lo[None, :], model.hi[None, :]):
        for r in row:
            lines.append(" ".join(repr(float(v)) for v in r))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_pca(path) -> PcaModel:
    lines = [l for l in Path(path).read_text(encoding="ascii").splitlines()
             if l and not l.startswith("#")]
    if not lines or not lines[0].startswith("pca "):
        raise DataFormatError(f"{path}: not a projection file")
    m, d = (int(v) for v in lines[0].split()[1:])
    if len(lines) != 1 + m + 3:
        raise DataFormatError(f"{path}: inconsistent projection file")
    vals = [np.array([float(v) for v in line.split()]) for line in lines[1:]]
    mean = vals[0]
    comps = np.stack(vals[1: 1 + m])
    lo, hi = vals[1 + m], vals[2 + m]
    if mean.shape != (d,) or comps.shape != (m, d) or lo.shape != (m,):
        raise DataFormatError(f"{path}: inconsistent projection file")
    return PcaModel(mean=mean, components=comps, lo=lo, hi=hi)
