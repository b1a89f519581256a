"""Command-line driver for the full pipeline.

Subcommands mirror the pipeline stages: ``prepare`` (load, split, reduce,
normalize), ``cluster`` (learn labels), ``train`` (supervised fine-tune),
``eval``, ``predict``, ``labels`` (inspect label geometry), and ``baseline``.
Configuration is a flat key=value file with command-line overrides
(flag > file > default); every output artifact echoes the configuration it
was produced with.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import data as dt
from . import labels as lb
from . import training as tr
from .ansatz import EncodingSpec, build_qcnn
from .simcore import EXACT, NoiseSpec, RunMode

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exit code 1."""

    def error(self, message):
        raise UsageError(message)


# Every recognized configuration key with its parser and default.
_CONFIG_SCHEMA = {
    "dataset": (str, "iris"),              # iris | mnist
    "iris_path": (str, ""),                # empty: bundled copy
    "mnist_images": (str, ""),
    "mnist_labels": (str, ""),
    "classes": (str, ""),                  # e.g. "0,1,2"; empty: all
    "per_class_train": (int, 35),
    "per_class_test": (int, 15),
    "pca_dim": (int, 0),                   # 0: min-max only, no rotation
    "n_qubits": (int, 4),
    "scale": (float, float(np.pi)),
    "per_class_pairs": (int, 5),
    "scaler_diag": (float, -1.0),
    "cluster_steps": (int, 300),
    "cluster_restarts": (int, 6),
    "supervised_steps": (int, 300),
    "w": (float, 0.3),
    "r": (str, "auto"),                    # auto | float
    "mode": (str, "exact"),                # exact | shots | noisy | noisy_shots
    "shots": (int, 1024),
    "p_depol_1q": (float, 0.0),
    "p_depol_2q": (float, 0.0),
    "p_meas_flip": (float, 0.0),
    "seed": (int, 0),
    "rhobeg": (float, 0.5),
    "rhobeg_warm": (float, 0.2),
    "tol": (float, 1e-6),
    "out_dir": (str, "run"),
}


def parse_config(path: str | None, overrides: list[str]) -> dict:
    """Merge defaults, an optional key=value file, and -s overrides."""
    cfg = {k: v for k, (_, v) in _CONFIG_SCHEMA.items()}

    def apply(key: str, raw: str, where: str):
        if key not in _CONFIG_SCHEMA:
            raise UsageError(f"{where}: unknown config key {key!r}")
        caster = _CONFIG_SCHEMA[key][0]
        try:
            cfg[key] = caster(raw)
        except ValueError:
            raise UsageError(f"{where}: bad value for {key}: {raw!r}") from None

    if path:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            apply(key.strip(), value.strip(), f"{path}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        apply(key.strip(), value.strip(), "command line")
    return cfg


def _run_mode(cfg: dict) -> RunMode:
    kind = cfg["mode"]
    noise = NoiseSpec(cfg["p_depol_1q"], cfg["p_depol_2q"], cfg["p_meas_flip"])
    if kind == "exact":
        return EXACT
    if kind == "shots":
        return RunMode(shots=cfg["shots"])
    if kind == "noisy":
        return RunMode(noise=noise)
    if kind == "noisy_shots":
        return RunMode(shots=cfg["shots"], noise=noise)
    raise UsageError(f"unknown mode {cfg['mode']!r}")


def _train_config(cfg: dict) -> tr.TrainConfig:
    r = None if cfg["r"] == "auto" else float(cfg["r"])
    try:
        return tr.TrainConfig(
            r=r, w=cfg["w"], cluster_steps=cfg["cluster_steps"],
            supervised_steps=cfg["supervised_steps"], mode=_run_mode(cfg),
            seed=cfg["seed"],
            optimizer=tr.OptimizerSettings(rhobeg=cfg["rhobeg"],
                                           rhobeg_warm=cfg["rhobeg_warm"],
                                           tol=cfg["tol"]),
            per_class_pairs=cfg["per_class_pairs"],
            scaler_diag=cfg["scaler_diag"],
            cluster_restarts=cfg["cluster_restarts"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _echo_lines(cfg: dict) -> list[str]:
    return [f"# {k}={cfg[k]}" for k in sorted(cfg)]


def _write_csv(path: Path, cfg: dict, header: str, rows: list[str]) -> None:
    text = "\n".join(_echo_lines(cfg) + [header] + rows) + "\n"
    path.write_text(text, encoding="ascii")


def _load_raw(cfg: dict) -> dt.RawDataset:
    if cfg["dataset"] == "iris":
        path = cfg["iris_path"] or dt.bundled_iris_path()
        return dt.load_iris(path)
    if cfg["dataset"] == "mnist":
        if not cfg["mnist_images"] or not cfg["mnist_labels"]:
            raise UsageError("mnist dataset needs mnist_images and mnist_labels paths")
        return dt.load_mnist(cfg["mnist_images"], cfg["mnist_labels"])
    raise UsageError(f"unknown dataset {cfg['dataset']!r}")


def _classes(cfg: dict) -> list[int] | None:
    if not cfg["classes"]:
        return None
    try:
        return [int(c) for c in cfg["classes"].split(",")]
    except ValueError:
        raise UsageError(f"bad classes list {cfg['classes']!r}") from None


def _processed_path(out: Path, split: str) -> Path:
    return out / f"{split}.csv"


def read_processed(path) -> dt.RawDataset:
    """Read a feature CSV written by ``prepare`` (comments echo the config)."""
    rows, labels = [], []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("label,"):
                continue
            fields = line.split(",")
            labels.append(int(fields[0]))
            rows.append([float(v) for v in fields[1:]])
    if not rows:
        raise dt.DataFormatError(f"{path}: no data rows")
    return dt.RawDataset(np.array(rows), np.array(labels),
                         n_classes=int(max(labels)) + 1)


def cmd_prepare(cfg: dict) -> int:
    raw = _load_raw(cfg)
    train, test = dt.subsample(raw, cfg["per_class_train"], cfg["per_class_test"],
                               classes=_classes(cfg), seed=cfg["seed"])
    if cfg["pca_dim"] > 0:
        model = dt.pca_fit(train.features, cfg["pca_dim"])
    else:
        model = dt.minmax_fit(train.features)
    train_n, test_n = dt.apply_pca(model, train), dt.apply_pca(model, test)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    m = model.n_components
    header = "label," + ",".join(f"f{i}" for i in range(m))
    for split, dsn in (("train", train_n), ("test", test_n)):
        rows = [
            ",".join([str(int(lab))] + [repr(float(v)) for v in feat])
            for feat, lab in zip(dsn.features, dsn.labels)
        ]
        _write_csv(_processed_path(out, split), cfg, header, rows)
    dt.save_pca(model, out / "pca.txt", header_lines=_echo_lines(cfg))
    print(f"wrote {out}/train.csv ({len(train_n)} rows), {out}/test.csv "
          f"({len(test_n)} rows), {out}/pca.txt")
    return EXIT_OK


load_pca = dt.load_pca


def _require_file(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    return path


def cmd_cluster(cfg: dict) -> int:
    config = _train_config(cfg)
    out = Path(cfg["out_dir"])
    train = read_processed(_require_file(_processed_path(out, "train")))
    if train.n_features != cfg["n_qubits"]:
        raise UsageError(
            f"processed features have dimension {train.n_features}, "
            f"but n_qubits={cfg['n_qubits']}"
        )
    ansatz = build_qcnn(cfg["n_qubits"])
    encoding = EncodingSpec(scale=cfg["scale"])
    clust = tr.train_clustering(train, ansatz, encoding, config)
    ckpt = out / "clustering.txt"
    lines = _echo_lines(cfg) + [f"params {len(clust.params)}"]
    lines += [repr(float(p)) for p in clust.params]
    lines.append(f"labels {clust.labels.n_classes}")
    lines += lb.labels_to_text(clust.labels).strip().splitlines()
    lines.append(f"scaler {clust.scaler.shape[0]}")
    lines += [" ".join(repr(float(v)) for v in row) for row in clust.scaler]
    ckpt.write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"wrote {ckpt}; min label distance "
          f"{lb.min_label_distance(clust.labels):.6f}")
    return EXIT_OK


def load_checkpoint(path) -> tuple[np.ndarray, lb.QuantumLabelSet, np.ndarray]:
    lines = [l for l in Path(path).read_text(encoding="ascii").splitlines()
             if l and not l.startswith("#")]
    i = 0
    n_params = int(lines[i].split()[1]); i += 1
    params = np.array([float(v) for v in lines[i : i + n_params]]); i += n_params
    k = int(lines[i].split()[1]); i += 1
    labels = lb.labels_from_text("\n".join(lines[i : i + k])); i += k
    sk = int(lines[i].split()[1]); i += 1
    scaler = np.array([[float(v) for v in lines[i + j].split()] for j in range(sk)])
    return params, labels, scaler


def cmd_train(cfg: dict) -> int:
    config = _train_config(cfg)
    out = Path(cfg["out_dir"])
    train = read_processed(_require_file(_processed_path(out, "train")))
    params0, labels, _ = load_checkpoint(_require_file(out / "clustering.txt"))
    ansatz = build_qcnn(cfg["n_qubits"])
    encoding = EncodingSpec(scale=cfg["scale"])
    model = tr.train_supervised(train, params0, labels, ansatz, encoding,
                                config)
    tr.save_model(model, out / "model.txt")
    print(f"wrote {out}/model.txt; crowding radius r={model.r!r}")
    return EXIT_OK


def _confusion_rows(confusion: np.ndarray) -> list[str]:
    return [",".join(str(int(v)) for v in row) for row in confusion]


def cmd_eval(cfg: dict) -> int:
    out = Path(cfg["out_dir"])
    model = tr.load_model(_require_file(out / "model.txt"))
    test = read_processed(_require_file(_processed_path(out, "test")))
    if model.kind in ("basebin", "basemea"):
        result = bl.evaluate_baseline(model, test, seed=cfg["seed"])
    else:
        result = tr.evaluate(model, test, seed=cfg["seed"])
    k = model.n_classes
    _write_csv(out / "confusion.csv", cfg,
               ",".join(f"pred{j}" for j in range(k)),
               _confusion_rows(result.confusion))
    rows = [
        f"{int(t)},{int(p)},{float(b[0])!r},{float(b[1])!r},{float(b[2])!r}"
        for t, p, b in zip(test.labels, result.predictions, result.blochs)
    ]
    _write_csv(out / "bloch.csv", cfg, "class,predicted,rx,ry,rz", rows)
    print(f"accuracy {result.accuracy:.6f}")
    print(f"wrote {out}/confusion.csv, {out}/bloch.csv")
    return EXIT_OK


def cmd_predict(cfg: dict, features_arg: str) -> int:
    out = Path(cfg["out_dir"])
    model = tr.load_model(_require_file(out / "model.txt"))
    try:
        features = np.array([float(v) for v in features_arg.split(",")])
    except ValueError:
        raise UsageError(f"bad feature row {features_arg!r}") from None
    dists = tr.label_distances(model, features, seed=cfg["seed"])
    pred = int(np.argmin(dists))
    print(f"class {pred}")
    for k, d in enumerate(dists):
        print(f"distance_to_{k} {d:.6f}")
    return EXIT_OK


def cmd_labels(cfg: dict) -> int:
    out = Path(cfg["out_dir"])
    model_path = out / "model.txt"
    if model_path.exists():
        model = tr.load_model(model_path)
        if model.labels is None:
            raise UsageError(f"{model_path} is a baseline model without labels")
        labels = model.labels
    else:
        _, labels, _ = load_checkpoint(_require_file(out / "clustering.txt"))
    print(lb.labels_to_text(labels), end="")
    k = labels.n_classes
    dist = 1.0 - labels.vectors @ labels.vectors.T
    dist[np.abs(dist) < 1e-9] = 0.0
    print("pairwise cosine distances:")
    for i in range(k):
        print(" ".join(f"{dist[i, j]:.6f}" for j in range(k)))
    mini = lb.min_label_distance(labels)
    print(f"min_label_distance {mini:.6f}")
    print(f"suggested_r {1.5 * mini:.6f}")
    return EXIT_OK


def cmd_baseline(cfg: dict, kind: str) -> int:
    config = _train_config(cfg)
    out = Path(cfg["out_dir"])
    train = read_processed(_require_file(_processed_path(out, "train")))
    test = read_processed(_require_file(_processed_path(out, "test")))
    encoding = EncodingSpec(scale=cfg["scale"])
    if kind == "basebin":
        ansatz = build_qcnn(cfg["n_qubits"])
        model = bl.train_basebin(train, ansatz, encoding, config)
    elif kind == "basemea":
        model = bl.train_basemea(train, cfg["n_qubits"], encoding, config)
    else:
        raise UsageError(f"unknown baseline kind {kind!r}")
    tr.save_model(model, out / f"{kind}.txt")
    result = bl.evaluate_baseline(model, test, seed=cfg["seed"])
    _write_csv(out / f"{kind}_confusion.csv", cfg,
               ",".join(f"pred{j}" for j in range(model.n_classes)),
               _confusion_rows(result.confusion))
    print(f"accuracy {result.accuracy:.6f}")
    print(f"wrote {out}/{kind}.txt, {out}/{kind}_confusion.csv")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="qbloch",
                     description="single-readout variational quantum multi-classifier")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("prepare", "load a dataset, split it, and write normalized features"),
        ("cluster", "learn class labels by variational clustering"),
        ("train", "supervised fine-tuning from a clustering checkpoint"),
        ("eval", "evaluate a trained model on the test split"),
        ("predict", "classify one feature row"),
        ("labels", "print label vectors, distances, and the suggested radius"),
        ("baseline", "train and evaluate a reference classifier"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="key=value configuration file")
        p.add_argument("-s", "--set", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        if name == "predict":
            p.add_argument("features", help="comma-separated feature row")
        if name == "baseline":
            p.add_argument("kind", choices=["basebin", "basemea"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = parse_config(args.config, args.set)
        if args.command == "prepare":
            return cmd_prepare(cfg)
        if args.command == "cluster":
            return cmd_cluster(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, args.features)
        if args.command == "labels":
            return cmd_labels(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg, args.kind)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (dt.DataFormatError, dt.InsufficientDataError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (lb.DegenerateReadoutError, lb.DegenerateClusterError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
