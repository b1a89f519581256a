import numpy as np
import pytest

from qbloch.ansatz import EncodingSpec, build_qcnn
from qbloch.data import RawDataset
from qbloch.labels import QuantumLabelSet, cosine_distance
from qbloch.simcore import EXACT, NoiseSpec, RunMode
from qbloch.training import (
    OptimizerSettings,
    TrainConfig,
    adjuster,
    combined_loss,
    evaluate,
    label_distances,
    load_model,
    minimize,
    mode_from_string,
    mode_to_string,
    predict,
    save_model,
    suggest_r,
    supervised_loss,
    supervised_objective,
    train_clustering,
    train_supervised,
    train_two_step,
)

ENC = EncodingSpec()


def _unit(*v):
    a = np.asarray(v, dtype=float)
    return a / np.linalg.norm(a)


def _labels(*rows):
    return QuantumLabelSet(np.array([_unit(*r) for r in rows]))


# ---------------------------------------------------------------------------
# loss pieces


def test_supervised_loss_examples():
    y = _unit(0, 0, 1)
    assert supervised_loss((0, 0, 0.7), y) == pytest.approx(0.0, abs=1e-12)
    assert supervised_loss((1, 0, 0), y) == pytest.approx(1.0)
    assert supervised_loss((0, 0, -2), y) == pytest.approx(2.0)


def test_adjuster_inactive_when_far_from_correct():
    labels = _labels((0, 0, 1), (1, 0, 0))
    # readout sits at the wrong label: far from correct, adjuster stays off
    assert adjuster((1, 0, 0), labels, 0, 0.5) == 0.0


def test_adjuster_single_term():
    labels = _labels((0, 0, 1), (0.6, 0, 0.8))
    v = (0, 0, 1)
    d_wrong = cosine_distance(v, labels.vectors[1])
    r = d_wrong + 0.05
    assert adjuster(v, labels, 0, r) == pytest.approx(d_wrong)


def test_adjuster_excludes_correct_label():
    labels = _labels((0, 0, 1), (1, 0, 0))
    # generous radius: only the single wrong label contributes
    assert adjuster((0, 0, 1), labels, 0, 2.0) == pytest.approx(1.0)


def test_adjuster_brute_force_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(2, 8))
        vecs = rng.normal(size=(k, 3))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        try:
            labels = QuantumLabelSet(vecs)
        except ValueError:
            continue
        v = rng.normal(size=3)
        correct = int(rng.integers(k))
        r = float(rng.uniform(0, 2))
        want = 0.0
        if cosine_distance(v, vecs[correct]) <= r:
            for j in range(k):
                if j != correct and cosine_distance(vecs[j], v) <= r:
                    want += cosine_distance(vecs[j], v)
        assert adjuster(v, labels, correct, r) == pytest.approx(want, abs=1e-12)


def test_adjuster_validation():
    labels = _labels((0, 0, 1), (1, 0, 0))
    with pytest.raises(ValueError):
        adjuster((0, 0, 1), labels, 0, -0.1)
    with pytest.raises(ValueError):
        adjuster((0, 0, 1), labels, 5, 0.1)


def test_combined_loss_arithmetic():
    # crafted so the supervised term is 0.1 and the crowding term is 0.5
    labels = _labels((0, 0, 1), (1, 0, 0))
    v = (0, 0, 1)
    # reposition labels: correct at distance 0.1, wrong at 0.5 from v
    labels = _labels(
        (np.sin(np.arccos(0.9)), 0, 0.9),     # distance 0.1 from +z
        (np.sin(np.arccos(0.5)), 0, 0.5),     # distance 0.5 from +z
    )
    got = combined_loss(v, labels, 0, r=2.0, w=0.2)
    assert got == pytest.approx(0.2 * 0.1 - 0.8 * 0.5, abs=1e-12)


def test_combined_loss_w1_reduces_to_supervised():
    rng = np.random.default_rng(1)
    labels = _labels((0, 0, 1), (1, 0, 0), (0, 1, 0))
    for _ in range(20):
        v = rng.normal(size=3)
        r = float(rng.uniform(0, 2))
        assert combined_loss(v, labels, 1, r, 1.0) == pytest.approx(
            supervised_loss(v, labels.vectors[1]), abs=1e-12
        )


def test_combined_loss_inactive_adjuster():
    labels = _labels((0, 0, 1), (0, 0, -1))
    v = (0.1, 0, 1)
    # wrong label is ~2 away, far outside r
    got = combined_loss(v, labels, 0, r=0.5, w=0.3)
    assert got == pytest.approx(0.3 * supervised_loss(v, labels.vectors[0]), abs=1e-12)


def test_combined_loss_differs_only_when_both_within_r():
    rng = np.random.default_rng(2)
    labels = _labels((0, 0, 1), (0.6, 0, 0.8), (0, 1, 0))
    for _ in range(100):
        v = rng.normal(size=3)
        correct = int(rng.integers(3))
        r = float(rng.uniform(0, 2))
        w = float(rng.uniform(0, 1))
        base = w * supervised_loss(v, labels.vectors[correct])
        got = combined_loss(v, labels, correct, r, w)
        lsup = supervised_loss(v, labels.vectors[correct])
        wrong_within = any(
            cosine_distance(labels.vectors[j], v) <= r
            for j in range(3) if j != correct
        )
        if lsup <= r and wrong_within and w < 1.0:
            assert got != pytest.approx(base, abs=1e-15)
        else:
            assert got == pytest.approx(base, abs=1e-12)


def test_combined_loss_validates_w():
    labels = _labels((0, 0, 1), (1, 0, 0))
    with pytest.raises(ValueError):
        combined_loss((0, 0, 1), labels, 0, 0.5, 1.2)


def test_supervised_objective_matches_scalar_mean():
    rng = np.random.default_rng(3)
    spec = build_qcnn(2)
    labels = _labels((0, 0, 1), (1, 0, 0), (0, 1, 0))
    feats = rng.uniform(0, 1, (9, 2))
    targets = rng.integers(0, 3, 9)
    params = rng.uniform(0, 2 * np.pi, spec.n_params)
    r, w = 0.8, 0.3
    got = supervised_objective(params, feats, targets, labels, r, w, spec, ENC)

    from qbloch.ansatz import full_circuit
    from qbloch.simcore import StateVector
    from qbloch.tomography import readout_bloch
    total = 0.0
    for x, y in zip(feats, targets):
        v = readout_bloch(full_circuit(x, ENC, spec), params,
                          StateVector.zero(2), spec.readout)
        total += combined_loss(v.as_array(), labels, int(y), r, w)
    assert got == pytest.approx(total / 9, abs=1e-12)


# ---------------------------------------------------------------------------
# optimizer


def test_minimize_sphere():
    rng = np.random.default_rng(4)
    settings = OptimizerSettings(rhobeg=0.5, tol=1e-8, max_evals=500)
    for _ in range(3):
        res = minimize(lambda x: float(np.sum(x * x)), rng.uniform(-1, 1, 10),
                       settings)
        assert res.fun < 1e-6


def test_minimize_constant_objective_returns_x0():
    x0 = np.array([1.5, -2.0])
    res = minimize(lambda x: 3.25, x0, OptimizerSettings(max_evals=60))
    assert np.allclose(res.x, x0)
    assert res.fun == 3.25


def test_minimize_1d_quadratic():
    res = minimize(lambda x: (x[0] - 3.0) ** 2, np.array([0.0]),
                   OptimizerSettings(max_evals=200, tol=1e-8))
    assert abs(res.x[0] - 3.0) < 1e-4


def test_minimize_history_and_budget():
    res = minimize(lambda x: float(np.sum(x * x)), np.ones(5),
                   OptimizerSettings(max_evals=20))
    assert res.n_evals <= 20
    assert res.budget_exhausted == (res.n_evals >= 20)
    assert len(res.history) == res.n_evals
    best = np.minimum.accumulate(res.history)
    assert np.all(np.diff(best) <= 0.0)
    assert res.fun == best[-1]


def test_minimize_deterministic():
    x0 = np.full(6, 0.3)
    f = lambda x: float(np.sum((x - 1.7) ** 2))
    a = minimize(f, x0, OptimizerSettings(max_evals=150))
    b = minimize(f, x0, OptimizerSettings(max_evals=150))
    assert np.array_equal(a.x, b.x)
    assert a.history == b.history


def test_minimize_rejects_nonfinite_start():
    with pytest.raises(ValueError):
        minimize(lambda x: float("nan"), np.zeros(2), OptimizerSettings())


def test_optimizer_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings(rhobeg=0.0)
    with pytest.raises(ValueError):
        OptimizerSettings(max_evals=0)


# ---------------------------------------------------------------------------
# suggestions, config


def test_suggest_r_from_min_distance():
    # min distance 0.086: two unit vectors with dot = 1 - 0.086
    c = 1 - 0.086
    labels = _labels((0, 0, 1), (np.sqrt(1 - c * c), 0, c))
    assert suggest_r(labels) == pytest.approx(1.5 * 0.086, abs=1e-9)
    c = 1 - 1.302
    labels = _labels((0, 0, 1), (np.sqrt(1 - c * c), 0, c))
    assert suggest_r(labels) == pytest.approx(1.5 * 1.302, abs=1e-9)
    antipodal = _labels((0, 0, 1), (0, 0, -1))
    assert suggest_r(antipodal) == pytest.approx(3.0)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(w=1.5)
    with pytest.raises(ValueError):
        TrainConfig(r=-0.1)
    with pytest.raises(ValueError):
        TrainConfig(cluster_steps=0)
    with pytest.raises(ValueError):
        TrainConfig(scaler_diag=0.5)
    with pytest.raises(ValueError):
        TrainConfig(cluster_restarts=0)


def test_mode_string_roundtrip():
    for mode in (
        EXACT,
        RunMode(shots=512),
        RunMode(noise=NoiseSpec(0.001, 0.01, 0.02)),
        RunMode(shots=64, noise=NoiseSpec(0.1, 0.2, 0.3)),
    ):
        assert mode_from_string(mode_to_string(mode)) == mode
    with pytest.raises(ValueError):
        mode_from_string("sometimes")


# ---------------------------------------------------------------------------
# end-to-end on a small synthetic problem


def _blob_dataset(seed=0, per_class=8):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.2, 0.2], [0.8, 0.25], [0.5, 0.85]])
    feats = np.vstack([
        np.clip(c + rng.normal(scale=0.05, size=(per_class, 2)), 0, 1)
        for c in centers
    ])
    return RawDataset(feats, np.repeat(np.arange(3), per_class), 3)


def _fast_config(**kw):
    base = dict(seed=0, cluster_steps=120, supervised_steps=120,
                cluster_restarts=2, w=1.0)
    base.update(kw)
    return TrainConfig(**base)


def test_two_step_training_learns_blobs():
    ds = _blob_dataset()
    spec = build_qcnn(2)
    clust, model = train_two_step(ds, spec, ENC, _fast_config())
    assert model.params.shape == (spec.n_params,)
    assert model.labels.n_classes == 3
    assert len(clust.restart_scores) == 2
    result = evaluate(model, ds)
    assert result.accuracy >= 0.8
    assert result.confusion.sum() == len(ds)
    assert np.trace(result.confusion) == round(result.accuracy * len(ds))


def test_training_is_deterministic():
    ds = _blob_dataset()
    spec = build_qcnn(2)
    _, m1 = train_two_step(ds, spec, ENC, _fast_config())
    _, m2 = train_two_step(ds, spec, ENC, _fast_config())
    assert np.array_equal(m1.params, m2.params)
    assert np.array_equal(m1.labels.vectors, m2.labels.vectors)
    _, m3 = train_two_step(ds, spec, ENC, _fast_config(seed=5))
    assert not np.array_equal(m1.params, m3.params)


def test_supervised_warm_start_uses_clustering_params():
    ds = _blob_dataset()
    spec = build_qcnn(2)
    cfg = _fast_config(supervised_steps=1)
    clust = train_clustering(ds, spec, ENC, cfg)
    model = train_supervised(ds, clust.params, clust.labels, spec, ENC, cfg)
    # a single-evaluation budget cannot move the parameters
    assert np.allclose(model.params, clust.params)


def test_predict_matches_exhaustive_scan():
    ds = _blob_dataset()
    spec = build_qcnn(2)
    _, model = train_two_step(ds, spec, ENC, _fast_config())
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = rng.uniform(0, 1, 2)
        dists = label_distances(model, x)
        want = min(range(model.n_classes), key=lambda k: dists[k])
        assert predict(model, x) == want


def test_predict_feature_dimension_check():
    ds = _blob_dataset()
    spec = build_qcnn(2)
    _, model = train_two_step(ds, spec, ENC, _fast_config())
    with pytest.raises(ValueError):
        predict(model, [0.1, 0.2, 0.3])


def test_prediction_scale_invariance():
    # the nearest-label rule only uses direction
    y = _unit(0.2, -0.5, 0.7)
    v = np.array([0.1, 0.4, -0.2])
    assert cosine_distance(v, y) == pytest.approx(cosine_distance(5.0 * v, y))


def test_model_roundtrip_bit_exact(tmp_path):
    ds = _blob_dataset()
    spec = build_qcnn(2)
    _, model = train_two_step(ds, spec, ENC, _fast_config(
        r=0.4, w=0.25, mode=RunMode(noise=NoiseSpec(0.001, 0.01, 0.02))))
    path = tmp_path / "model.txt"
    save_model(model, path)
    back = load_model(path)
    assert np.array_equal(back.params, model.params)
    assert np.array_equal(back.labels.vectors, model.labels.vectors)
    assert back.config == model.config
    assert back.kind == model.kind
    assert back.r == model.r
    assert back.readouts == model.readouts


def test_load_model_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a model\n")
    with pytest.raises(ValueError):
        load_model(path)


def test_shot_mode_training_runs():
    ds = _blob_dataset(per_class=5)
    spec = build_qcnn(2)
    cfg = _fast_config(cluster_steps=40, supervised_steps=40,
                       cluster_restarts=1, mode=RunMode(shots=256))
    clust, model = train_two_step(ds, spec, ENC, cfg)
    assert model.params.shape == (spec.n_params,)
    result = evaluate(model, ds, seed=0)
    assert 0.0 <= result.accuracy <= 1.0
