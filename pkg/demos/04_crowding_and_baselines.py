"""Label crowding, the loss adjuster, and the reference classifiers.

When many classes share one Bloch sphere their labels crowd together and a
readout can fall nearest a wrong neighbor.  The combined loss counters this:
once a readout is within radius r of its own label, every wrong label inside
that radius contributes a subtracted penalty, so minimizing pushes the
readout away from them.  This demo shows the machinery on the handwritten
digits 0-2 (needs scikit-learn for the dataset) and compares against the
z-sign and one-hot baselines on a binary task.

Takes a few minutes.  Run with:  python demos/04_crowding_and_baselines.py
"""

import numpy as np
from sklearn.datasets import load_digits

from qbloch import (
    EncodingSpec,
    QuantumLabelSet,
    RawDataset,
    TrainConfig,
    adjuster,
    apply_pca,
    build_qcnn,
    combined_loss,
    evaluate,
    pca_fit,
    subsample,
    train_clustering,
    train_supervised,
)
from qbloch.baselines import evaluate_baseline, train_basebin, train_basemea

ENC = EncodingSpec()

# ---------------------------------------------------------------------------
# The crowding penalty on a crafted configuration.

labels = QuantumLabelSet(np.array([
    [0.0, 0.0, 1.0],
    [0.6, 0.0, 0.8],     # 0.2 away from the first label
    [0.0, 0.0, -1.0],
]))
v = (0.1, 0.0, 0.99)     # a readout very near label 0
for r in (0.1, 0.3, 2.0):
    print(f"r={r}: crowding penalty = {adjuster(v, labels, 0, r):.4f}, "
          f"combined loss (w=0.3) = {combined_loss(v, labels, 0, r, 0.3):+.4f}")

# ---------------------------------------------------------------------------
# Digits 0-2 with and without the adjuster.

digits = load_digits()
ds = RawDataset(digits.data / 16.0, digits.target, 10)
train, test = subsample(ds, 120, 50, classes=[0, 1, 2], seed=0)
pca = pca_fit(train.features, 8)
train_n, test_n = apply_pca(pca, train), apply_pca(pca, test)

spec = build_qcnn(8)
base = TrainConfig(seed=0, cluster_steps=300, supervised_steps=400)
print("\nclustering digits 0-2 ...")
clust = train_clustering(train_n, spec, ENC, base)

for w, tag in ((0.3, "with adjuster (w=0.3)"), (1.0, "without adjuster")):
    cfg = TrainConfig(seed=0, w=w, supervised_steps=400)
    model = train_supervised(train_n, clust.params, clust.labels, spec, ENC, cfg)
    acc = evaluate(model, test_n).accuracy
    print(f"  {tag:24s} test accuracy {acc:.4f}")

# ---------------------------------------------------------------------------
# Binary digits 0 vs 1: single-readout pipeline vs the z-sign baseline and
# the one-hot multi-qubit readout baseline.

train, test = subsample(ds, 120, 50, classes=[0, 1], seed=0)
pca = pca_fit(train.features, 8)
train_n, test_n = apply_pca(pca, train), apply_pca(pca, test)

cfg = TrainConfig(seed=0, w=1.0, cluster_steps=300, supervised_steps=400)
print("\nbinary digits 0 vs 1:")
clust = train_clustering(train_n, spec, ENC, cfg)
model = train_supervised(train_n, clust.params, clust.labels, spec, ENC, cfg)
print(f"  bloch-readout pipeline   {evaluate(model, test_n).accuracy:.4f}")

bb = train_basebin(train_n, spec, ENC, cfg)
print(f"  z-sign baseline          {evaluate_baseline(bb, test_n).accuracy:.4f}")

bm = train_basemea(train_n, 8, ENC, cfg)
print(f"  one-hot readout baseline {evaluate_baseline(bm, test_n).accuracy:.4f}")
