"""Multi-class variational quantum classification from a single readout qubit.

The pipeline reads out one qubit in all three Pauli bases, reconstructs its
Bloch vector, learns one unit vector per class by correlation-weighted
variational clustering, and fine-tunes the circuit so every input's readout
lands next to its class vector.  Everything runs on the built-in dense
statevector / density-matrix simulator, optionally with depolarizing gate
noise and measurement flips.
"""

from .ansatz import AnsatzSpec, EncodingSpec, build_qcnn, encode, full_circuit
from .data import (
    PcaModel,
    RawDataset,
    bundled_iris_path,
    load_iris,
    load_mnist,
    minmax_fit,
    pca_fit,
    pca_transform,
    apply_pca,
    subsample,
)
from .labels import (
    ClusterPairSet,
    PatternSet,
    QuantumLabelSet,
    ScalerArray,
    average_patterns,
    build_pair_set,
    clustering_loss,
    clustering_objective,
    compute_quantum_labels,
    cosine_distance,
    min_label_distance,
    scaler_array,
)
from .simcore import (
    EXACT,
    Circuit,
    DensityMatrix,
    GateOp,
    NoiseSpec,
    RunMode,
    StateVector,
    apply_gate,
    evolve_density,
    expectation_z,
    expectation_z_density,
    gate,
    run_circuit,
    sample_expectation_z,
)
from .tomography import (
    BlochVector,
    basis_change_ops,
    bloch_angles,
    readout_bloch,
    reconstruct_density,
)
from .training import (
    OptimizerSettings,
    TrainConfig,
    TrainedModel,
    adjuster,
    combined_loss,
    evaluate,
    load_model,
    minimize,
    predict,
    save_model,
    suggest_r,
    supervised_loss,
    supervised_objective,
    train_clustering,
    train_supervised,
    train_two_step,
)

__version__ = "0.1.0"
