import numpy as np
import pytest

from qbloch.simcore import (
    Circuit,
    DensityMatrix,
    GateOp,
    NoiseSpec,
    StateVector,
    apply_gate,
    evolve_density,
    expectation_z,
    expectation_z_density,
    gate,
    run_circuit,
    sample_expectation_z,
)

from oracles import (
    circuit_unitary,
    random_circuit,
    random_params,
    reduced_density_1q_from_rho,
)


def test_pauli_x_flips_zero():
    out = apply_gate(StateVector.zero(1), gate("x", 0))
    assert np.allclose(out.amplitudes, [0, 1])


def test_hadamard_makes_equal_superposition():
    out = apply_gate(StateVector.zero(1), gate("h", 0))
    assert np.allclose(out.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_cnot_flips_target_when_control_set():
    # qubit 0 is the least significant bit: start with q0=1, q1=0
    out = apply_gate(StateVector.basis(2, 0b01), gate("cnot", 0, 1))
    assert np.argmax(np.abs(out.amplitudes)) == 0b11


def test_cnot_identity_when_control_clear():
    out = apply_gate(StateVector.basis(2, 0b10), gate("cnot", 0, 1))
    assert np.argmax(np.abs(out.amplitudes)) == 0b10


def test_empty_circuit_is_identity():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    state = StateVector(3, amps)
    out = run_circuit(Circuit(3, []), [], state)
    assert np.allclose(out.amplitudes, amps, atol=1e-15)


def test_double_hadamard_is_identity():
    out = run_circuit(Circuit(1, [gate("h", 0), gate("h", 0)]), [])
    assert np.allclose(out.amplitudes, [1, 0], atol=1e-15)


def test_run_circuit_matches_kronecker_oracle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        circ = random_circuit(rng, n, int(rng.integers(1, 9)))
        params = random_params(rng, circ)
        got = run_circuit(circ, params).amplitudes
        want = circuit_unitary(circ, params)[:, 0]
        assert np.max(np.abs(got - want)) < 1e-10


def test_norm_preserved_by_random_circuits():
    rng = np.random.default_rng(7)
    for _ in range(50):
        circ = random_circuit(rng, 3, 10)
        out = run_circuit(circ, random_params(rng, circ))
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-9


@pytest.mark.parametrize(
    "prep,want",
    [([], 1.0), ([gate("x", 0)], -1.0), ([gate("h", 0)], 0.0)],
)
def test_expectation_z_basics(prep, want):
    out = run_circuit(Circuit(1, prep), [])
    assert expectation_z(out, 0) == pytest.approx(want, abs=1e-12)


def test_expectation_z_matches_signed_probabilities():
    rng = np.random.default_rng(3)
    circ = random_circuit(rng, 3, 8)
    out = run_circuit(circ, random_params(rng, circ))
    probs = np.abs(out.amplitudes) ** 2
    for q in range(3):
        signs = 1 - 2 * ((np.arange(8) >> q) & 1)
        assert expectation_z(out, q) == pytest.approx(np.sum(signs * probs), abs=1e-12)


def test_expectation_z_bad_qubit():
    with pytest.raises(ValueError):
        expectation_z(StateVector.zero(2), 2)


def test_sampling_deterministic_outcomes():
    one = apply_gate(StateVector.zero(1), gate("x", 0))
    for shots in (1, 7, 100):
        assert sample_expectation_z(StateVector.zero(1), 0, shots, seed=5) == 1.0
        assert sample_expectation_z(one, 0, shots, seed=5) == -1.0


def test_sampling_seed_reproducible():
    plus = apply_gate(StateVector.zero(1), gate("h", 0))
    a = sample_expectation_z(plus, 0, 200, seed=11)
    b = sample_expectation_z(plus, 0, 200, seed=11)
    c = sample_expectation_z(plus, 0, 200, seed=12)
    assert a == b
    assert a != c


def test_sampling_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_expectation_z(StateVector.zero(1), 0, 0, seed=0)


def test_sampling_standard_error_follows_shot_law():
    # empirical standard error within 20% of sqrt((1 - ez^2) / shots)
    shots = 512
    for prep_angle in (np.pi / 2, np.pi / 3):
        circ = Circuit(1, [gate("ry", 0, angle=prep_angle)])
        state = run_circuit(circ, [])
        ez = expectation_z(state, 0)
        estimates = [
            sample_expectation_z(state, 0, shots, seed=s) for s in range(1000)
        ]
        se = np.std(estimates)
        want = np.sqrt((1 - ez**2) / shots)
        assert abs(se - want) < 0.2 * want


def test_noiseless_density_equals_pure_projector():
    rng = np.random.default_rng(1)
    circ = random_circuit(rng, 3, 10)
    params = random_params(rng, circ)
    psi = run_circuit(circ, params)
    rho = evolve_density(circ, params, DensityMatrix.zero(3))
    want = np.outer(psi.amplitudes, psi.amplitudes.conj())
    assert np.max(np.abs(rho.matrix - want)) < 1e-10


def test_full_depolarization_gives_maximally_mixed():
    circ = Circuit(1, [gate("x", 0)])
    rho = evolve_density(circ, [], DensityMatrix.zero(1), NoiseSpec(p_depol_1q=1.0))
    assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)


def test_depolarizing_shrinks_bloch_vector():
    # H|0> then 10% depolarizing leaves <sx> = 0.9
    circ = Circuit(1, [gate("h", 0)])
    rho = evolve_density(circ, [], DensityMatrix.zero(1), NoiseSpec(p_depol_1q=0.1))
    sx = np.trace(np.array([[0, 1], [1, 0]]) @ rho.matrix).real
    assert sx == pytest.approx(0.9, abs=1e-12)


def test_depolarizing_scales_product_state_bloch_by_1mp():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = 3
        prep = [gate("ry", q, angle=rng.uniform(0, np.pi)) for q in range(n)]
        prep += [gate("rz", q, angle=rng.uniform(0, 2 * np.pi)) for q in range(n)]
        base = evolve_density(Circuit(n, prep), [], DensityMatrix.zero(n))
        target = int(rng.integers(n))
        p = float(rng.uniform(0, 1))
        # evolve one identity-angle gate with noise: exactly one channel application
        tail = Circuit(n, [gate("rz", target, angle=0.0)])
        rho = evolve_density(tail, [], base, NoiseSpec(p_depol_1q=p))
        for q in range(n):
            red0 = reduced_density_1q_from_rho(base.matrix, n, q)
            red1 = reduced_density_1q_from_rho(rho.matrix, n, q)
            b0 = np.array([np.trace(m @ red0).real for m in _paulis()])
            b1 = np.array([np.trace(m @ red1).real for m in _paulis()])
            scale = (1 - p) if q == target else 1.0
            assert np.max(np.abs(b1 - scale * b0)) < 1e-10


def _paulis():
    return (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )


def test_two_qubit_depolarizing_scales_both_marginals():
    n = 2
    prep = [gate("ry", 0, angle=0.7), gate("ry", 1, angle=1.9)]
    p = 0.25
    circ = Circuit(n, prep + [gate("crz", 0, 1, angle=0.0)])
    base = evolve_density(Circuit(n, prep), [], DensityMatrix.zero(n))
    rho = evolve_density(circ, [], DensityMatrix.zero(n), NoiseSpec(p_depol_2q=p))
    for q in range(n):
        red0 = reduced_density_1q_from_rho(base.matrix, n, q)
        red1 = reduced_density_1q_from_rho(rho.matrix, n, q)
        b0 = np.array([np.trace(m @ red0).real for m in _paulis()])
        b1 = np.array([np.trace(m @ red1).real for m in _paulis()])
        assert np.max(np.abs(b1 - (1 - p) * b0)) < 1e-10


def test_density_statevector_consistency_zero_noise():
    rng = np.random.default_rng(21)
    for _ in range(25):
        n = int(rng.integers(1, 4))
        circ = random_circuit(rng, n, 8)
        params = random_params(rng, circ)
        rho = evolve_density(circ, params, DensityMatrix.zero(n))
        psi = run_circuit(circ, params)
        for q in range(n):
            assert expectation_z_density(rho, q) == pytest.approx(
                expectation_z(psi, q), abs=1e-9
            )


def test_trace_preserved_under_noise():
    rng = np.random.default_rng(33)
    circ = random_circuit(rng, 3, 12)
    params = random_params(rng, circ)
    noise = NoiseSpec(p_depol_1q=0.05, p_depol_2q=0.1, p_meas_flip=0.1)
    rho = evolve_density(circ, params, DensityMatrix.zero(3), noise)
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-9)
    assert rho.min_eigenvalue() > -1e-8


def test_measurement_flip_scaling():
    assert expectation_z_density(DensityMatrix.zero(1), 0) == pytest.approx(1.0)
    assert expectation_z_density(
        DensityMatrix.zero(1), 0, NoiseSpec(p_meas_flip=0.5)
    ) == pytest.approx(0.0)
    mixed = DensityMatrix(1, np.eye(2) / 2)
    assert expectation_z_density(mixed, 0, NoiseSpec(p_meas_flip=0.2)) == pytest.approx(0.0)


def test_measurement_flip_with_noisy_bloch():
    rho = evolve_density(Circuit(1, []), [], DensityMatrix.zero(1))
    got = expectation_z_density(rho, 0, NoiseSpec(p_meas_flip=0.1))
    assert got == pytest.approx(0.8, abs=1e-12)


def test_gateop_validation():
    with pytest.raises(ValueError):
        GateOp("cnot", (1, 1))
    with pytest.raises(ValueError):
        GateOp("ry", (0,))  # needs one of slot/angle
    with pytest.raises(ValueError):
        GateOp("ry", (0,), param_slot=0, fixed_angle=0.3)
    with pytest.raises(ValueError):
        GateOp("h", (0,), fixed_angle=1.0)
    with pytest.raises(ValueError):
        GateOp("block2q", (0, 1), fixed_angle=(0.1, 0.2))  # needs 3 angles
    with pytest.raises(ValueError):
        GateOp("zz", (0,))


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(1, [gate("ry", 1, slot=0)])  # target out of range
    with pytest.raises(ValueError):
        Circuit(2, [gate("ry", 0, slot=0), gate("ry", 1, slot=0)])  # slot reuse
    with pytest.raises(ValueError):
        Circuit(2, [gate("ry", 0, slot=1)])  # slot gap
    circ = Circuit(2, [gate("ry", 0, slot=0), gate("block2q", 0, 1, slot=1)])
    assert circ.n_params == 4


def test_run_circuit_parameter_length_mismatch():
    circ = Circuit(1, [gate("ry", 0, slot=0)])
    with pytest.raises(ValueError):
        run_circuit(circ, [])
    with pytest.raises(ValueError):
        run_circuit(circ, [0.1, 0.2])


def test_apply_gate_missing_parameter():
    with pytest.raises(ValueError):
        apply_gate(StateVector.zero(1), gate("ry", 0, slot=0), [])


def test_apply_gate_target_out_of_range():
    with pytest.raises(ValueError):
        apply_gate(StateVector.zero(1), gate("x", 1))


def test_statevector_invariants():
    with pytest.raises(ValueError):
        StateVector(1, [1.0, 1.0])  # not normalized
    with pytest.raises(ValueError):
        StateVector(2, [1.0, 0.0])  # wrong length
    with pytest.raises(ValueError):
        StateVector(1, [np.nan, 0.0])


def test_density_matrix_invariants():
    with pytest.raises(ValueError):
        DensityMatrix(1, [[1.0, 1.0], [0.0, 0.0]])  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(1, [[0.7, 0.0], [0.0, 0.7]])  # trace != 1


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(p_depol_1q=-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(p_meas_flip=1.5)
    assert NoiseSpec().is_zero
    assert not NoiseSpec(p_depol_2q=0.1).is_zero
