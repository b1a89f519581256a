"""Tour of the circuit simulator: gates, expectations, sampling, and noise.

Run with:  python demos/01_simulator_and_noise.py
"""

import numpy as np

from qbloch import (
    Circuit,
    DensityMatrix,
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

# ---------------------------------------------------------------------------
# Pure states. Qubit 0 is the least significant bit of the basis index.

zero = StateVector.zero(1)
print("X|0> =", apply_gate(zero, gate("x", 0)).amplitudes)
print("H|0> =", np.round(apply_gate(zero, gate("h", 0)).amplitudes, 6))

bell = run_circuit(Circuit(2, [gate("h", 0), gate("cnot", 0, 1)]), [])
print("\nBell state amplitudes:", np.round(bell.amplitudes, 6))
print("<Z_0> =", expectation_z(bell, 0), " <Z_1> =", expectation_z(bell, 1))

# ---------------------------------------------------------------------------
# Parameterized circuits share one parameter vector; gates reference slots.

circ = Circuit(2, [
    gate("ry", 0, slot=0),
    gate("ry", 1, slot=1),
    gate("block2q", 0, 1, slot=2),   # RY x RY, CNOT, RY: three more slots
])
params = np.array([0.4, 1.1, 0.2, 0.9, 1.7])
out = run_circuit(circ, params)
print("\nparameterized circuit <Z_0> =", round(expectation_z(out, 0), 6))

# ---------------------------------------------------------------------------
# Finite shots: the estimate converges to the exact value like 1/sqrt(shots).

plus = apply_gate(zero, gate("h", 0))
print("\nshot estimates of <Z> = 0 on H|0>:")
for shots in (16, 256, 4096):
    est = sample_expectation_z(plus, 0, shots, seed=7)
    print(f"  shots={shots:5d}  estimate={est:+.4f}")

# ---------------------------------------------------------------------------
# Noise: a depolarizing channel after each gate shrinks the Bloch vector by
# (1 - p); a readout flip with probability q shrinks z readings by (1 - 2q).

noise = NoiseSpec(p_depol_1q=0.05, p_depol_2q=0.02, p_meas_flip=0.03)
rho = evolve_density(Circuit(1, [gate("h", 0)]), [], DensityMatrix.zero(1),
                     noise)
sx = np.trace(np.array([[0, 1], [1, 0]]) @ rho.matrix).real
print(f"\nH|0> under 5% depolarizing: <X> = {sx:.4f} (ideal 1, expect 0.95)")
print("readout with 3% flip on |0>:",
      expectation_z_density(DensityMatrix.zero(1), 0, noise))
