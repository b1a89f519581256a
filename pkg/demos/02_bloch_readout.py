"""Reconstructing a qubit's Bloch vector from x/y/z measurements.

A z measurement alone reads only one coordinate of the readout qubit.
Rotating the qubit before measuring (H for the x axis, S-dagger then H for
the y axis) recovers the other two, and the three expectations pin down the
full single-qubit state.

Run with:  python demos/02_bloch_readout.py
"""

import numpy as np

from qbloch import (
    Circuit,
    StateVector,
    RunMode,
    NoiseSpec,
    basis_change_ops,
    bloch_angles,
    gate,
    readout_bloch,
    reconstruct_density,
)

# The three measurement units, as gate lists prepended to the z measurement:
for axis in "xyz":
    ops = basis_change_ops(axis, qubit=0)
    print(f"{axis}-basis unit: {[op.kind for op in ops] or ['(native z)']}")

# ---------------------------------------------------------------------------
# Known states land where they should on the sphere.

cases = [
    ("|0>", Circuit(1, [])),
    ("|+>", Circuit(1, [gate("h", 0)])),
    ("|+i>", Circuit(1, [gate("h", 0), gate("s", 0)])),
    ("rotated", Circuit(1, [gate("ry", 0, angle=0.8), gate("rz", 0, angle=2.1)])),
]
print()
for name, circ in cases:
    b = readout_bloch(circ, [], StateVector.zero(1), readout=0)
    theta, phi = bloch_angles(b)
    print(f"{name:8s} bloch=({b.rx:+.4f}, {b.ry:+.4f}, {b.rz:+.4f})  "
          f"theta={theta:.4f} phi={phi:.4f}")

# ---------------------------------------------------------------------------
# The reconstructed density matrix of a pure state has eigenvalues {1, 0}.

b = readout_bloch(cases[3][1], [], StateVector.zero(1), 0)
rho = reconstruct_density(b)
print("\nreconstructed density matrix:\n", np.round(rho.matrix, 4))
print("eigenvalues:", np.round(np.linalg.eigvalsh(rho.matrix), 6))

# ---------------------------------------------------------------------------
# With finite shots the estimate scatters around the exact vector; with gate
# noise the vector shrinks toward the center of the sphere.

exact = readout_bloch(cases[3][1], [], StateVector.zero(1), 0)
for shots in (128, 2048):
    est = readout_bloch(cases[3][1], [], StateVector.zero(1), 0,
                        RunMode(shots=shots), seed=17)
    err = np.linalg.norm(est.as_array() - exact.as_array())
    print(f"\nshots={shots}: estimate error {err:.4f}")

noisy = readout_bloch(cases[3][1], [], StateVector.zero(1), 0,
                      RunMode(noise=NoiseSpec(p_depol_1q=0.08)))
print("\nnorm exact  :", round(exact.norm(), 4))
print("norm noisy  :", round(noisy.norm(), 4), "(depolarizing pulls inward)")
