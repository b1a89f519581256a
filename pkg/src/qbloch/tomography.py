"""Three-basis readout tomography: reconstruct one qubit's Bloch vector.

Hardware measures only along z, so the x and y components are obtained by
rotating the readout qubit before the z measurement: an H gate maps the
x axis onto z, and S-dagger followed by H maps the y axis onto z.  The three
expectations (<sx>, <sy>, <sz>) form the Bloch vector, from which the full
single-qubit density matrix can be rebuilt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simcore import (
    EXACT,
    Circuit,
    DensityMatrix,
    GateOp,
    RunMode,
    StateVector,
    _sample_from_expectation,
    evolve_density,
    evolve_density_batch,
    expectation_z_batch,
    expectation_z_density,
    expectation_z_density_batch,
    gate,
    run_circuit,
    run_circuit_batch,
)

__all__ = [
    "BASES",
    "BlochVector",
    "basis_change_ops",
    "readout_bloch",
    "readout_bloch_batch",
    "reconstruct_density",
    "bloch_angles",
]

BASES = ("x", "y", "z")


@dataclass(frozen=True)
class BlochVector:
    """The (<sx>, <sy>, <sz>) readout of one qubit.

    Components are kept exactly as estimated: shot noise can push them
    slightly outside [-1, 1] and the vector is deliberately not clamped or
    renormalized, since downstream cosine distances normalize internally.
    """

    rx: float
    ry: float
    rz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        rx, ry, rz = (float(v) for v in arr)
        return cls(rx, ry, rz)

    def norm(self) -> float:
        return math.sqrt(self.rx**2 + self.ry**2 + self.rz**2)


def basis_change_ops(basis: str, qubit: int) -> list[GateOp]:
    """Gates inserted before the native z measurement for the given axis."""
    if qubit < 0:
        raise ValueError("qubit index must be >= 0")
    basis = basis.lower()
    if basis == "z":
        return []
    if basis == "x":
        return [gate("h", qubit)]
    if basis == "y":
        return [gate("sdg", qubit), gate("h", qubit)]
    raise ValueError(f"unknown measurement basis {basis!r}")


def _branch_circuit(n_qubits: int, basis: str, qubit: int) -> Circuit:
    return Circuit(n_qubits, basis_change_ops(basis, qubit))


def readout_bloch(circuit: Circuit, params, input: StateVector, readout: int,
                  mode: RunMode = EXACT, seed: int | None = None) -> BlochVector:
    """Run the circuit once per basis and measure z on the readout qubit.

    The circuit prefix is common to all three bases, so it is evolved once
    and only the basis-change gates are branched; this is numerically
    identical to three independent executions because sampling happens only
    at the final measurement.
    """
    if not 0 <= readout < circuit.n_qubits:
        raise ValueError(f"readout qubit {readout} out of range")
    n = circuit.n_qubits
    rng = np.random.default_rng(seed) if mode.shots is not None else None
    if mode.shots is not None and seed is None:
        raise ValueError("shot mode requires a seed")

    comps = []
    if mode.is_noisy:
        rho = evolve_density(circuit, params, input.to_density(), mode.noise)
        for basis in BASES:
            branch = _branch_circuit(n, basis, readout)
            rho_b = evolve_density(branch, [], rho, mode.noise)
            ez = expectation_z_density(rho_b, readout, mode.noise)
            if mode.shots is not None:
                ez = _sample_from_expectation(np.asarray(ez), mode.shots, rng)
            comps.append(float(ez))
    else:
        psi = run_circuit(circuit, params, input)
        for basis in BASES:
            branch = _branch_circuit(n, basis, readout)
            amps = run_circuit_batch(branch, [], psi.amplitudes)
            ez = float(expectation_z_batch(amps, n, readout))
            if mode.shots is not None:
                ez = _sample_from_expectation(np.asarray(ez), mode.shots, rng)
            comps.append(float(ez))
    return BlochVector(*comps)


def readout_bloch_batch(circuit: Circuit, params, amps: np.ndarray, readout: int,
                        mode: RunMode = EXACT, seed: int | None = None) -> np.ndarray:
    """Bloch vectors for a batch of input amplitude rows; returns (B, 3).

    The statevector paths are evaluated batched; the noisy density path
    falls back to a per-row loop.
    """
    n = circuit.n_qubits
    if mode.shots is not None and seed is None:
        raise ValueError("shot mode requires a seed")
    rng = np.random.default_rng(seed) if mode.shots is not None else None
    out = np.empty((amps.shape[0], 3))
    if mode.is_noisy:
        rhos = np.einsum("bi,bj->bij", amps, amps.conj())
        evolved = evolve_density_batch(circuit, params, rhos, mode.noise)
        for col, basis in enumerate(BASES):
            branch = _branch_circuit(n, basis, readout)
            rho_b = evolve_density_batch(branch, [], evolved, mode.noise)
            ez = expectation_z_density_batch(rho_b, n, readout, mode.noise)
            if mode.shots is not None:
                ez = _sample_from_expectation(ez, mode.shots, rng)
            out[:, col] = ez
        return out
    evolved = run_circuit_batch(circuit, params, amps)
    for col, basis in enumerate(BASES):
        branch = _branch_circuit(n, basis, readout)
        branch_amps = run_circuit_batch(branch, [], evolved)
        ez = expectation_z_batch(branch_amps, n, readout)
        if mode.shots is not None:
            ez = _sample_from_expectation(ez, mode.shots, rng)
        out[:, col] = ez
    return out


def reconstruct_density(b: BlochVector) -> DensityMatrix:
    """Single-qubit density matrix (I + rx*sx + ry*sy + rz*sz) / 2."""
    mat = 0.5 * np.array(
        [
            [1.0 + b.rz, b.rx - 1j * b.ry],
            [b.rx + 1j * b.ry, 1.0 - b.rz],
        ],
        dtype=complex,
    )
    return DensityMatrix(1, mat)


def bloch_angles(b: BlochVector) -> tuple[float, float]:
    """Polar and azimuthal angles (theta in [0, pi], phi in [0, 2*pi)).

    theta = 0 is the north pole |0>; phi is measured from the +x axis.
    Raises for a vector too short to define a direction.
    """
    n = b.norm()
    if n <= 1e-9:
        raise ValueError("Bloch vector norm is ~0; direction undefined")
    theta = math.acos(max(-1.0, min(1.0, b.rz / n)))
    phi = math.atan2(b.ry, b.rx) % (2.0 * math.pi)
    return theta, phi
