"""Dense statevector and density-matrix simulation of small parameterized circuits.

Qubit 0 is the least significant bit of the basis-state index, so the
amplitude at index ``i`` belongs to the basis state whose qubit-q bit is
``(i >> q) & 1``.  All amplitudes are complex128.  Noise is modeled as a
per-gate depolarizing channel plus a classical readout flip; the density
path is only needed when a :class:`NoiseSpec` is nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "GateOp",
    "Circuit",
    "StateVector",
    "DensityMatrix",
    "NoiseSpec",
    "RunMode",
    "EXACT",
    "gate",
    "apply_gate",
    "run_circuit",
    "expectation_z",
    "sample_expectation_z",
    "evolve_density",
    "expectation_z_density",
    "measure_z",
]

# Number of scalar parameters each parameterized gate kind consumes.
PARAM_WIDTH = {
    "x": 0, "y": 0, "z": 0, "h": 0, "s": 0, "sdg": 0,
    "rx": 1, "ry": 1, "rz": 1,
    "cnot": 0, "crz": 1, "block2q": 3,
}

TWO_QUBIT_KINDS = frozenset({"cnot", "crz", "block2q"})

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
# Basis order for two-qubit matrices: sub-index 2*b_first + b_second, where
# "first" is targets[0] (the control for cnot/crz).
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

PAULIS = {"x": _X, "y": _Y, "z": _Z}


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


def _crz(theta: float) -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[2, 2] = np.exp(-0.5j * theta)
    m[3, 3] = np.exp(0.5j * theta)
    return m


def _block2q(a: float, b: float, c: float) -> np.ndarray:
    """Entangling block: RY(a) x RY(b), CNOT(first -> second), RY(c) on second."""
    pre = np.kron(_ry(a), _ry(b))
    post = np.kron(_I2, _ry(c))
    return post @ _CNOT @ pre


@dataclass(frozen=True)
class GateOp:
    """One gate in a circuit.

    Parameterized kinds carry exactly one of ``param_slot`` (index of the
    first of ``PARAM_WIDTH[kind]`` consecutive slots in the shared parameter
    vector) or ``fixed_angle`` (a literal angle, or an angle tuple for
    ``block2q``).
    """

    kind: str
    targets: tuple[int, ...]
    param_slot: int | None = None
    fixed_angle: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in PARAM_WIDTH:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        want = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.targets) != want:
            raise ValueError(f"{self.kind} expects {want} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate targets in {self.kind}: {self.targets}")
        width = PARAM_WIDTH[self.kind]
        if width == 0:
            if self.param_slot is not None or self.fixed_angle is not None:
                raise ValueError(f"{self.kind} takes no parameter")
        else:
            if (self.param_slot is None) == (self.fixed_angle is None):
                raise ValueError(
                    f"{self.kind} needs exactly one of param_slot/fixed_angle"
                )
            if self.fixed_angle is not None:
                angles = self.fixed_angle
                angles = (angles,) if np.isscalar(angles) else tuple(angles)
                if len(angles) != width:
                    raise ValueError(
                        f"{self.kind} needs {width} fixed angle(s), got {len(angles)}"
                    )
                object.__setattr__(self, "fixed_angle", angles if width > 1 else angles[0])

    @property
    def n_slots(self) -> int:
        return PARAM_WIDTH[self.kind] if self.param_slot is not None else 0

    def angles(self, params: np.ndarray) -> tuple[float, ...]:
        """Resolve this op's angles from the shared parameter vector."""
        width = PARAM_WIDTH[self.kind]
        if width == 0:
            return ()
        if self.fixed_angle is not None:
            fa = self.fixed_angle
            return (fa,) if np.isscalar(fa) else tuple(fa)
        s = self.param_slot
        if s + width > len(params):
            raise ValueError(
                f"gate {self.kind} wants slots [{s}, {s + width}) but only "
                f"{len(params)} parameters were given"
            )
        return tuple(float(p) for p in params[s : s + width])


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over ``n_qubits`` with ``n_params`` shared parameters."""

    n_qubits: int
    ops: tuple[GateOp, ...]
    n_params: int = field(default=-1)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        object.__setattr__(self, "ops", tuple(self.ops))
        slots: set[int] = set()
        for op in self.ops:
            if any(t < 0 or t >= self.n_qubits for t in op.targets):
                raise ValueError(
                    f"gate {op.kind} targets {op.targets} out of range for "
                    f"{self.n_qubits} qubits"
                )
            if op.param_slot is not None:
                span = range(op.param_slot, op.param_slot + PARAM_WIDTH[op.kind])
                if slots.intersection(span):
                    raise ValueError(f"parameter slots {list(span)} reused")
                slots.update(span)
        inferred = len(slots)
        if self.n_params == -1:
            object.__setattr__(self, "n_params", inferred)
        elif self.n_params != inferred:
            raise ValueError(
                f"n_params={self.n_params} but ops consume {inferred} slots"
            )
        if slots and (min(slots) != 0 or max(slots) != self.n_params - 1):
            raise ValueError("parameter slots must cover [0, n_params) exactly")

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.n_qubits != other.n_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.ops + other.ops)


def gate(kind: str, *targets: int, slot: int | None = None,
         angle: float | tuple[float, ...] | None = None) -> GateOp:
    """Shorthand constructor: ``gate('ry', 0, angle=0.3)``."""
    return GateOp(kind, tuple(targets), param_slot=slot, fixed_angle=angle)


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValueError(f"{what} contains NaN or Inf")


@dataclass(frozen=True)
class StateVector:
    """A normalized pure state on ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        _check_finite(amps, "state vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state vector norm {norm!r} is not 1")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        """The all-|0> computational basis state."""
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, unit-trace density operator on ``n_qubits`` qubits."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        dim = 2**self.n_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {mat.shape}")
        _check_finite(mat, "density matrix")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"density matrix trace {tr!r} is not 1")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def zero(cls, n_qubits: int) -> "DensityMatrix":
        mat = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
        mat[0, 0] = 1.0
        return cls(n_qubits, mat)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class NoiseSpec:
    """Two-parameter gate noise plus a classical measurement flip probability."""

    p_depol_1q: float = 0.0
    p_depol_2q: float = 0.0
    p_meas_flip: float = 0.0

    def __post_init__(self):
        for name in ("p_depol_1q", "p_depol_2q", "p_meas_flip"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name}={p} outside [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self.p_depol_1q == 0.0 and self.p_depol_2q == 0.0 and self.p_meas_flip == 0.0


@dataclass(frozen=True)
class RunMode:
    """How readout expectations are produced.

    ``shots=None`` means exact expectation values; otherwise each expectation
    is the mean of ``shots`` simulated +-1 outcomes (a seed must then be
    supplied to the measuring function).  ``noise=None`` selects the pure
    statevector path; a nonzero :class:`NoiseSpec` selects the density path.
    """

    shots: int | None = None
    noise: NoiseSpec | None = None

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.noise is not None and self.noise.is_zero:
            object.__setattr__(self, "noise", None)

    @property
    def is_exact(self) -> bool:
        return self.shots is None

    @property
    def is_noisy(self) -> bool:
        return self.noise is not None


EXACT = RunMode()


# ---------------------------------------------------------------------------
# index plumbing


@lru_cache(maxsize=None)
def _pair_indices(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs (bit q = 0, bit q = 1) for an n-qubit register."""
    idx = np.arange(2**n)
    i0 = idx[(idx >> q) & 1 == 0]
    i1 = i0 + (1 << q)
    i0.flags.writeable = False
    i1.flags.writeable = False
    return i0, i1


@lru_cache(maxsize=None)
def _quad_indices(n: int, t0: int, t1: int) -> tuple[np.ndarray, ...]:
    """Index arrays for sub-states 00, 01, 10, 11 of qubits (t0, t1).

    Sub-index convention: s = 2*bit(t0) + bit(t1).
    """
    idx = np.arange(2**n)
    base = idx[((idx >> t0) & 1 == 0) & ((idx >> t1) & 1 == 0)]
    quads = (base, base + (1 << t1), base + (1 << t0), base + (1 << t0) + (1 << t1))
    for q in quads:
        q.flags.writeable = False
    return quads


@lru_cache(maxsize=None)
def _z_signs(n: int, q: int) -> np.ndarray:
    """+1 where qubit q reads 0, -1 where it reads 1."""
    idx = np.arange(2**n)
    signs = 1.0 - 2.0 * ((idx >> q) & 1)
    signs.flags.writeable = False
    return signs


def _apply_1q(amps: np.ndarray, mat: np.ndarray, n: int, q: int) -> np.ndarray:
    """Apply a 2x2 matrix to qubit q of amplitudes shaped (..., 2**n).

    ``mat`` may be (2, 2) or batch-shaped (..., 2, 2) with leading axes
    broadcastable against the amplitude batch.
    """
    i0, i1 = _pair_indices(n, q)
    a0 = amps[..., i0]
    a1 = amps[..., i1]
    m = np.asarray(mat)
    out = np.empty_like(amps)
    out[..., i0] = m[..., 0, 0, None] * a0 + m[..., 0, 1, None] * a1
    out[..., i1] = m[..., 1, 0, None] * a0 + m[..., 1, 1, None] * a1
    return out


def _apply_2q(amps: np.ndarray, mat4: np.ndarray, n: int, t0: int, t1: int) -> np.ndarray:
    """Apply a 4x4 matrix to qubits (t0, t1) of amplitudes shaped (..., 2**n)."""
    quads = _quad_indices(n, t0, t1)
    a = [amps[..., qd] for qd in quads]
    out = np.empty_like(amps)
    for r in range(4):
        out[..., quads[r]] = (
            mat4[r, 0] * a[0] + mat4[r, 1] * a[1] + mat4[r, 2] * a[2] + mat4[r, 3] * a[3]
        )
    return out


def op_matrix(op: GateOp, params: np.ndarray | None = None) -> np.ndarray:
    """The 2x2 or 4x4 unitary of a gate, with parameters resolved."""
    params = np.asarray(params if params is not None else [], dtype=float)
    ang = op.angles(params)
    kind = op.kind
    if kind == "x":
        return _X
    if kind == "y":
        return _Y
    if kind == "z":
        return _Z
    if kind == "h":
        return _H
    if kind == "s":
        return _S
    if kind == "sdg":
        return _SDG
    if kind == "rx":
        return _rx(ang[0])
    if kind == "ry":
        return _ry(ang[0])
    if kind == "rz":
        return _rz(ang[0])
    if kind == "cnot":
        return _CNOT
    if kind == "crz":
        return _crz(ang[0])
    if kind == "block2q":
        return _block2q(*ang)
    raise ValueError(f"unknown gate kind {kind!r}")  # unreachable


def _apply_op(amps: np.ndarray, op: GateOp, params: np.ndarray, n: int) -> np.ndarray:
    mat = op_matrix(op, params)
    if op.kind in TWO_QUBIT_KINDS:
        return _apply_2q(amps, mat, n, op.targets[0], op.targets[1])
    return _apply_1q(amps, mat, n, op.targets[0])


# ---------------------------------------------------------------------------
# statevector operations


def apply_gate(state: StateVector, op: GateOp, params=None) -> StateVector:
    """Apply one gate to a pure state and return the new state."""
    if any(t >= state.n_qubits for t in op.targets):
        raise ValueError(
            f"gate targets {op.targets} out of range for {state.n_qubits} qubits"
        )
    params = np.asarray(params if params is not None else [], dtype=float)
    if op.param_slot is not None and op.param_slot + PARAM_WIDTH[op.kind] > len(params):
        raise ValueError(f"gate {op.kind} requires a parameter that was not supplied")
    amps = _apply_op(state.amplitudes, op, params, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def run_circuit(circuit: Circuit, params, input: StateVector | None = None) -> StateVector:
    """Apply every gate of ``circuit`` in order.  Norm is preserved."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {params.shape}"
        )
    state = input if input is not None else StateVector.zero(circuit.n_qubits)
    if state.n_qubits != circuit.n_qubits:
        raise ValueError("input state width does not match circuit")
    amps = state.amplitudes
    for op in circuit.ops:
        amps = _apply_op(amps, op, params, circuit.n_qubits)
    return StateVector(circuit.n_qubits, amps)


def run_circuit_batch(circuit: Circuit, params, amps: np.ndarray) -> np.ndarray:
    """Run one circuit over a batch of raw amplitude rows shaped (B, 2**n)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {params.shape}"
        )
    if amps.shape[-1] != 2**circuit.n_qubits:
        raise ValueError(
            f"amplitude rows have length {amps.shape[-1]}, "
            f"expected {2**circuit.n_qubits}"
        )
    for op in circuit.ops:
        amps = _apply_op(amps, op, params, circuit.n_qubits)
    return amps


def expectation_z(state: StateVector, qubit: int) -> float:
    """Exact <sigma_z> of one qubit: sum of +-1-signed probabilities."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    signs = _z_signs(state.n_qubits, qubit)
    return float(np.real(np.sum(signs * np.abs(state.amplitudes) ** 2)))


def expectation_z_batch(amps: np.ndarray, n: int, qubit: int) -> np.ndarray:
    signs = _z_signs(n, qubit)
    return np.real(np.sum(signs * np.abs(amps) ** 2, axis=-1))


def sample_expectation_z(state: StateVector, qubit: int, shots: int, seed: int) -> float:
    """Mean of ``shots`` simulated +-1 measurements; deterministic given seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    ez = expectation_z(state, qubit)
    return _sample_from_expectation(np.asarray(ez), shots, np.random.default_rng(seed))


def _sample_from_expectation(ez, shots: int, rng: np.random.Generator):
    """Binomial shot simulation of +-1 outcomes with P(+1) = (1 + ez) / 2."""
    p1 = np.clip((1.0 + np.asarray(ez)) / 2.0, 0.0, 1.0)
    k = rng.binomial(shots, p1)
    est = 2.0 * k / shots - 1.0
    return float(est) if np.ndim(ez) == 0 else est


# ---------------------------------------------------------------------------
# density-matrix operations (raw helpers accept batches shaped (..., d, d))


def _apply_mat_rho(rho: np.ndarray, mat: np.ndarray, n: int, targets: tuple[int, ...]) -> np.ndarray:
    """U rho U^dagger for a local 1- or 2-qubit unitary.

    The row-wise appliers compute x -> x U^T on the last axis, so U rho is
    obtained through a transpose and rho U^dagger by applying conj(U).
    """
    rt = rho.swapaxes(-1, -2)
    if len(targets) == 2:
        left = _apply_2q(rt, mat, n, targets[0], targets[1]).swapaxes(-1, -2)
        return _apply_2q(left, mat.conj(), n, targets[0], targets[1])
    left = _apply_1q(rt, mat, n, targets[0]).swapaxes(-1, -2)
    return _apply_1q(left, mat.conj(), n, targets[0])


@lru_cache(maxsize=None)
def _block_meshes(n: int, targets: tuple[int, ...]) -> tuple:
    """Open-mesh indices of the diagonal blocks over the target qubits' values."""
    if len(targets) == 1:
        groups = _pair_indices(n, targets[0])
    else:
        groups = _quad_indices(n, targets[0], targets[1])
    return tuple(np.ix_(g, g) for g in groups)


def _depolarize(rho: np.ndarray, n: int, targets: tuple[int, ...], p: float) -> np.ndarray:
    """Replace the marginal on ``targets`` with the maximally mixed state w.p. p.

    The affected qubits' Bloch components shrink by exactly (1 - p): the
    channel keeps the partial trace over the targets and spreads it evenly
    over the diagonal blocks, zeroing the target-coherence blocks.
    """
    if p == 0.0:
        return rho
    meshes = _block_meshes(n, targets)
    traced = rho[..., meshes[0][0], meshes[0][1]].copy()
    for mesh in meshes[1:]:
        traced += rho[..., mesh[0], mesh[1]]
    out = (1.0 - p) * rho
    share = p / len(meshes)
    for mesh in meshes:
        out[..., mesh[0], mesh[1]] += share * traced
    return out


def _evolve_density_raw(circuit: Circuit, params: np.ndarray, rho: np.ndarray,
                        noise: NoiseSpec) -> np.ndarray:
    n = circuit.n_qubits
    for op in circuit.ops:
        mat = op_matrix(op, params)
        rho = _apply_mat_rho(rho, mat, n, op.targets)
        if op.kind in TWO_QUBIT_KINDS:
            rho = _depolarize(rho, n, op.targets, noise.p_depol_2q)
        else:
            rho = _depolarize(rho, n, op.targets, noise.p_depol_1q)
    return rho


def evolve_density(circuit: Circuit, params, input: DensityMatrix,
                   noise: NoiseSpec | None = None) -> DensityMatrix:
    """Gate-by-gate evolution with a depolarizing channel after each gate."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {params.shape}"
        )
    if input.n_qubits != circuit.n_qubits:
        raise ValueError("input density matrix width does not match circuit")
    noise = noise if noise is not None else NoiseSpec()
    rho = _evolve_density_raw(circuit, params, input.matrix, noise)
    # Re-symmetrize to shave off accumulated rounding before validation.
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(circuit.n_qubits, rho)


def evolve_density_batch(circuit: Circuit, params, rhos: np.ndarray,
                         noise: NoiseSpec | None = None) -> np.ndarray:
    """Evolve a batch of raw density matrices shaped (B, d, d)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(
            f"circuit has {circuit.n_params} parameters, got {params.shape}"
        )
    return _evolve_density_raw(circuit, params, rhos, noise or NoiseSpec())


def expectation_z_density(rho: DensityMatrix, qubit: int,
                          noise: NoiseSpec | None = None) -> float:
    """<sigma_z> of one qubit of a density matrix, shrunk by the readout flip.

    A classical flip with probability p maps the ideal expectation e to
    (1 - 2p) * e.
    """
    if not 0 <= qubit < rho.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    return float(expectation_z_density_batch(rho.matrix, rho.n_qubits, qubit, noise))


def expectation_z_density_batch(rhos: np.ndarray, n: int, qubit: int,
                                noise: NoiseSpec | None = None) -> np.ndarray:
    signs = _z_signs(n, qubit)
    diag = np.einsum("...ii->...i", rhos)
    ez = np.real(np.sum(signs * diag, axis=-1))
    flip = noise.p_meas_flip if noise is not None else 0.0
    return (1.0 - 2.0 * flip) * ez


# ---------------------------------------------------------------------------
# mode dispatch


def measure_z(circuit: Circuit, params, input: StateVector, qubit: int,
              mode: RunMode = EXACT, seed: int | None = None) -> float:
    """Run a circuit and read <sigma_z> of one qubit under the given mode."""
    if mode.is_noisy:
        rho = evolve_density(circuit, params, input.to_density(), mode.noise)
        ez = expectation_z_density(rho, qubit, mode.noise)
    else:
        ez = expectation_z(run_circuit(circuit, params, input), qubit)
    if mode.is_exact:
        return ez
    if seed is None:
        raise ValueError("shot mode requires a seed")
    return _sample_from_expectation(np.asarray(ez), mode.shots, np.random.default_rng(seed))
