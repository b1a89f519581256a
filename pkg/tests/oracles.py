"""Independent reference implementations used to cross-check the simulator.

Everything here is deliberately built the slow, obvious way: full
Kronecker-product unitaries, explicit partial traces, and brute-force loops.
"""

import numpy as np

from qbloch.simcore import PARAM_WIDTH, Circuit, GateOp, op_matrix

KINDS_1Q = ("x", "y", "z", "h", "s", "sdg", "rx", "ry", "rz")
KINDS_2Q = ("cnot", "crz", "block2q")


def embed_unitary(mat, targets, n):
    """Expand a 1- or 2-qubit matrix to the full 2**n-dimensional unitary."""
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    if len(targets) == 1:
        (q,) = targets
        s_in = (idx >> q) & 1
        base = idx & ~(1 << q)
        for s_out in range(2):
            full[base + (s_out << q), idx] = mat[s_out, s_in]
    else:
        t0, t1 = targets
        s_in = 2 * ((idx >> t0) & 1) + ((idx >> t1) & 1)
        base = idx & ~(1 << t0) & ~(1 << t1)
        for s_out in range(4):
            rows = base + ((s_out >> 1) << t0) + ((s_out & 1) << t1)
            full[rows, idx] = mat[s_out, s_in]
    return full


def circuit_unitary(circuit, params):
    """The dense product of every gate's embedded unitary, in circuit order."""
    params = np.asarray(params, dtype=float)
    full = np.eye(2**circuit.n_qubits, dtype=complex)
    for op in circuit.ops:
        full = embed_unitary(op_matrix(op, params), op.targets, circuit.n_qubits) @ full
    return full


def random_circuit(rng, n_qubits, n_ops, p_fixed=0.3):
    """A random circuit mixing every gate kind, with sequential param slots."""
    ops = []
    slot = 0
    for _ in range(n_ops):
        if n_qubits >= 2 and rng.random() < 0.45:
            kind = KINDS_2Q[rng.integers(len(KINDS_2Q))]
            targets = tuple(rng.choice(n_qubits, size=2, replace=False).tolist())
        else:
            kind = KINDS_1Q[rng.integers(len(KINDS_1Q))]
            targets = (int(rng.integers(n_qubits)),)
        width = PARAM_WIDTH[kind]
        if width == 0:
            ops.append(GateOp(kind, targets))
        elif rng.random() < p_fixed:
            angles = tuple(rng.uniform(0, 2 * np.pi) for _ in range(width))
            ops.append(GateOp(kind, targets, fixed_angle=angles if width > 1 else angles[0]))
        else:
            ops.append(GateOp(kind, targets, param_slot=slot))
            slot += width
    return Circuit(n_qubits, ops)


def random_params(rng, circuit):
    return rng.uniform(0, 2 * np.pi, circuit.n_params)


def reduced_density_1q(amps, n, qubit):
    """Partial trace of |psi><psi| down to one qubit, by tensor reshaping."""
    t = np.asarray(amps).reshape((2,) * n)
    t = np.moveaxis(t, n - 1 - qubit, 0).reshape(2, -1)
    return t @ t.conj().T


def reduced_density_1q_from_rho(rho, n, qubit):
    """Partial trace of a density matrix down to one qubit."""
    t = np.asarray(rho).reshape((2,) * n + (2,) * n)
    keep = n - 1 - qubit
    order = [keep] + [ax for ax in range(n) if ax != keep]
    t = np.transpose(t, order + [n + ax for ax in order])
    t = t.reshape(2, 2 ** (n - 1), 2, 2 ** (n - 1))
    return np.einsum("akbk->ab", t)


PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def bloch_of_reduced(amps, n, qubit):
    """Analytic (Tr(sx rho), Tr(sy rho), Tr(sz rho)) of one qubit."""
    rho = reduced_density_1q(amps, n, qubit)
    return np.array([np.trace(PAULI[a] @ rho).real for a in "xyz"])
