"""Shared independent oracles for the test suite.

Everything here recomputes expected values from first principles (dense
enumeration, explicit matrix algebra, direct products) rather than via the
library code paths under test.
"""
import itertools

import numpy as np

from qlocal.model import PolynomialModel, energy
from qlocal.neighborhood import decode


def random_quadratic_model(rng, n, density=0.7, with_linear=True):
    lin = {}
    quad = {}
    if with_linear:
        for i in range(n):
            if rng.random() < density:
                lin[i] = float(rng.normal())
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                quad[(i, j)] = float(rng.normal())
    return PolynomialModel(n, lin, quad)


def decoded_energy(model, encoding, z0, z_vertex):
    """Energy of the solution obtained by flipping every group with z = -1."""
    z = np.array(z0, dtype=np.int8).copy()
    for mu, zk in enumerate(z_vertex):
        if zk == -1:
            group = decode(encoding, mu)
            assert group is not None
            for i in group:
                z[i] = -z[i]
    return energy(model, z)


def brute_force_reference(model):
    """Plain vectorized enumeration, no incremental tricks.

    Returns (best spin vector, best energy) with the -1-first lexicographic
    tie-break.
    """
    n = model.n_spins
    bits = np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int8)
    values = np.zeros(len(bits))
    for coef, s in model.terms:
        prod = np.ones(len(bits))
        for i in s:
            prod = prod * bits[:, i]
        values += coef * prod
    best = np.argmin(values)
    # itertools.product already emits -1 before +1, so the first argmin wins ties
    return bits[best].copy(), float(values[best])


def top_s_reference(flip_probs, n_best):
    """Rank every flip subset by (probability desc, flip set lex asc)."""
    items = sorted((mu, p) for mu, p in flip_probs.items() if p > 0.0)
    configs = []
    indices = [mu for mu, _ in items]
    for flips in itertools.chain.from_iterable(
            itertools.combinations(indices, m) for m in range(len(indices) + 1)):
        fs = set(flips)
        prob = 1.0
        for mu, p in items:
            prob *= p if mu in fs else (1.0 - p)
        if prob > 0.0:
            configs.append((tuple(sorted(flips)), prob))
    configs.sort(key=lambda c: (-c[1], c[0]))
    return configs[:n_best]


# --- dense circuit oracle -------------------------------------------------

H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

ECR_GATE = np.array([[0, 1, 0, 1j],
                     [1, 0, -1j, 0],
                     [0, 1j, 0, 1],
                     [-1j, 0, 1, 0]], dtype=complex) / np.sqrt(2)


def rz_gate(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def ry_gate(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def embed_single(gate, qubit, n):
    """Full 2^n matrix for a 1-qubit gate; qubit 0 is the least significant bit."""
    op = np.eye(1, dtype=complex)
    for q in range(n - 1, -1, -1):
        op = np.kron(op, gate if q == qubit else np.eye(2, dtype=complex))
    return op


def embed_two(gate4, control, target, n):
    """Full 2^n matrix for a 2-qubit gate given in the |control target> basis."""
    dim = 1 << n
    op = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        c_in = (col >> control) & 1
        t_in = (col >> target) & 1
        rest = col & ~((1 << control) | (1 << target))
        for c_out in (0, 1):
            for t_out in (0, 1):
                row = rest | (c_out << control) | (t_out << target)
                op[row, col] = gate4[2 * c_out + t_out, 2 * c_in + t_in]
    return op


def dense_circuit_state(n_qubits, n_layers, theta):
    """Reference statevector via explicit full-matrix products."""
    dim = 1 << n_qubits
    state = np.zeros(dim, dtype=complex)
    state[0] = 1.0
    for q in range(n_qubits):
        state = embed_single(H_GATE, q, n_qubits) @ state
    pairs = [(a, a + 1) for a in range(0, n_qubits - 1, 2)]
    pairs += [(a, a + 1) for a in range(1, n_qubits - 1, 2)]
    for layer in range(n_layers):
        base = 2 * n_qubits * layer
        for q in range(n_qubits):
            state = embed_single(rz_gate(theta[base + q]), q, n_qubits) @ state
        for a, b in pairs:
            state = embed_two(ECR_GATE, a, b, n_qubits) @ state
        for q in range(n_qubits):
            state = embed_single(ry_gate(theta[base + n_qubits + q]), q, n_qubits) @ state
    return state
