"""Dense statevector simulation of the layered RZ/ECR/RY hardware ansatz.

The circuit is a Hadamard wall followed by identical layers of per-qubit RZ
rotations, a brickwork of ECR entanglers (even pairs then odd pairs, lower
index acting as control), and per-qubit RY rotations.  Qubit 0 is the least
significant bit of the outcome index.

All gate kernels run on a batch axis so that the 2*P shifted circuits of a
parameter-shift Jacobian are prepared in one pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 24

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Echoed cross-resonance entangler; basis order |control target> = |00>,|01>,|10>,|11>.
ECR_MATRIX = _INV_SQRT2 * np.array(
    [[0, 1, 0, 1j],
     [1, 0, -1j, 0],
     [0, 1j, 0, 1],
     [-1j, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class AnsatzShape:
    """Circuit geometry; 2 * n_qubits * n_layers trainable angles."""

    n_qubits: int
    n_layers: int

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("ansatz needs at least 2 qubits (the entangler acts on pairs)")
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(f"n_qubits capped at {MAX_QUBITS} for dense simulation")
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * self.n_layers

    @property
    def n_outcomes(self) -> int:
        return 1 << self.n_qubits


@dataclass
class ShotDistribution:
    """Sparse outcome counts from repeated measurement of one state."""

    counts: dict[int, int]
    total: int

    def __post_init__(self):
        if self.total < 0:
            raise ValueError("total must be non-negative")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts must sum to total")

    def frequency(self, mu: int) -> float:
        return self.counts.get(mu, 0) / self.total


def _paired(states: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """View with axis 2 selecting the value of `qubit`."""
    b = states.shape[0]
    return states.reshape(b, 1 << (n - 1 - qubit), 2, 1 << qubit)


def _apply_rz(states: np.ndarray, qubit: int, angles: np.ndarray, n: int) -> None:
    v = _paired(states, qubit, n)
    phase = np.exp(-0.5j * angles)[:, None, None]
    v[:, :, 0, :] *= phase
    v[:, :, 1, :] *= np.conj(phase)


def _apply_ry(states: np.ndarray, qubit: int, angles: np.ndarray, n: int) -> None:
    v = _paired(states, qubit, n)
    c = np.cos(0.5 * angles)[:, None, None]
    s = np.sin(0.5 * angles)[:, None, None]
    v0 = v[:, :, 0, :].copy()
    v1 = v[:, :, 1, :].copy()
    v[:, :, 0, :] = c * v0 - s * v1
    v[:, :, 1, :] = s * v0 + c * v1


def _apply_ecr(states: np.ndarray, control: int, target: int, n: int) -> None:
    hi, lo = (control, target) if control > target else (target, control)
    b = states.shape[0]
    v = states.reshape(b, 1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    c_ax, t_ax = (2, 4) if control == hi else (4, 2)

    def sl(cv: int, tv: int):
        idx: list = [slice(None)] * 6
        idx[c_ax] = cv
        idx[t_ax] = tv
        return tuple(idx)

    blocks = [v[sl(0, 0)].copy(), v[sl(0, 1)].copy(), v[sl(1, 0)].copy(), v[sl(1, 1)].copy()]
    m = ECR_MATRIX
    for row, (cv, tv) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        v[sl(cv, tv)] = m[row, 0] * blocks[0] + m[row, 1] * blocks[1] \
            + m[row, 2] * blocks[2] + m[row, 3] * blocks[3]


def ecr_pairs(n_qubits: int) -> list[tuple[int, int]]:
    """Brickwork entangler schedule: even pairs then odd pairs, control first."""
    pairs = [(a, a + 1) for a in range(0, n_qubits - 1, 2)]
    pairs += [(a, a + 1) for a in range(1, n_qubits - 1, 2)]
    return pairs


# Small registers use closed-form layer kernels: the RZ layer is diagonal
# (one sign-table product covers all qubits) and the ECR brickwork is
# parameter-free (one cached unitary per register width).
_TABLE_QUBIT_LIMIT = 10
_RZ_SIGN_CACHE: dict[int, np.ndarray] = {}
_BRICKWORK_CACHE: dict[int, np.ndarray] = {}


def _rz_sign_table(n: int) -> np.ndarray:
    table = _RZ_SIGN_CACHE.get(n)
    if table is None:
        mus = np.arange(1 << n)[:, None]
        table = np.where((mus >> np.arange(n)[None, :]) & 1, 1.0, -1.0)
        _RZ_SIGN_CACHE[n] = table
    return table


def _brickwork_matrix(n: int) -> np.ndarray:
    brick = _BRICKWORK_CACHE.get(n)
    if brick is None:
        brick = np.eye(1 << n, dtype=complex)
        for a, b in ecr_pairs(n):
            _apply_ecr(brick, a, b, n)
        _BRICKWORK_CACHE[n] = brick
    return brick  # row mu holds the image of basis state mu


def prepare_batch(shape: AnsatzShape, thetas) -> np.ndarray:
    """Statevectors for a (batch, n_params) matrix of parameter vectors."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != shape.n_params:
        raise ValueError(f"expected parameter matrix of width {shape.n_params}")
    n = shape.n_qubits
    states = np.empty((thetas.shape[0], 1 << n), dtype=complex)
    states[:] = 2.0 ** (-n / 2.0)  # the Hadamard wall always acts on |0...0>
    pairs = ecr_pairs(n)
    tabled = n <= _TABLE_QUBIT_LIMIT
    for layer in range(shape.n_layers):
        base = layer * 2 * n
        if tabled:
            angles = thetas[:, base:base + n]
            states *= np.exp(0.5j * (angles @ _rz_sign_table(n).T))
            states = states @ _brickwork_matrix(n)
        else:
            for q in range(n):
                _apply_rz(states, q, thetas[:, base + q], n)
            for a, b in pairs:
                _apply_ecr(states, a, b, n)
        for q in range(n):
            _apply_ry(states, q, thetas[:, base + n + q], n)
    return states


def prepare(shape: AnsatzShape, theta) -> np.ndarray:
    """Statevector for one parameter vector; verifies the norm to 1e-10."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (shape.n_params,):
        raise ValueError(f"expected {shape.n_params} parameters, got {theta.shape}")
    state = prepare_batch(shape, theta[None, :])[0]
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state norm drifted to {norm}; non-finite parameters?")
    return state


def probabilities(state: np.ndarray) -> np.ndarray:
    """Dense outcome probabilities |amplitude|^2."""
    return np.abs(np.asarray(state)) ** 2


def sample(state: np.ndarray, n_shots: int, seed) -> ShotDistribution:
    """n_shots i.i.d. computational-basis measurements; deterministic per seed."""
    if n_shots < 1:
        raise ValueError("need at least one shot")
    rng = np.random.default_rng(seed)
    p = probabilities(state)
    counts = rng.multinomial(n_shots, p / p.sum())
    nz = np.nonzero(counts)[0]
    return ShotDistribution({int(mu): int(counts[mu]) for mu in nz}, int(n_shots))


def prob_jacobian_column(shape: AnsatzShape, theta, index: int) -> np.ndarray:
    """dP/dtheta_index by the parameter-shift rule; entries sum to zero."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= index < shape.n_params:
        raise IndexError(f"parameter index {index} outside 0..{shape.n_params - 1}")
    shifts = np.vstack([theta, theta])
    shifts[0, index] += 0.5 * math.pi
    shifts[1, index] -= 0.5 * math.pi
    probs = probabilities(prepare_batch(shape, shifts))
    return 0.5 * (probs[0] - probs[1])


def prob_jacobian(shape: AnsatzShape, theta) -> np.ndarray:
    """All parameter-shift columns at once, shape (n_params, n_outcomes)."""
    theta = np.asarray(theta, dtype=float)
    p = shape.n_params
    if p == 0:
        return np.zeros((0, shape.n_outcomes))
    shifts = np.repeat(theta[None, :], 2 * p, axis=0)
    for j in range(p):
        shifts[2 * j, j] += 0.5 * math.pi
        shifts[2 * j + 1, j] -= 0.5 * math.pi
    probs = probabilities(prepare_batch(shape, shifts))
    return 0.5 * (probs[0::2] - probs[1::2])
