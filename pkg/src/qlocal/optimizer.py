"""Composite objective over circuit parameters and the multi-round solve driver.

The composite value chains the auxiliary objective, the probability-to-q
transform, and the simulated circuit probabilities; its parameter gradient is
(dE/dq) * (dq/dP) * (dP/dtheta) with the last factor from the parameter-shift
rule.  Two backends are provided: a quasi-Newton path with analytic gradients
(exact or shot-estimated) and gradient-free SPSA for shot-noise runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .auxiliary import (AuxiliaryObjective, QVector, TransformParams, compile_objective,
                        evaluate, gradient_q_at, q_from_p, q_vector_from_shots)
from .model import PolynomialModel, as_spins, energy, interaction_graph
from .neighborhood import (BASE_N, BITMASK, DEFAULT_GROUP_CAP, EXPLICIT, SPARSE_WALK,
                           UNRANKED, GroupEncoding, base_n_encoding, bitmask_encoding,
                           coloring_swap_groups, enumerate_connected, enumerate_full,
                           explicit_encoding, sparse_walk_encoding, unranked_encoding)
from .recovery import recover_best
from .simulator import (AnsatzShape, prepare, prepare_batch, prob_jacobian,
                        probabilities, sample)

NEIGHBORHOODS = ("full", "connected", "coloring-swaps")
METHODS = ("quasi-newton", "spsa")


@dataclass
class SolverConfig:
    """Hyperparameters of one solver run.

    ``n_shots = None`` evaluates exact probabilities; ``m_scale = None``
    defaults to the spin count at solve time.  ``max_rounds`` caps the
    restart loop, which also stops at the first non-improving round.
    """

    r: int = 1
    neighborhood: str = "full"
    encoding: str = EXPLICIT
    n_layers: int = 4
    n_shots: int | None = None
    alpha: float = 2.0
    m_scale: float | None = None
    n_recover: int = 1
    max_rounds: int = 1
    method: str = "quasi-newton"
    max_iterations: int = 15000
    f_tolerance: float = 1e-12
    grad_tolerance: float = 1e-8
    spsa_a: float = 0.15
    spsa_c: float = 0.1
    spsa_stability: float | None = None
    initial: str = "ones"
    coloring_k: int | None = None
    group_cap: int = DEFAULT_GROUP_CAP
    seed: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.neighborhood not in NEIGHBORHOODS:
            raise ValueError(f"unknown neighborhood {self.neighborhood!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        if self.n_shots is not None and self.n_shots < 1:
            raise ValueError("n_shots must be >= 1 when set")
        if self.n_recover < 1 or self.max_rounds < 1:
            raise ValueError("n_recover and max_rounds must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.initial not in ("ones", "random"):
            raise ValueError(f"unknown initial policy {self.initial!r}")


@dataclass
class RoundResult:
    """Incumbent after one optimization round."""

    best_solution: np.ndarray
    best_energy: float
    theta_final: np.ndarray
    iterations: int
    shots_used: int


class NonFiniteObjectiveError(RuntimeError):
    """The objective or its gradient produced NaN or infinity."""


def build_encoding(model: PolynomialModel, config: SolverConfig) -> GroupEncoding:
    """Construct the outcome codec implied by a solver configuration."""
    n = model.n_spins
    if config.neighborhood == "coloring-swaps":
        if config.coloring_k is None or n % config.coloring_k:
            raise ValueError("coloring-swaps needs coloring_k dividing the spin count")
        if config.encoding != EXPLICIT:
            raise ValueError("coloring swap groups use the explicit codec")
        return explicit_encoding(n, coloring_swap_groups(n // config.coloring_k, config.coloring_k))
    if config.encoding == EXPLICIT:
        if config.neighborhood == "full":
            groups = enumerate_full(n, config.r, config.group_cap)
        else:
            groups = enumerate_connected(interaction_graph(model), config.r, config.group_cap)
        return explicit_encoding(n, groups)
    if config.encoding == UNRANKED:
        if config.neighborhood != "full":
            raise ValueError("the unranked codec addresses the full neighborhood")
        return unranked_encoding(n, config.r)
    if config.encoding == BASE_N:
        if config.neighborhood != "full":
            raise ValueError("the base-n codec addresses the full neighborhood")
        return base_n_encoding(n, config.r)
    if config.encoding == SPARSE_WALK:
        if config.neighborhood != "connected":
            raise ValueError("the sparse-walk codec addresses the connected neighborhood")
        return sparse_walk_encoding(interaction_graph(model), config.r)
    if config.encoding == BITMASK:
        return bitmask_encoding(n)
    raise ValueError(f"unknown encoding {config.encoding!r}")


def _valid_outcomes(obj: AuxiliaryObjective, upto: int) -> list[int]:
    return [mu for mu in range(upto) if obj.decode_group(mu) is not None]


def _exact_q(obj: AuxiliaryObjective, probs: np.ndarray, params: TransformParams) -> QVector:
    valid = _valid_outcomes(obj, min(obj.encoding.n_variables, probs.size))
    qs, _ = q_from_p(probs[valid], params)
    return QVector({mu: float(qs[t]) for t, mu in enumerate(valid)})


def composite_eval(obj: AuxiliaryObjective, shape: AnsatzShape, theta,
                   n_shots: int | None, params: TransformParams, seed=None) -> float:
    """Auxiliary value at the circuit parameters.

    Exact mode transforms the full probability vector; shot mode draws a fresh
    n_shots sample (deterministic per seed) and uses the sparse estimate.
    """
    state = prepare(shape, theta)
    if n_shots is None:
        q = _exact_q(obj, probabilities(state), params)
    else:
        q = q_vector_from_shots(sample(state, n_shots, seed), params, obj.encoding)
    return evaluate(obj, q)


def composite_grad(obj: AuxiliaryObjective, shape: AnsatzShape, theta,
                   n_shots: int | None, params: TransformParams, seed=None) -> np.ndarray:
    """Parameter gradient (dE/dq)(dq/dP)(dP/dtheta).

    In shot mode the base point and each shifted circuit are sampled
    independently with sub-seeds derived from `seed`; the shifted-sample
    Jacobian columns have at most 2 * n_shots nonzero entries each.
    """
    theta = np.asarray(theta, dtype=float)
    if n_shots is None:
        probs = probabilities(prepare(shape, theta))
        valid = _valid_outcomes(obj, min(obj.encoding.n_variables, probs.size))
        qs, dqs = q_from_p(probs[valid], params)
        q = QVector({mu: float(qs[t]) for t, mu in enumerate(valid)})
        dedq = gradient_q_at(obj, q, valid)
        weights = np.array([dedq[mu] for mu in valid]) * dqs
        jac = prob_jacobian(shape, theta)
        if jac.shape[0] == 0:
            return np.zeros(0)
        return jac[:, valid] @ weights

    n_params = shape.n_params
    children = np.random.SeedSequence(seed).spawn(1 + 2 * n_params)
    base = sample(prepare(shape, theta), n_shots, children[0])
    q_base = q_vector_from_shots(base, params, obj.encoding)
    if n_params == 0:
        return np.zeros(0)
    shifts = np.repeat(theta[None, :], 2 * n_params, axis=0)
    for j in range(n_params):
        shifts[2 * j, j] += 0.5 * math.pi
        shifts[2 * j + 1, j] -= 0.5 * math.pi
    states = prepare_batch(shape, shifts)
    columns: list[dict[int, float]] = []
    for j in range(n_params):
        plus = sample(states[2 * j], n_shots, children[1 + 2 * j])
        minus = sample(states[2 * j + 1], n_shots, children[2 + 2 * j])
        col: dict[int, float] = {}
        for mu, c in plus.counts.items():
            col[mu] = col.get(mu, 0.0) + 0.5 * c / n_shots
        for mu, c in minus.counts.items():
            col[mu] = col.get(mu, 0.0) - 0.5 * c / n_shots
        columns.append(col)
    needed = sorted({mu for col in columns for mu in col if obj.decode_group(mu) is not None})
    dedq = gradient_q_at(obj, q_base, needed)
    dqdp = {}
    for mu in needed:
        _, dq = q_from_p(base.counts.get(mu, 0) / base.total, params)
        dqdp[mu] = dq
    grad = np.zeros(n_params)
    for j, col in enumerate(columns):
        acc = 0.0
        for mu, jval in col.items():
            if mu in dqdp:
                acc += dedq[mu] * dqdp[mu] * jval
        grad[j] = acc
    return grad


@dataclass
class MinimizeResult:
    theta: np.ndarray
    value: float
    iterations: int
    evaluations: int


def minimize_quasi_newton(f, grad, theta0, max_iterations: int = 15000,
                          f_tolerance: float = 1e-12, grad_tolerance: float = 1e-8) -> MinimizeResult:
    """Limited-memory quasi-Newton descent over unbounded parameters.

    Stops on gradient norm below grad_tolerance, relative objective decrease
    below f_tolerance, or the iteration cap; returns the best point seen.
    Non-finite objective or gradient values abort with a diagnostic.
    """
    theta0 = np.asarray(theta0, dtype=float)
    best = {"theta": theta0.copy(), "value": math.inf}
    evaluations = [0]

    def wrapped(t):
        evaluations[0] += 1
        v = float(f(t))
        if not math.isfinite(v):
            raise NonFiniteObjectiveError(f"objective value {v} at |theta| = {np.linalg.norm(t):.4g}")
        if v < best["value"]:
            best["value"] = v
            best["theta"] = np.array(t, dtype=float, copy=True)
        return v

    def wrapped_grad(t):
        g = np.asarray(grad(t), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteObjectiveError("gradient has non-finite entries")
        return g

    iterations = 0
    if max_iterations > 0 and theta0.size > 0:
        res = _scipy_minimize(wrapped, theta0, jac=wrapped_grad, method="L-BFGS-B",
                              options={"maxiter": max_iterations,
                                       "ftol": f_tolerance,
                                       "gtol": grad_tolerance})
        iterations = int(res.nit)
    if not math.isfinite(best["value"]):
        wrapped(theta0)
    return MinimizeResult(best["theta"], best["value"], iterations, evaluations[0])


def minimize_spsa(f, theta0, iterations: int, seed, a: float = 0.15, c: float = 0.1,
                  stability: float | None = None) -> MinimizeResult:
    """Simultaneous-perturbation descent; returns the best evaluated point.

    Gains follow a_k = a/(k+1+A)^0.602 and c_k = c/(k+1)^0.101 with
    A = iterations/10 unless overridden.  Perturbations are Rademacher.
    Steps with non-finite estimates are skipped, not fatal.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    rng = np.random.default_rng(seed)
    big_a = iterations / 10.0 if stability is None else stability
    best_theta = theta.copy()
    best_value = math.inf
    evaluations = 0
    for k in range(iterations):
        a_k = a / (k + 1 + big_a) ** 0.602
        c_k = c / (k + 1) ** 0.101
        delta = rng.integers(0, 2, theta.size) * 2.0 - 1.0
        f_plus = float(f(theta + c_k * delta))
        f_minus = float(f(theta - c_k * delta))
        evaluations += 2
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            continue
        if f_plus < best_value:
            best_value, best_theta = f_plus, theta + c_k * delta
        if f_minus < best_value:
            best_value, best_theta = f_minus, theta - c_k * delta
        theta = theta - a_k * (f_plus - f_minus) / (2.0 * c_k) * delta
    final_value = float(f(theta))
    evaluations += 1
    if math.isfinite(final_value) and final_value < best_value:
        best_value, best_theta = final_value, theta
    if not math.isfinite(best_value):
        best_theta, best_value = np.asarray(theta0, dtype=float).copy(), final_value
    return MinimizeResult(best_theta, best_value, iterations, evaluations)


def _initial_solution(model: PolynomialModel, config: SolverConfig, rng) -> np.ndarray:
    if config.initial == "ones":
        return np.ones(model.n_spins, dtype=np.int8)
    return (rng.integers(0, 2, model.n_spins) * 2 - 1).astype(np.int8)


def solve(model: PolynomialModel, config: SolverConfig, z0=None):
    """Multi-round variational local search.

    Each round compiles the auxiliary objective at the current anchor,
    optimizes freshly initialized circuit parameters, estimates q at the
    optimum, and keeps the best of the n_recover most probable decoded
    solutions.  Rounds restart from strict improvements and stop early at the
    first round without one.  Returns (final RoundResult, full history).
    """
    encoding = build_encoding(model, config)
    m_scale = float(model.n_spins) if config.m_scale is None else config.m_scale
    params = TransformParams(config.alpha, m_scale)
    shape = AnsatzShape(max(2, encoding.n_qubits), config.n_layers)
    root = np.random.SeedSequence(config.seed)
    init_ss, *round_seeds = root.spawn(1 + config.max_rounds)
    if z0 is not None:
        z = as_spins(z0).copy()
        if z.shape != (model.n_spins,):
            raise ValueError("z0 length must match the model")
    else:
        z = _initial_solution(model, config, np.random.default_rng(init_ss))
    current_energy = energy(model, z)
    history: list[RoundResult] = []
    for round_ss in round_seeds:
        theta_ss, opt_ss, final_ss, spsa_ss = round_ss.spawn(4)
        obj = compile_objective(model, z, encoding)
        theta0 = np.random.default_rng(theta_ss).uniform(0.0, 2.0 * math.pi, shape.n_params)
        shots_used = [0]

        def objective(t):
            seed = opt_ss.spawn(1)[0]
            if config.n_shots is not None:
                shots_used[0] += config.n_shots
            return composite_eval(obj, shape, t, config.n_shots, params, seed)

        def objective_grad(t):
            seed = opt_ss.spawn(1)[0]
            if config.n_shots is not None:
                shots_used[0] += (2 * shape.n_params + 1) * config.n_shots
            return composite_grad(obj, shape, t, config.n_shots, params, seed)

        if shape.n_params == 0 or config.max_iterations == 0:
            result = MinimizeResult(theta0, math.nan, 0, 0)
        elif config.method == "quasi-newton":
            result = minimize_quasi_newton(objective, objective_grad, theta0,
                                           config.max_iterations, config.f_tolerance,
                                           config.grad_tolerance)
        else:
            result = minimize_spsa(objective, theta0, config.max_iterations, spsa_ss,
                                   config.spsa_a, config.spsa_c, config.spsa_stability)
        theta = result.theta
        state = prepare(shape, theta)
        if config.n_shots is None:
            q = _exact_q(obj, probabilities(state), params)
        else:
            q = q_vector_from_shots(sample(state, config.n_shots, final_ss), params, encoding)
            shots_used[0] += config.n_shots
        candidate, candidate_energy = recover_best(obj, q, config.n_recover)
        improved = candidate_energy < current_energy
        if improved:
            z, current_energy = candidate, candidate_energy
        history.append(RoundResult(z.copy(), current_energy, theta, result.iterations, shots_used[0]))
        if not improved:
            break
    return history[-1], history
