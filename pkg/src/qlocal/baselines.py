"""Classical references: group-flip energy increments, first-improvement local
search, projected-gradient descent of the bilinear relaxation, and a Gray-code
brute-force oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PolynomialModel, as_spins, energy


@dataclass
class LocalSearchResult:
    solution: np.ndarray
    energy: float
    steps: int          # accepted moves
    evaluations: int    # neighbor increments computed


def delta_flip(model: PolynomialModel, spins, group) -> float:
    """Energy increment from flipping `group`, touching only intersecting terms.

    A term changes sign exactly when the group overlaps it an odd number of
    times, so the increment is -2 times the sum of those terms' current values.
    """
    z = np.asarray(spins)
    gset = set(group)
    seen: set[int] = set()
    delta = 0.0
    for i in gset:
        for t in model.terms_by_spin[i]:
            if t in seen:
                continue
            seen.add(t)
            coef, s = model.terms[t]
            odd = 0
            for j in s:
                if j in gset:
                    odd ^= 1
            if odd:
                p = coef
                for j in s:
                    p *= z[j]
                delta += p
    return float(-2.0 * delta)


def local_search(model: PolynomialModel, z0, groups) -> LocalSearchResult:
    """First-improvement descent over an ordered group neighborhood.

    Groups are scanned in size-then-lexicographic order; the first strictly
    improving flip is accepted and the scan restarts from the top.  Terminates
    at a solution no group flip improves.
    """
    order = sorted((tuple(sorted(g)) for g in groups), key=lambda g: (len(g), g))
    z = as_spins(z0).copy()
    steps = 0
    evaluations = 0
    improved = True
    while improved:
        improved = False
        for g in order:
            evaluations += 1
            if delta_flip(model, z, g) < 0.0:
                for i in g:
                    z[i] = -z[i]
                steps += 1
                improved = True
                break
    return LocalSearchResult(z, energy(model, z), steps, evaluations)


def _dense_quadratic(model: PolynomialModel):
    if model.higher:
        raise ValueError("bilinear relaxation is defined for quadratic models only")
    n = model.n_spins
    h = np.zeros(n)
    j_sym = np.zeros((n, n))
    for i, c in model.linear.items():
        h[i] = c
    for (i, j), c in model.quadratic.items():
        j_sym[i, j] += c
        j_sym[j, i] += c
    return h, j_sym


def bilinear_value(model: PolynomialModel, q) -> float:
    """Multilinear relaxation of a quadratic model at q in [-1,1]^n (offset excluded)."""
    h, j_sym = _dense_quadratic(model)
    qv = np.asarray(q, dtype=float)
    return float(h @ qv + 0.5 * qv @ j_sym @ qv)


def optimize_bilinear(model: PolynomialModel, q0, max_iterations: int = 10000,
                      tol: float = 1e-12) -> np.ndarray:
    """Projected gradient descent of the bilinear relaxation, then sign rounding.

    Backtracking halves the step until the objective decreases; q = 0
    coordinates round to +1.  Rejects models with higher-order terms.
    """
    h, j_sym = _dense_quadratic(model)
    q = np.clip(np.asarray(q0, dtype=float), -1.0, 1.0)
    if q.shape != (model.n_spins,):
        raise ValueError("starting point length must match the model")
    value = float(h @ q + 0.5 * q @ j_sym @ q)
    for _ in range(max_iterations):
        grad = h + j_sym @ q
        step = 1.0
        cand = q
        cand_value = value
        while step > 1e-14:
            trial = np.clip(q - step * grad, -1.0, 1.0)
            trial_value = float(h @ trial + 0.5 * trial @ j_sym @ trial)
            if trial_value < value:
                cand, cand_value = trial, trial_value
                break
            step *= 0.5
        else:
            break  # no descent direction left
        moved = float(np.max(np.abs(cand - q)))
        q, value = cand, cand_value
        if moved < tol:
            break
    return np.where(q >= 0.0, 1, -1).astype(np.int8)


def brute_force(model: PolynomialModel):
    """Exact global minimum by Gray-code enumeration, n_spins <= 24.

    Successive assignments differ in one spin, so each step costs only the
    terms touching the flipped spin.  Ties resolve to the lexicographically
    smallest spin vector (-1 sorts before +1).  Returns (solution, energy).
    """
    n = model.n_spins
    if n > 24:
        raise ValueError("brute force capped at 24 spins")
    tables: list[list[tuple[float, tuple[int, ...]]]] = [[] for _ in range(n)]
    for coef, s in model.terms:
        for b in s:
            tables[b].append((coef, tuple(j for j in s if j != b)))
    z = [1] * n
    e = float(sum(coef for coef, _ in model.terms))
    best_e = e
    best_z = list(z)

    def exact(zs):
        total = 0.0
        for coef, s in model.terms:
            p = coef
            for j in s:
                p *= zs[j]
            total += p
        return total

    for t in range(1, 1 << n):
        b = (t & -t).bit_length() - 1
        acc = 0.0
        for coef, others in tables[b]:
            p = coef
            for j in others:
                p *= z[j]
            acc += p
        e += -2.0 * z[b] * acc
        z[b] = -z[b]
        if e <= best_e + 1e-9 * (1.0 + abs(best_e)):
            # near-ties are resolved on freshly computed energies: the running
            # value drifts by ulps over the walk, which would break exact
            # tie-breaking (and re-anchoring it here also bounds the drift)
            e = exact(z)
            if e < best_e or (e == best_e and z < best_z):
                best_e = e
                best_z = list(z)
    solution = np.array(best_z, dtype=np.int8)
    return solution, energy(model, solution)
