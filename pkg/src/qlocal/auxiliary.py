"""The continuous auxiliary objective over group-flip variables.

Substituting Z_i = Z0_i * prod_{k: i in G_k} z_k into a spin model and using
z_k^2 = 1 leaves, for every model term J_S prod_{i in S} Z_i, the coefficient
J_S prod_{i in S} Z0_i times the product of z_k over exactly those variables
whose group overlaps S an odd number of times.  Relaxing z to q in [-1,1]
gives a multilinear function whose strict vertex minima are the solutions
beating every neighbor reachable by one encoded group flip.

Absent q entries default to 1 (an unobserved outcome flips nothing), so the
function evaluates against a sparse support in O(model terms * |support|).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import PolynomialModel, as_spins
from .neighborhood import EXPLICIT, GroupEncoding, decode

COEFFICIENT_FLOOR = 1e-15


@dataclass(frozen=True)
class TransformParams:
    """Hyperparameters of the probability-to-q transform.

    alpha sharpens the step; m_scale bounds how many variables can go
    negative, since q < 0 needs P > 1/m_scale.
    """

    alpha: float
    m_scale: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.m_scale <= 0:
            raise ValueError("m_scale must be positive")


@dataclass
class QVector:
    """Sparse auxiliary-variable vector; absent outcomes implicitly hold q = 1."""

    entries: dict[int, float] = field(default_factory=dict)

    def get(self, mu: int) -> float:
        return self.entries.get(mu, 1.0)

    @property
    def support(self) -> list[int]:
        return sorted(self.entries)


@dataclass
class AuxiliaryObjective:
    """A spin model bound to an anchor solution and an outcome codec.

    For explicit codecs the multilinear form is compiled up front into terms
    over variable indices.  For implicit codecs only the Z0-signed model terms
    are stored and outcomes are decoded lazily against the q support, honoring
    the sparse evaluation bound.
    """

    model: PolynomialModel
    z0: np.ndarray
    encoding: GroupEncoding
    signed_terms: list[tuple[float, tuple[int, ...]]]
    compiled: list[tuple[float, tuple[int, ...]]] | None
    constant: float
    _group_cache: dict[int, frozenset] = field(default_factory=dict, repr=False)

    def decode_group(self, mu: int):
        """Group for outcome mu as a frozenset, or None if discarded. Cached.

        Outcomes beyond the codec's outcome space also count as discarded;
        they arise when the circuit register is padded wider than the codec
        needs.
        """
        try:
            return self._group_cache[mu]
        except KeyError:
            if mu >= self.encoding.n_outcomes:
                g = None
            else:
                g = decode(self.encoding, mu)
                g = frozenset(g) if g is not None else None
            self._group_cache[mu] = g
            return g


def compile_objective(model: PolynomialModel, z0, encoding: GroupEncoding) -> AuxiliaryObjective:
    """Bind (model, anchor solution, codec) into an evaluatable objective."""
    z = as_spins(z0)
    if z.shape != (model.n_spins,):
        raise ValueError("anchor solution length must match the model")
    if encoding.n_spins != model.n_spins:
        raise ValueError("encoding and model disagree on the spin count")
    signed: list[tuple[float, tuple[int, ...]]] = []
    for coef, spins in model.terms:
        c = coef
        for i in spins:
            c *= z[i]
        signed.append((float(c), spins))
    compiled = None
    constant = 0.0
    if encoding.strategy == EXPLICIT:
        vars_by_spin: list[list[int]] = [[] for _ in range(model.n_spins)]
        for k, g in enumerate(encoding.groups):
            for i in g:
                vars_by_spin[i].append(k)
        acc: dict[tuple[int, ...], float] = {}
        for c, spins in signed:
            counts: dict[int, int] = {}
            for i in spins:
                for k in vars_by_spin[i]:
                    counts[k] = counts.get(k, 0) + 1
            key = tuple(sorted(k for k, cnt in counts.items() if cnt % 2))
            if key:
                acc[key] = acc.get(key, 0.0) + c
            else:
                constant += c
        compiled = [(c, k) for k, c in sorted(acc.items()) if abs(c) >= COEFFICIENT_FLOOR]
    return AuxiliaryObjective(model, z.copy(), encoding, signed, compiled, constant)


def _check_range(q: QVector) -> None:
    for mu, v in q.entries.items():
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"q[{mu}] = {v} outside [-1, 1]")


def _support_groups(obj: AuxiliaryObjective, support) -> dict[int, frozenset]:
    groups = {}
    for mu in support:
        g = obj.decode_group(mu)
        if g is None:
            raise ValueError(f"outcome {mu} is discarded by the encoding")
        groups[mu] = g
    return groups


def evaluate(obj: AuxiliaryObjective, q: QVector) -> float:
    """Multilinear value at q; absent outcomes contribute a factor of 1."""
    _check_range(q)
    if obj.compiled is not None:
        get = q.entries.get
        total = obj.constant
        for coef, varset in obj.compiled:
            p = coef
            for k in varset:
                p *= get(k, 1.0)
            total += p
        return float(total)
    support = q.support
    groups = _support_groups(obj, support)
    total = obj.constant
    for coef, spins in obj.signed_terms:
        p = coef
        for mu in support:
            odd = 0
            g = groups[mu]
            for i in spins:
                if i in g:
                    odd ^= 1
            if odd:
                p *= q.entries[mu]
        total += p
    return float(total)


def evaluate_discrete(obj: AuxiliaryObjective, z) -> float:
    """Objective at a +-1 vertex; equals the energy of the decoded solution."""
    zv = np.asarray(z)
    if zv.shape != (obj.encoding.n_variables,):
        raise ValueError(f"expected {obj.encoding.n_variables} variables, got {zv.shape}")
    if not np.all((zv == 1) | (zv == -1)):
        raise ValueError("vertex coordinates must be -1 or +1")
    return evaluate(obj, QVector({k: float(zv[k]) for k in range(zv.size)}))


def gradient_q(obj: AuxiliaryObjective, q: QVector) -> dict[int, float]:
    """Partial derivatives over the support of q only."""
    return gradient_q_at(obj, q, q.support)


def gradient_q_at(obj: AuxiliaryObjective, q: QVector, indices) -> dict[int, float]:
    """Partial derivatives d(value)/dq_mu for the requested outcome indices.

    Indices outside the support are treated as variables currently at q = 1.
    """
    _check_range(q)
    out = {int(mu): 0.0 for mu in indices}
    if not out:
        return out
    if obj.compiled is not None:
        get = q.entries.get
        for coef, varset in obj.compiled:
            if not any(k in out for k in varset):
                continue
            vals = [get(k, 1.0) for k in varset]
            m = len(vals)
            suffix = [1.0] * (m + 1)
            for t in range(m - 1, -1, -1):
                suffix[t] = suffix[t + 1] * vals[t]
            prefix = 1.0
            for t, k in enumerate(varset):
                if k in out:
                    out[k] += coef * prefix * suffix[t + 1]
                prefix *= vals[t]
        return out
    scope = sorted(set(q.entries) | set(out))
    groups = _support_groups(obj, scope)
    for coef, spins in obj.signed_terms:
        mus = []
        for mu in scope:
            odd = 0
            g = groups[mu]
            for i in spins:
                if i in g:
                    odd ^= 1
            if odd:
                mus.append(mu)
        if not any(mu in out for mu in mus):
            continue
        vals = [q.get(mu) for mu in mus]
        m = len(vals)
        suffix = [1.0] * (m + 1)
        for t in range(m - 1, -1, -1):
            suffix[t] = suffix[t + 1] * vals[t]
        prefix = 1.0
        for t, mu in enumerate(mus):
            if mu in out:
                out[mu] += coef * prefix * suffix[t + 1]
            prefix *= vals[t]
    return out


def q_from_p(p, params: TransformParams):
    """Map outcome probability to the auxiliary variable, with the exact derivative.

    q = 2*(tanh(alpha*(1 - M*P)) + 1)/(tanh(alpha) + 1) - 1, strictly
    decreasing in P with q(0) = 1, so unobserved outcomes flip nothing.
    Accepts scalars or arrays.
    """
    p_arr = np.asarray(p, dtype=float)
    t = np.tanh(params.alpha * (1.0 - params.m_scale * p_arr))
    # same tanh routine as above so q(0) is exactly 1
    denom = float(np.tanh(params.alpha)) + 1.0
    q = 2.0 * (t + 1.0) / denom - 1.0
    dq = -2.0 * params.alpha * params.m_scale * (1.0 - t * t) / denom
    if p_arr.ndim == 0:
        return float(q), float(dq)
    return q, dq


def q_vector_from_shots(shots, params: TransformParams,
                        encoding: GroupEncoding | None = None) -> QVector:
    """q entries for observed, non-discarded outcomes.

    Probabilities divide by the total shot count including discarded shots,
    preserving sum(P) <= 1 and with it the negative-count bound.
    """
    if shots.total <= 0:
        raise ValueError("empty shot distribution")
    entries: dict[int, float] = {}
    for mu in sorted(shots.counts):
        count = shots.counts[mu]
        if count <= 0:
            continue
        if encoding is not None:
            # outcomes past the codec's space occur when the register is padded
            if mu >= encoding.n_outcomes or decode(encoding, mu) is None:
                continue
        qv, _ = q_from_p(count / shots.total, params)
        entries[mu] = float(qv)
    return QVector(entries)
