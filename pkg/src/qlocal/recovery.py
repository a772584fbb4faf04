"""Solution recovery from optimized flip probabilities.

``top_s`` enumerates the S most probable configurations of an independent
Bernoulli flip distribution exactly: starting from the single most probable
configuration, each variable in turn spawns a toggled child whose probability
is scaled by the flip ratio g <= 1, and the working list is pruned back to S.
Because every g <= 1, descendants of a pruned configuration can never re-enter
the top S, so pruning is lossless.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import as_spins, energy
from .neighborhood import GroupEncoding, decode


@dataclass(frozen=True)
class RankedConfig:
    """A flip configuration: outcome indices with z = -1, and its probability."""

    flips: tuple[int, ...]
    probability: float


def _exact_probability(items: list[tuple[int, float]], flips: set[int]) -> float:
    """Canonical left-to-right product over ascending outcome indices."""
    p = 1.0
    for mu, prob in items:
        p *= prob if mu in flips else (1.0 - prob)
    return p


def top_s(flip_probs: dict[int, float], n_best: int) -> list[RankedConfig]:
    """The n_best highest-probability flip configurations, probability non-increasing.

    Ties are broken by lexicographic order on the sorted flip set, which makes
    the ranking reproducible and identical to a brute-force enumeration.
    Variables with p = 0 never flip and are skipped outright; fewer than
    n_best configurations are returned when the distribution supports fewer
    nonzero-probability configurations.
    """
    if n_best < 1:
        raise ValueError("need n_best >= 1")
    for mu, p in flip_probs.items():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"flip probability p[{mu}] = {p} outside [0, 1]")
    items = [(mu, p) for mu, p in sorted(flip_probs.items()) if p > 0.0]

    base_flips = tuple(mu for mu, p in items if p > 0.5)
    base_prob = 1.0
    for mu, p in items:
        base_prob *= p if p > 0.5 else (1.0 - p)
    current: list[tuple[float, tuple[int, ...]]] = [(base_prob, base_flips)]

    for mu, p in items:
        g = p / (1.0 - p) if p < 0.5 else (1.0 - p) / p
        if g == 0.0:
            continue  # p = 1: the unflipped branch has zero probability
        children = []
        for prob, flips in current:
            if mu in flips:
                toggled = tuple(x for x in flips if x != mu)
            else:
                toggled = tuple(sorted(flips + (mu,)))
            children.append((prob * g, toggled))
        current = current + children
        current.sort(key=lambda item: (-item[0], item[1]))
        del current[n_best:]

    out = []
    for _, flips in current:
        out.append(RankedConfig(flips, _exact_probability(items, set(flips))))
    out.sort(key=lambda cfg: (-cfg.probability, cfg.flips))
    return out


def decode_solution(flips, encoding: GroupEncoding, z0) -> np.ndarray:
    """Anchor solution with every group named in `flips` applied.

    A spin flips when an odd number of the chosen groups contain it.
    """
    z = as_spins(z0).copy()
    parity = np.zeros(z.size, dtype=bool)
    for mu in flips:
        group = decode(encoding, mu)
        if group is None:
            raise ValueError(f"outcome {mu} decodes to a discarded value")
        for i in group:
            parity[i] = ~parity[i]
    z[parity] *= -1
    return z


def recover_best(obj, q, n_best: int):
    """Best solution among the n_best most probable flip configurations.

    Flip probabilities are p = (1 - q)/2 over the support of q.  Returns
    (solution, energy); the first configuration in ranking order wins ties.
    An empty support yields the anchor solution itself.
    """
    flip_probs = {mu: (1.0 - qv) / 2.0 for mu, qv in q.entries.items()}
    ranked = top_s(flip_probs, n_best) if flip_probs else [RankedConfig((), 1.0)]
    best_z = None
    best_e = np.inf
    for cfg in ranked:
        z = decode_solution(cfg.flips, obj.encoding, obj.z0)
        e = energy(obj.model, z)
        if e < best_e:
            best_z, best_e = z, e
    return best_z, float(best_e)
