"""Flip-group generation and codecs that decode measurement outcomes to groups.

A group is a sorted tuple of spin indices flipped together; one auxiliary
variable per decodable outcome.  Five codec strategies are supported:

* ``explicit``    -- groups stored in a list, outcome = list position
* ``unranked``    -- all subsets of size <= r, decoded by lexicographic unranking
* ``base-n``      -- all subsets of size <= r, decoded via base-n digits
* ``sparse-walk`` -- connected subgraphs decoded as neighbor-index walks
* ``bitmask``     -- every subset (including the empty one), one qubit per spin

Outcome indices are 0-based everywhere; out-of-range or unmappable outcomes
decode to ``None`` (a discard, not an error).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .model import Graph

Group = tuple[int, ...]

EXPLICIT = "explicit"
UNRANKED = "unranked"
BASE_N = "base-n"
SPARSE_WALK = "sparse-walk"
BITMASK = "bitmask"
STRATEGIES = (EXPLICIT, UNRANKED, BASE_N, SPARSE_WALK, BITMASK)

DEFAULT_GROUP_CAP = 1 << 20


class CapExceededError(ValueError):
    """Explicit materialization would exceed the group cap; use an implicit codec."""


class DecodeError(ValueError):
    """Outcome index outside the codec's valid range."""


def _qubits_for(count: int) -> int:
    """ceil(log2(count)) computed exactly on integers."""
    if count < 1:
        raise ValueError("need at least one encodable item")
    return (count - 1).bit_length()


@dataclass
class GroupEncoding:
    """Codec mapping measurement outcomes mu to flip groups.

    ``n_variables`` counts the decodable outcomes; outcomes at or above it are
    discarded.  Built via the ``*_encoding`` constructors below.
    """

    strategy: str
    n_spins: int
    r: int
    n_qubits: int
    degree: int | None = None
    groups: list[Group] | None = None
    neighbor_lists: list[tuple[int, ...]] | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    @property
    def n_outcomes(self) -> int:
        return 1 << self.n_qubits

    @property
    def n_variables(self) -> int:
        if self.strategy == EXPLICIT:
            return len(self.groups)
        if self.strategy == UNRANKED:
            return sum(math.comb(self.n_spins, m) for m in range(1, self.r + 1))
        if self.strategy == BASE_N:
            return self.n_spins ** self.r
        if self.strategy == SPARSE_WALK:
            walks = self.n_spins * self.degree ** (self.r - 1)
            # a walk of r-1 >= 1 steps always leaves its start vertex, so a
            # trailing block of outcomes names the singleton groups directly
            return walks if self.r == 1 else walks + self.n_spins
        return 1 << self.n_spins  # bitmask


def explicit_encoding(n_spins: int, groups) -> GroupEncoding:
    """Trivial codec: outcome mu names the mu-th stored group."""
    stored: list[Group] = []
    for g in groups:
        t = tuple(sorted(g))
        if not t or len(set(t)) != len(t) or t[0] < 0 or t[-1] >= n_spins:
            raise ValueError(f"invalid group {g!r}")
        stored.append(t)
    if not stored:
        raise ValueError("need at least one group")
    return GroupEncoding(EXPLICIT, n_spins, max(len(g) for g in stored),
                         _qubits_for(len(stored)), groups=stored)


def unranked_encoding(n_spins: int, r: int) -> GroupEncoding:
    """Full size-<=r neighborhood addressed by lexicographic unranking."""
    if not 1 <= r <= n_spins:
        raise ValueError("need 1 <= r <= n_spins")
    count = sum(math.comb(n_spins, m) for m in range(1, r + 1))
    return GroupEncoding(UNRANKED, n_spins, r, _qubits_for(count))


def base_n_encoding(n_spins: int, r: int) -> GroupEncoding:
    """Full size-<=r neighborhood addressed by base-n digit sets."""
    if not 1 <= r <= n_spins:
        raise ValueError("need 1 <= r <= n_spins")
    return GroupEncoding(BASE_N, n_spins, r, _qubits_for(n_spins ** r))


def sparse_walk_encoding(graph: Graph, r: int) -> GroupEncoding:
    """Connected-subgraph codec: start vertex plus r-1 neighbor-index steps.

    Walk outcomes occupy [0, n * d**(r-1)); for r >= 2 a trailing block of n
    outcomes names the singleton groups, which no walk can reach.  On
    non-regular graphs the walk degree is the maximum degree and walks that
    index a missing neighbor decode to None.  Sets of size <= r without a
    spanning walk of exactly r-1 steps (possible from size 4 up, e.g. a star
    of three leaves) remain unreachable; they do not occur for r <= 3.
    """
    if r < 1:
        raise ValueError("need r >= 1")
    degree = graph.max_degree()
    if degree < 1:
        raise ValueError("graph has no edges")
    neighbor_lists = [tuple(a) for a in graph.adjacency]
    walks = graph.n_vertices * degree ** (r - 1)
    count = walks if r == 1 else walks + graph.n_vertices
    return GroupEncoding(SPARSE_WALK, graph.n_vertices, r, _qubits_for(count),
                         degree=degree, neighbor_lists=neighbor_lists)


def bitmask_encoding(n_spins: int) -> GroupEncoding:
    """Complete codec: each outcome bit flips one spin; mu=0 is the empty group."""
    if n_spins < 1:
        raise ValueError("need n_spins >= 1")
    return GroupEncoding(BITMASK, n_spins, n_spins, n_spins)


def enumerate_full(n_spins: int, r: int, cap: int = DEFAULT_GROUP_CAP) -> list[Group]:
    """All nonempty subsets of size <= r, ordered by size then lexicographically."""
    if not 1 <= r <= n_spins:
        raise ValueError("need 1 <= r <= n_spins")
    total = sum(math.comb(n_spins, m) for m in range(1, r + 1))
    if total > cap:
        raise CapExceededError(f"{total} groups exceed cap {cap}")
    out: list[Group] = []
    for m in range(1, r + 1):
        out.extend(combinations(range(n_spins), m))
    return out


def enumerate_connected(graph: Graph, r: int, cap: int = DEFAULT_GROUP_CAP) -> list[Group]:
    """All vertex sets of size <= r inducing a connected subgraph.

    Ordered by size then lexicographically.  Uses anchored extension with
    exclusive neighborhoods, so every connected set is produced exactly once.
    """
    if r < 1:
        raise ValueError("need r >= 1")
    adj = [frozenset(a) for a in graph.adjacency]
    out: list[Group] = []

    def extend(sub: list[int], ext: list[int], closure: frozenset, root: int) -> None:
        out.append(tuple(sorted(sub)))
        if len(out) > cap:
            raise CapExceededError(f"more than {cap} connected groups")
        if len(sub) == r:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            grown = [u for u in adj[w] if u > root and u not in closure]
            extend(sub + [w], ext + grown, closure | adj[w], root)

    for v in range(graph.n_vertices):
        start_ext = [u for u in adj[v] if u > v]
        extend([v], start_ext, frozenset({v}) | adj[v], v)
    out.sort(key=lambda g: (len(g), g))
    return out


def coloring_swap_groups(n_vertices: int, n_colors: int) -> list[Group]:
    """Pair groups {v*k+i, v*k+j} that swap two one-hot color bits of a vertex."""
    if n_colors < 2:
        raise ValueError("color swaps need at least 2 colors")
    out: list[Group] = []
    for v in range(n_vertices):
        base = v * n_colors
        for i in range(n_colors):
            for j in range(i + 1, n_colors):
                out.append((base + i, base + j))
    return out


def unrank_subset(rank: int, n_spins: int, r: int) -> Group:
    """The rank-th (1-based) nonempty subset of size <= r in size-then-lex order.

    Agrees with ``enumerate_full`` positions shifted by one.  Binomial sums are
    exact integers, so arbitrarily large n and r are safe.
    """
    if not 1 <= r <= n_spins:
        raise ValueError("need 1 <= r <= n_spins")
    total = sum(math.comb(n_spins, m) for m in range(1, r + 1))
    if not 1 <= rank <= total:
        raise DecodeError(f"rank {rank} outside 1..{total}")
    m = 1
    acc = 0
    while acc + math.comb(n_spins, m) < rank:
        acc += math.comb(n_spins, m)
        m += 1
    pos = rank - acc  # 1-based position within the size-m block
    out: list[int] = []
    need = m
    x = 0
    while need:
        count = math.comb(n_spins - x - 1, need - 1)
        if pos <= count:
            out.append(x)
            need -= 1
        else:
            pos -= count
        x += 1
    return tuple(out)


def decode_base_n(mu: int, n_spins: int, r: int) -> Group:
    """Group of distinct base-n digits of mu, including leading zeros.

    mu = 0 therefore decodes to {0}; every nonempty subset of size <= r has at
    least one preimage in [0, n**r).
    """
    if not 0 <= mu < n_spins ** r:
        raise DecodeError(f"outcome {mu} outside 0..{n_spins ** r - 1}")
    digits = set()
    x = mu
    for _ in range(r):
        digits.add(x % n_spins)
        x //= n_spins
    return tuple(sorted(digits))


def decode_sparse(mu: int, neighbor_lists, degree: int, r: int) -> Group | None:
    """Walk decode: start vertex mu // d^(r-1), then r-1 neighbor-index steps.

    Digits are consumed most-significant first, i.e. the leading digit picks
    the first step.  Returns None when a digit indexes past a vertex's actual
    neighbor count (possible only on non-regular graphs).
    """
    n = len(neighbor_lists)
    span = degree ** (r - 1)
    if not 0 <= mu < n * span:
        raise DecodeError(f"outcome {mu} outside 0..{n * span - 1}")
    vertex = mu // span
    rem = mu % span
    visited = {vertex}
    power = span
    for _ in range(r - 1):
        power //= degree
        j = rem // power
        rem %= power
        nbrs = neighbor_lists[vertex]
        if j >= len(nbrs):
            return None
        vertex = nbrs[j]
        visited.add(vertex)
    return tuple(sorted(visited))


def decode_bitmask(mu: int, n_spins: int) -> Group:
    """Group of set-bit positions; mu = 0 is the empty (no-op) group."""
    if not 0 <= mu < (1 << n_spins):
        raise DecodeError(f"outcome {mu} outside 0..{(1 << n_spins) - 1}")
    return tuple(i for i in range(n_spins) if (mu >> i) & 1)


def decode(encoding: GroupEncoding, mu: int) -> Group | None:
    """Decode an outcome to its group, or None when the outcome is discarded."""
    if not 0 <= mu < encoding.n_outcomes:
        raise DecodeError(f"outcome {mu} outside 0..{encoding.n_outcomes - 1}")
    if encoding.strategy == EXPLICIT:
        return encoding.groups[mu] if mu < len(encoding.groups) else None
    if encoding.strategy == UNRANKED:
        if mu >= encoding.n_variables:
            return None
        return unrank_subset(mu + 1, encoding.n_spins, encoding.r)
    if encoding.strategy == BASE_N:
        if mu >= encoding.n_spins ** encoding.r:
            return None
        return decode_base_n(mu, encoding.n_spins, encoding.r)
    if encoding.strategy == SPARSE_WALK:
        if mu >= encoding.n_variables:
            return None
        walks = encoding.n_spins * encoding.degree ** (encoding.r - 1)
        if mu >= walks:
            return (mu - walks,)  # trailing singleton block
        return decode_sparse(mu, encoding.neighbor_lists, encoding.degree, encoding.r)
    if mu >= (1 << encoding.n_spins):
        return None
    return decode_bitmask(mu, encoding.n_spins)
