"""Problem representations: QUBO matrices, Ising/PUBO polynomial models,
standard problem builders, and DIMACS-style graph ingestion.

All types are treated as immutable after construction and can be shared
freely between worker processes or threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GraphParseError(ValueError):
    """Malformed graph file; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UndefinedRatioError(ValueError):
    """Optimal energy is zero, so the ratio E/E_opt is undefined."""


@dataclass
class Graph:
    """Undirected weighted graph on vertices 0..n_vertices-1."""

    n_vertices: int
    edges: list[tuple[int, int, float]]

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v, w in self.edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n_vertices}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add(key)
            norm.append((key[0], key[1], float(w)))
        self.edges = norm

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Neighbor lists, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    def is_regular(self) -> bool:
        return len(set(self.degrees)) <= 1


@dataclass
class PolynomialModel:
    """Sparse spin model

        E(Z) = sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j
             + sum_{|S|>=3} J_S prod_{i in S} Z_i

    over Z_i in {-1,+1}.  The constant `offset` is kept apart from E so that
    QUBO and spin objective values stay directly comparable; `energy` never
    includes it.
    """

    n_spins: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    higher: dict[tuple[int, ...], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("model needs at least one spin")
        for i in self.linear:
            if not 0 <= i < self.n_spins:
                raise ValueError(f"linear index {i} out of range")
        for i, j in self.quadratic:
            if not 0 <= i < j < self.n_spins:
                raise ValueError(f"quadratic key ({i},{j}) must satisfy 0<=i<j<n")
        for s in self.higher:
            if len(s) < 3 or list(s) != sorted(set(s)):
                raise ValueError(f"higher-order key {s} must be a sorted set of >=3 indices")
            if s[0] < 0 or s[-1] >= self.n_spins:
                raise ValueError(f"higher-order key {s} out of range")
        self.linear = {int(i): float(c) for i, c in self.linear.items() if c != 0.0}
        self.quadratic = {(int(i), int(j)): float(c) for (i, j), c in self.quadratic.items() if c != 0.0}
        self.higher = {tuple(map(int, s)): float(c) for s, c in self.higher.items() if c != 0.0}
        self.offset = float(self.offset)

    @classmethod
    def from_terms(cls, n_spins: int, terms, offset: float = 0.0) -> "PolynomialModel":
        """Accumulate (coefficient, spin-index iterable) pairs, merging duplicates.

        Repeated indices inside one term cancel pairwise (Z_i^2 = 1); a term
        whose index set cancels completely folds into the offset.
        """
        lin: dict[int, float] = {}
        quad: dict[tuple[int, int], float] = {}
        high: dict[tuple[int, ...], float] = {}
        for coef, spins in terms:
            counts: dict[int, int] = {}
            for i in spins:
                counts[i] = counts.get(i, 0) + 1
            s = tuple(sorted(i for i, c in counts.items() if c % 2))
            if not s:
                offset += coef
            elif len(s) == 1:
                lin[s[0]] = lin.get(s[0], 0.0) + coef
            elif len(s) == 2:
                quad[s] = quad.get(s, 0.0) + coef
            else:
                high[s] = high.get(s, 0.0) + coef
        return cls(n_spins, lin, quad, high, float(offset))

    @cached_property
    def terms(self) -> list[tuple[float, tuple[int, ...]]]:
        """All non-constant terms as (coefficient, sorted index tuple), in a fixed order."""
        out: list[tuple[float, tuple[int, ...]]] = []
        out += [(c, (i,)) for i, c in sorted(self.linear.items())]
        out += [(c, k) for k, c in sorted(self.quadratic.items())]
        out += [(c, k) for k, c in sorted(self.higher.items())]
        return out

    @cached_property
    def terms_by_spin(self) -> list[list[int]]:
        """For each spin, the positions in `terms` of the terms touching it."""
        idx: list[list[int]] = [[] for _ in range(self.n_spins)]
        for t, (_, spins) in enumerate(self.terms):
            for i in spins:
                idx[i].append(t)
        return idx


@dataclass
class QuboMatrix:
    """Upper-triangular QUBO, C(x) = x^T A x + offset over binary x."""

    n_vars: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValueError("QUBO needs at least one variable")
        for i, j in self.entries:
            if not 0 <= i <= j < self.n_vars:
                raise ValueError(f"QUBO key ({i},{j}) not upper-triangular in range")
        self.entries = {(int(i), int(j)): float(a) for (i, j), a in self.entries.items() if a != 0.0}
        self.offset = float(self.offset)


def as_spins(values) -> np.ndarray:
    """Validate and convert to an int8 array with entries in {-1,+1}."""
    z = np.asarray(values)
    if z.ndim != 1:
        raise ValueError("spin vector must be one-dimensional")
    if not np.all((z == 1) | (z == -1)):
        raise ValueError("spin entries must be -1 or +1")
    return z.astype(np.int8)


def energy(model: PolynomialModel, spins) -> float:
    """Spin energy, excluding the stored constant offset."""
    z = as_spins(spins)
    if z.shape != (model.n_spins,):
        raise ValueError(f"expected {model.n_spins} spins, got {z.shape[0]}")
    total = 0.0
    for coef, s in model.terms:
        p = coef
        for i in s:
            p *= z[i]
        total += p
    return float(total)


def qubo_value(qubo: QuboMatrix, x) -> float:
    """C(x) = x^T A x + offset for a binary assignment x."""
    xs = np.asarray(x)
    if xs.shape != (qubo.n_vars,) or not np.all((xs == 0) | (xs == 1)):
        raise ValueError("x must be a 0/1 vector of length n_vars")
    total = qubo.offset
    for (i, j), a in sorted(qubo.entries.items()):
        total += a * xs[i] * xs[j]
    return float(total)


def qubo_to_ising(qubo: QuboMatrix) -> PolynomialModel:
    """Rewrite x^T A x under x_i = (1 - Z_i)/2.

    J_ij = a_ij/4 and h_i = -sum_k (a_ik + a_ki)/4; the constant generated by
    the substitution lands in the model offset, so C(x) = E(Z) + offset holds
    exactly for corresponding assignments.
    """
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    offset = qubo.offset
    for (i, j), a in qubo.entries.items():
        if i == j:
            lin[i] = lin.get(i, 0.0) - a / 2.0
            offset += a / 2.0
        else:
            quad[(i, j)] = quad.get((i, j), 0.0) + a / 4.0
            lin[i] = lin.get(i, 0.0) - a / 4.0
            lin[j] = lin.get(j, 0.0) - a / 4.0
            offset += a / 4.0
    return PolynomialModel(qubo.n_vars, lin, quad, {}, offset)


def build_maxcut(graph: Graph) -> PolynomialModel:
    """Spin model whose ground states are maximum cuts: J_ij = w_ij, no fields."""
    quad: dict[tuple[int, int], float] = {}
    for u, v, w in graph.edges:
        quad[(u, v)] = quad.get((u, v), 0.0) + w
    return PolynomialModel(graph.n_vertices, {}, quad, {}, 0.0)


def build_graph_coloring(graph: Graph, n_colors: int, penalty: float | None = None) -> QuboMatrix:
    """One-hot color-assignment QUBO with variable x_{v,i} at index v*n_colors + i.

    Minimizes  penalty * sum_v (1 - sum_i x_{v,i})^2  +  sum_{(v,w) in E} sum_i x_{v,i} x_{w,i}.
    The constant part of the expansion is stored in the offset so a proper
    coloring evaluates to exactly 0 and every one-hot violation costs at
    least `penalty`.  The default penalty of 1 + max degree guarantees that
    repairing a one-hot violation always beats keeping it, no matter how many
    conflict terms it touches.
    """
    if n_colors < 1:
        raise ValueError("need at least one color")
    if penalty is None:
        penalty = float(1 + graph.max_degree())
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    entries: dict[tuple[int, int], float] = {}

    def add(i: int, j: int, c: float) -> None:
        key = (i, j) if i <= j else (j, i)
        entries[key] = entries.get(key, 0.0) + c

    for v in range(graph.n_vertices):
        for i in range(n_colors):
            add(v * n_colors + i, v * n_colors + i, -penalty)
            for j in range(i + 1, n_colors):
                add(v * n_colors + i, v * n_colors + j, 2.0 * penalty)
    for u, v, _ in graph.edges:
        for i in range(n_colors):
            add(u * n_colors + i, v * n_colors + i, 1.0)
    return QuboMatrix(graph.n_vertices * n_colors, entries, penalty * graph.n_vertices)


def parse_graph(data) -> Graph:
    """Parse a DIMACS-like edge list.

    Accepted lines: comments starting with 'c', one 'p edge <n> <m>' header,
    and 'e <u> <v> [w]' edges with 1-based endpoints and an optional real
    weight (default 1.0).  Raises GraphParseError with the offending line
    number on malformed input.
    """
    text = data.decode() if isinstance(data, (bytes, bytearray)) else data
    n: int | None = None
    declared_m = 0
    header_line = 0
    edges: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        if fields[0] == "p":
            if n is not None:
                raise GraphParseError(line_no, "duplicate problem header")
            if len(fields) != 4 or fields[1] != "edge":
                raise GraphParseError(line_no, f"expected 'p edge <n> <m>', got {line!r}")
            try:
                n, declared_m = int(fields[2]), int(fields[3])
            except ValueError:
                raise GraphParseError(line_no, "non-integer size in header") from None
            if n < 0 or declared_m < 0:
                raise GraphParseError(line_no, "negative size in header")
            header_line = line_no
        elif fields[0] == "e":
            if n is None:
                raise GraphParseError(line_no, "edge before 'p edge' header")
            if len(fields) not in (3, 4):
                raise GraphParseError(line_no, f"expected 'e <u> <v> [w]', got {line!r}")
            try:
                u, v = int(fields[1]), int(fields[2])
                w = float(fields[3]) if len(fields) == 4 else 1.0
            except ValueError:
                raise GraphParseError(line_no, "malformed edge line") from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphParseError(line_no, f"vertex out of range 1..{n}")
            if u == v:
                raise GraphParseError(line_no, "self-loop")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphParseError(line_no, f"duplicate edge {u}-{v}")
            seen.add(key)
            edges.append((u - 1, v - 1, w))
        else:
            raise GraphParseError(line_no, f"unrecognized line type {fields[0]!r}")
    if n is None:
        raise GraphParseError(0, "missing 'p edge' header")
    if len(edges) != declared_m:
        raise GraphParseError(header_line, f"header declares {declared_m} edges, found {len(edges)}")
    return Graph(n, edges)


def approximation_ratio(found: float, optimal: float) -> float:
    """Found energy divided by optimal energy."""
    if optimal == 0.0:
        raise UndefinedRatioError("optimal energy is zero; report raw energies instead")
    return found / optimal


def interaction_graph(model: PolynomialModel) -> Graph:
    """Unit-weight graph connecting every pair of spins that shares a term."""
    pairs: set[tuple[int, int]] = set(model.quadratic)
    for s in model.higher:
        for a in range(len(s)):
            for b in range(a + 1, len(s)):
                pairs.add((s[a], s[b]))
    return Graph(model.n_spins, [(u, v, 1.0) for u, v in sorted(pairs)])


def format_terms(model: PolynomialModel) -> str:
    """Plain-text term listing for debugging and logging."""
    lines = [f"spins {model.n_spins}", f"offset {model.offset!r}"]
    for coef, s in model.terms:
        lines.append(" ".join(["term", *map(str, s), repr(coef)]))
    return "\n".join(lines) + "\n"
