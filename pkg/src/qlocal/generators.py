"""Problem-instance generators: random regular and complete weighted graphs,
the iterated Mycielski family, and a DIMACS writer."""
from __future__ import annotations

import numpy as np

from .model import Graph

WEIGHT_KINDS = ("unit", "uniform")


def _edge_weights(rng, count: int, weights: str) -> np.ndarray:
    if weights == "unit":
        return np.ones(count)
    if weights == "uniform":
        return rng.uniform(-1.0, 1.0, count)
    raise ValueError(f"unknown weight kind {weights!r}")


def random_regular_graph(n: int, degree: int, seed, weights: str = "unit") -> Graph:
    """Random simple d-regular graph via the pairing model with rejection.

    Pairings containing self-loops or parallel edges are rejected wholesale
    and resampled, so the draw is uniform over simple pairings.
    """
    if n * degree % 2:
        raise ValueError("n * degree must be even")
    if not 0 < degree < n:
        raise ValueError("need 0 < degree < n")
    rng = np.random.default_rng(seed)
    for _ in range(100000):
        stubs = np.repeat(np.arange(n), degree)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        seen: set[tuple[int, int]] = set()
        ok = True
        for u, v in pairs:
            if u == v:
                ok = False
                break
            key = (int(u), int(v)) if u < v else (int(v), int(u))
            if key in seen:
                ok = False
                break
            seen.add(key)
        if ok:
            edges = sorted(seen)
            w = _edge_weights(rng, len(edges), weights)
            return Graph(n, [(u, v, float(w[t])) for t, (u, v) in enumerate(edges)])
    raise RuntimeError("failed to sample a simple regular graph")


def complete_graph(n: int, seed=None, weights: str = "uniform") -> Graph:
    """Complete graph on n vertices, weights U[-1,1] by default."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    w = _edge_weights(rng, len(edges), weights)
    return Graph(n, [(u, v, float(w[t])) for t, (u, v) in enumerate(edges)])


def mycielski_graph(level: int) -> Graph:
    """Iterated Mycielski construction with unit weights.

    Level 1 is a single edge; each step maps (n, m) to (2n+1, 3m+n) and raises
    the chromatic number by one, so level k needs k+1 colors.  Level 3 is the
    11-vertex, 20-edge graph; level 7 has 191 vertices and 2360 edges.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    n = 2
    edges = [(0, 1)]
    for _ in range(level - 1):
        apex = 2 * n
        new_edges = list(edges)
        for u, v in edges:
            new_edges.append((u, n + v))
            new_edges.append((v, n + u))
        for i in range(n):
            new_edges.append((n + i, apex))
        edges = new_edges
        n = 2 * n + 1
    return Graph(n, [(u, v, 1.0) for u, v in edges])


def write_dimacs(graph: Graph) -> str:
    """Serialize to the edge-list format accepted by parse_graph."""
    lines = [f"p edge {graph.n_vertices} {len(graph.edges)}"]
    for u, v, w in graph.edges:
        if w == 1.0:
            lines.append(f"e {u + 1} {v + 1}")
        else:
            lines.append(f"e {u + 1} {v + 1} {w!r}")
    return "\n".join(lines) + "\n"
