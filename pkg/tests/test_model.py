import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlocal.model import (Graph, GraphParseError, PolynomialModel, QuboMatrix,
                          UndefinedRatioError, approximation_ratio, as_spins,
                          build_graph_coloring, build_maxcut, energy, format_terms,
                          interaction_graph, parse_graph, qubo_to_ising, qubo_value)


def spins_from_bits(bits):
    """Independent oracle for the binary <-> spin convention Z = 1 - 2x."""
    return np.array([1 - 2 * b for b in bits], dtype=np.int8)


def random_qubo(rng, n):
    entries = {}
    for i in range(n):
        for j in range(i, n):
            if rng.random() < 0.7:
                entries[(i, j)] = float(rng.normal())
    return QuboMatrix(n, entries)


class TestQuboToIsing:
    def test_hand_expanded_example(self):
        # C(x) = x0^2 + 2 x0 x1 + 3 x1^2 expanded by hand under x = (1-Z)/2
        qubo = QuboMatrix(2, {(0, 0): 1.0, (0, 1): 2.0, (1, 1): 3.0})
        model = qubo_to_ising(qubo)
        assert model.linear == {0: -1.0, 1: -2.0}
        assert model.quadratic == {(0, 1): 0.5}
        assert model.offset == 2.5
        for bits in itertools.product((0, 1), repeat=2):
            c = qubo_value(qubo, bits)
            e = energy(model, spins_from_bits(bits)) + model.offset
            assert c == pytest.approx(e, abs=1e-12)

    def test_zero_matrix(self):
        model = qubo_to_ising(QuboMatrix(3, {}))
        assert model.linear == {} and model.quadratic == {} and model.offset == 0.0

    def test_random_matrix_matches_on_all_assignments(self):
        rng = np.random.default_rng(42)
        qubo = random_qubo(rng, 4)
        model = qubo_to_ising(qubo)
        for bits in itertools.product((0, 1), repeat=4):
            c = qubo_value(qubo, bits)
            e = energy(model, spins_from_bits(bits)) + model.offset
            assert c == pytest.approx(e, abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2 ** 31 - 1))
    def test_round_trip_property(self, n, seed):
        rng = np.random.default_rng(seed)
        qubo = random_qubo(rng, n)
        model = qubo_to_ising(qubo)
        bits = rng.integers(0, 2, n)
        assert qubo_value(qubo, bits) == pytest.approx(
            energy(model, spins_from_bits(bits)) + model.offset, abs=1e-9)


class TestEnergy:
    def test_single_pair_term(self):
        model = PolynomialModel(2, {}, {(0, 1): -1.0})
        assert energy(model, [1, 1]) == -1.0

    def test_field_plus_coupling(self):
        model = PolynomialModel(2, {0: 1.0}, {(0, 1): 2.0})
        assert energy(model, [-1, 1]) == -3.0

    def test_higher_order_odd_product(self):
        model = PolynomialModel(3, {}, {}, {(0, 1, 2): 1.0})
        assert energy(model, [-1, -1, -1]) == -1.0

    def test_dimension_mismatch(self):
        model = PolynomialModel(3, {0: 1.0})
        with pytest.raises(ValueError):
            energy(model, [1, 1])

    def test_offset_excluded(self):
        model = PolynomialModel(1, {0: 2.0}, offset=5.0)
        assert energy(model, [1]) == 2.0
        assert model.offset == 5.0

    def test_zero_coefficients_dropped(self):
        a = PolynomialModel(3, {0: 1.0, 1: 0.0}, {(0, 1): 0.0, (1, 2): 2.0})
        b = PolynomialModel(3, {0: 1.0}, {(1, 2): 2.0})
        for _ in range(5):
            z = (np.random.default_rng(0).integers(0, 2, 3) * 2 - 1)
            assert energy(a, z) == energy(b, z)


class TestBuilders:
    def test_maxcut_triangle(self):
        g = Graph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        model = build_maxcut(g)
        assert model.quadratic == {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0}
        assert model.linear == {} and model.offset == 0.0
        best = min(energy(model, spins_from_bits(b))
                   for b in itertools.product((0, 1), repeat=3))
        assert best == -1.0

    def test_maxcut_negative_weight_edge(self):
        g = Graph(2, [(0, 1, -2.0)])
        model = build_maxcut(g)
        energies = {z: energy(model, np.array(z)) for z in
                    [(1, 1), (1, -1), (-1, 1), (-1, -1)]}
        assert min(energies.values()) == -2.0
        assert energies[(1, 1)] == -2.0 and energies[(-1, -1)] == -2.0

    def test_maxcut_empty_graph(self):
        model = build_maxcut(Graph(3, []))
        assert not model.terms

    def test_coloring_single_edge_two_colors(self):
        g = Graph(2, [(0, 1, 1.0)])
        qubo = build_graph_coloring(g, 2, 1.0)
        values = {bits: qubo_value(qubo, bits)
                  for bits in itertools.product((0, 1), repeat=4)}
        best = min(values.values())
        assert best == 0.0
        optima = [b for b, v in values.items() if v == best]
        # exactly the two proper colorings: (c0,c1) in {(0,1),(1,0)}
        assert sorted(optima) == [(0, 1, 1, 0), (1, 0, 0, 1)]

    def test_coloring_single_vertex(self):
        qubo = build_graph_coloring(Graph(1, []), 2, 1.0)
        for bits in itertools.product((0, 1), repeat=2):
            v = qubo_value(qubo, bits)
            if sum(bits) == 1:
                assert v == 0.0
            else:
                assert v >= 1.0

    def test_coloring_triangle_not_two_colorable(self):
        g = Graph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        qubo = build_graph_coloring(g, 2, 2.0)
        best = min(qubo_value(qubo, bits) for bits in itertools.product((0, 1), repeat=6))
        assert best > 0.0

    def test_coloring_rejects_zero_colors(self):
        with pytest.raises(ValueError):
            build_graph_coloring(Graph(1, []), 0)

    def test_coloring_default_penalty_is_one_plus_max_degree(self):
        g = Graph(3, [(0, 1, 1.0), (0, 2, 1.0)])
        qubo = build_graph_coloring(g, 2)
        assert qubo.offset == 3.0 * 3  # penalty 1 + deg(0)=2 times |V|=3

    def test_coloring_one_hot_objective_counts_conflicts(self):
        rng = np.random.default_rng(3)
        g = Graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
        k = 3
        for lam in (1.0, 2.5, 7.0):
            qubo = build_graph_coloring(g, k, lam)
            for _ in range(20):
                colors = rng.integers(0, k, g.n_vertices)
                bits = np.zeros(g.n_vertices * k, dtype=int)
                for v, c in enumerate(colors):
                    bits[v * k + c] = 1
                conflicts = sum(1 for u, v, _ in g.edges if colors[u] == colors[v])
                assert qubo_value(qubo, bits) == pytest.approx(conflicts, abs=1e-9)

    def test_coloring_non_one_hot_costs_at_least_penalty(self):
        g = Graph(2, [(0, 1, 1.0)])
        lam = 2.0
        qubo = build_graph_coloring(g, 2, lam)
        for bits in itertools.product((0, 1), repeat=4):
            blocks = [bits[:2], bits[2:]]
            if any(sum(b) != 1 for b in blocks):
                assert qubo_value(qubo, bits) >= lam


class TestParseGraph:
    def test_triangle(self):
        text = "c comment\np edge 3 3\ne 1 2\ne 1 3\ne 2 3\n"
        g = parse_graph(text)
        assert g.n_vertices == 3
        assert g.edges == [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]

    def test_weighted_edge(self):
        g = parse_graph("p edge 2 1\ne 1 2 -0.5\n")
        assert g.edges == [(0, 1, -0.5)]

    def test_bytes_input(self):
        g = parse_graph(b"p edge 2 1\ne 1 2\n")
        assert g.n_vertices == 2

    def test_vertex_out_of_range(self):
        with pytest.raises(GraphParseError) as err:
            parse_graph("p edge 3 1\ne 1 4\n")
        assert err.value.line_no == 2

    @pytest.mark.parametrize("text", [
        "p edge 2 1\ne 1 1\n",            # self-loop
        "p edge 2 2\ne 1 2\ne 2 1\n",     # duplicate (reversed)
        "p edge x 1\ne 1 2\n",            # malformed header
        "e 1 2\n",                        # edge before header
        "p edge 2 1\np edge 2 1\ne 1 2\n",  # duplicate header
        "p edge 2 2\ne 1 2\n",            # edge count mismatch
        "q foo\n",                        # unknown line type
        "",                               # no header
    ])
    def test_malformed_inputs(self, text):
        with pytest.raises(GraphParseError):
            parse_graph(text)


class TestApproximationRatio:
    def test_division(self):
        assert approximation_ratio(-3.0, -4.0) == 0.75

    def test_identity(self):
        assert approximation_ratio(-2.5, -2.5) == 1.0

    def test_zero_optimum(self):
        with pytest.raises(UndefinedRatioError):
            approximation_ratio(-1.0, 0.0)


class TestGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 0, 1.0)])

    def test_rejects_duplicate_undirected(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 2, 1.0)])

    def test_adjacency_sorted(self):
        g = Graph(4, [(2, 0, 1.0), (0, 1, 1.0), (0, 3, 1.0)])
        assert g.adjacency[0] == [1, 2, 3]
        assert g.max_degree() == 3
        assert not g.is_regular()


def test_as_spins_rejects_other_values():
    with pytest.raises(ValueError):
        as_spins([1, 0, -1])


def test_interaction_graph_includes_higher_order_cliques():
    model = PolynomialModel(5, {0: 1.0}, {(0, 1): 1.0}, {(2, 3, 4): 1.0})
    g = interaction_graph(model)
    assert set((u, v) for u, v, _ in g.edges) == {(0, 1), (2, 3), (2, 4), (3, 4)}


def test_format_terms_mentions_every_term():
    model = PolynomialModel(3, {0: 1.5}, {(1, 2): -2.0}, offset=0.25)
    text = format_terms(model)
    assert "1.5" in text and "-2.0" in text and "0.25" in text
