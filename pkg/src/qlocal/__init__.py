"""Qubit-efficient variational local search for QUBO/Ising problems."""

from .auxiliary import (AuxiliaryObjective, QVector, TransformParams, compile_objective,
                        evaluate, evaluate_discrete, gradient_q, q_from_p,
                        q_vector_from_shots)
from .baselines import brute_force, delta_flip, local_search, optimize_bilinear
from .model import (Graph, PolynomialModel, QuboMatrix, approximation_ratio,
                    build_graph_coloring, build_maxcut, energy, parse_graph,
                    qubo_to_ising, qubo_value)
from .neighborhood import (GroupEncoding, coloring_swap_groups, decode,
                           enumerate_connected, enumerate_full, unrank_subset)
from .optimizer import RoundResult, SolverConfig, solve
from .recovery import RankedConfig, decode_solution, recover_best, top_s
from .simulator import AnsatzShape, ShotDistribution, prepare, probabilities, sample

__version__ = "0.1.0"
