"""Command-line entry point.

Subcommands: solve, local-search, bench, mse, coloring, qpu-sim, gen-graph.
Every flag has a config-file (TOML) equivalent; flags override file values,
and the effective configuration is echoed into the JSON sidecar next to the
results.  All randomness flows from one --seed.

Exit codes: 0 success, 1 usage/config error (before any computation),
2 runtime failure.  CSV outputs contain only bit-reproducible columns;
wall-clock timings live in the sidecar.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, fields

import numpy as np
from threadpoolctl import threadpool_limits

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .baselines import brute_force, local_search
from .generators import complete_graph, mycielski_graph, random_regular_graph, write_dimacs
from .harness import (ExperimentSpec, ProblemSpec, run_experiment, write_results)
from .model import (UndefinedRatioError, approximation_ratio, build_graph_coloring,
                    build_maxcut, energy, interaction_graph, parse_graph, qubo_to_ising)
from .neighborhood import enumerate_connected, enumerate_full
from .optimizer import SolverConfig, solve

DEFAULT_OUT_ENV = "QLOCAL_OUT_DIR"


class UsageError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get(DEFAULT_OUT_ENV, "qlocal-out")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}")


def _solver_config(data: dict, args, arg_map: dict[str, str]) -> SolverConfig:
    """Config-file [config] section with CLI flags layered on top."""
    merged = dict(data.get("config", {}))
    for flag, field_name in arg_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[field_name] = value
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown solver config keys: {sorted(unknown)}")
    try:
        return SolverConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad solver config: {exc}")


_SOLVER_FLAGS = {
    "r": "r",
    "neighborhood": "neighborhood",
    "encoding": "encoding",
    "layers": "n_layers",
    "shots": "n_shots",
    "alpha": "alpha",
    "m_scale": "m_scale",
    "recover": "n_recover",
    "rounds": "max_rounds",
    "method": "method",
    "iterations": "max_iterations",
    "initial": "initial",
    "seed": "seed",
}


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=int, help="neighborhood size r")
    p.add_argument("--neighborhood", choices=("full", "connected", "coloring-swaps"))
    p.add_argument("--encoding", choices=("explicit", "unranked", "base-n", "sparse-walk", "bitmask"))
    p.add_argument("--layers", type=int, help="ansatz layers L")
    p.add_argument("--shots", type=int, help="shots per estimate (omit for exact mode)")
    p.add_argument("--alpha", type=float, help="transform sharpness")
    p.add_argument("--m-scale", dest="m_scale", type=float, help="transform scale M (default: spin count)")
    p.add_argument("--recover", type=int, help="most-probable solutions ranked per round (S)")
    p.add_argument("--rounds", type=int, help="restart rounds cap (R)")
    p.add_argument("--method", choices=("quasi-newton", "spsa"))
    p.add_argument("--iterations", type=int, help="optimizer iteration budget")
    p.add_argument("--initial", choices=("ones", "random"), help="initial solution policy")


def _read_graph(path: str):
    try:
        with open(path, "rb") as fh:
            return parse_graph(fh.read())
    except FileNotFoundError:
        raise UsageError(f"graph file not found: {path}")


def _build_problem_model(args):
    graph = _read_graph(args.graph)
    if args.problem == "maxcut":
        return graph, build_maxcut(graph)
    if args.problem == "coloring":
        qubo = build_graph_coloring(graph, args.colors, args.penalty)
        return graph, qubo_to_ising(qubo)
    raise UsageError(f"unknown problem {args.problem!r}")


def _maybe_ratio(model, found: float):
    if model.n_spins > 24:
        return None, None
    _, optimal = brute_force(model)
    try:
        return approximation_ratio(found, optimal), optimal
    except UndefinedRatioError:
        return None, optimal


def _cmd_solve(args) -> int:
    data = _load_config_file(args.config)
    config = _solver_config(data, args, _SOLVER_FLAGS)
    graph, model = _build_problem_model(args)
    if args.problem == "coloring":
        config = SolverConfig(**{**asdict(config),
                                 "neighborhood": "coloring-swaps",
                                 "coloring_k": args.colors})
    final, history = solve(model, config)
    ratio, optimal = _maybe_ratio(model, final.best_energy)
    out_dir = args.out or _default_out()
    os.makedirs(out_dir, exist_ok=True)
    payload = {
        "problem": args.problem,
        "graph": args.graph,
        "effective_config": asdict(config),
        "best_energy": final.best_energy,
        "objective_with_offset": final.best_energy + model.offset,
        "ratio": ratio,
        "optimal_energy": optimal,
        "rounds": len(history),
        "shots_used": sum(h.shots_used for h in history),
        "solution": [int(v) for v in final.best_solution],
    }
    path = os.path.join(out_dir, "solve.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ratio_text = f" ratio {ratio:.4f}" if ratio is not None else ""
    print(f"solve: energy {final.best_energy:.6f}{ratio_text} rounds {len(history)} -> {path}")
    return 0


def _cmd_local_search(args) -> int:
    graph, model = _build_problem_model(args)
    rng = np.random.default_rng(args.seed or 0)
    z0 = (rng.integers(0, 2, model.n_spins) * 2 - 1).astype(np.int8)
    if (args.neighborhood or "full") == "connected":
        groups = enumerate_connected(interaction_graph(model), args.r or 1)
    else:
        groups = enumerate_full(model.n_spins, args.r or 1)
    result = local_search(model, z0, groups)
    ratio, _ = _maybe_ratio(model, result.energy)
    ratio_text = f" ratio {ratio:.4f}" if ratio is not None else ""
    print(f"local-search: energy {result.energy:.6f}{ratio_text} steps {result.steps}")
    return 0


def _experiment_spec(kind: str, args) -> ExperimentSpec:
    data = _load_config_file(args.config)
    problem_data = dict(data.get("problem", {}))
    if getattr(args, "graph", None):
        problem_data = {"source": "file", "path": args.graph}
    try:
        problem = ProblemSpec(**problem_data)
    except TypeError as exc:
        raise UsageError(f"bad [problem] section: {exc}")
    config = _solver_config(data, args, _SOLVER_FLAGS)
    spec_kwargs = {
        "kind": kind,
        "problem": problem,
        "base_config": config,
        "sweep": data.get("sweep", {}),
        "repetitions": args.reps or data.get("repetitions", 1),
        "master_seed": args.seed if args.seed is not None else data.get("master_seed", 0),
        "algorithms": data.get("algorithms", []),
        "shot_values": data.get("shot_values", []),
        "estimates": data.get("estimates", 1000),
        "recover_values": data.get("recover_values", []),
        "k_colors": getattr(args, "colors", None) or data.get("k_colors", 3),
    }
    if data.get("penalty") is not None or getattr(args, "penalty", None) is not None:
        spec_kwargs["penalty"] = getattr(args, "penalty", None) or data.get("penalty")
    try:
        return ExperimentSpec(**spec_kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad experiment spec: {exc}")


def _cmd_experiment(kind: str, args) -> int:
    spec = _experiment_spec(kind, args)
    result = run_experiment(spec, jobs=args.jobs)
    out_dir = args.out or _default_out()
    csv_path, json_path = write_results(result, spec, out_dir)
    energies = [r.energy for r in result.rows if r.energy is not None]
    ratios = [r.ratio for r in result.rows if r.ratio is not None]
    bits = [f"{kind}: {len(result.rows)} rows"]
    if energies:
        bits.append(f"best energy {min(energies):.6f}")
    if ratios:
        bits.append(f"best ratio {max(ratios):.4f}")
    if "success_rate" in result.sidecar:
        bits.append(f"success rate {result.sidecar['success_rate']:.2f}")
    print(" ".join(bits) + f" -> {csv_path}")
    return 0


def _cmd_gen_graph(args) -> int:
    if args.kind == "regular":
        graph = random_regular_graph(args.n, args.degree, args.seed or 0, args.weights)
    elif args.kind == "complete":
        graph = complete_graph(args.n, args.seed or 0, args.weights)
    else:
        graph = mycielski_graph(args.level)
    text = write_dimacs(graph)
    if args.out_file:
        with open(args.out_file, "w") as fh:
            fh.write(text)
        print(f"gen-graph: {graph.n_vertices} vertices {len(graph.edges)} edges -> {args.out_file}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlocal",
        description="Qubit-efficient variational local search for QUBO/Ising problems.",
        epilog=f"Default output directory comes from ${DEFAULT_OUT_ENV} (fallback ./qlocal-out). "
               "CSV outputs contain only bit-reproducible columns; timings are in the JSON sidecar.")
    sub = parser.add_subparsers(dest="command")

    def common(p, graph_required=False):
        p.add_argument("--config", help="TOML config file; flags override its values")
        p.add_argument("--seed", type=int, help="master seed (all randomness flows from it)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        if graph_required is not None:
            p.add_argument("--graph", required=graph_required, help="DIMACS-like graph file")

    p_solve = sub.add_parser("solve", help="run the variational solver on one instance")
    common(p_solve, graph_required=True)
    p_solve.add_argument("--problem", choices=("maxcut", "coloring"), default="maxcut")
    p_solve.add_argument("--colors", type=int, default=3, help="colors k (coloring problems)")
    p_solve.add_argument("--penalty", type=float, help="one-hot penalty (default: 1 + max degree)")
    _add_solver_flags(p_solve)

    p_ls = sub.add_parser("local-search", help="classical first-improvement local search")
    common(p_ls, graph_required=True)
    p_ls.add_argument("--problem", choices=("maxcut", "coloring"), default="maxcut")
    p_ls.add_argument("--colors", type=int, default=3)
    p_ls.add_argument("--penalty", type=float)
    p_ls.add_argument("--r", type=int, default=1)
    p_ls.add_argument("--neighborhood", choices=("full", "connected"), default="full")

    for kind, help_text in (("bench", "solver vs. baselines benchmark"),
                            ("mse", "shots vs. estimation-error study"),
                            ("coloring", "graph-coloring success-rate experiment"),
                            ("qpu-sim", "shot-noise SPSA run with best-of-S recovery")):
        p = sub.add_parser(kind, help=help_text)
        common(p, graph_required=False)
        p.add_argument("--reps", type=int, help="repetitions (seeds)")
        if kind == "coloring":
            p.add_argument("--colors", type=int, help="colors k")
            p.add_argument("--penalty", type=float)
        _add_solver_flags(p)

    p_gen = sub.add_parser("gen-graph", help="generate a benchmark graph file")
    p_gen.add_argument("--kind", choices=("regular", "complete", "mycielski"), required=True)
    p_gen.add_argument("--n", type=int, default=16)
    p_gen.add_argument("--degree", type=int, default=3)
    p_gen.add_argument("--level", type=int, default=3)
    p_gen.add_argument("--weights", choices=("unit", "uniform"), default="unit")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--out-file", help="write here instead of stdout")
    return parser


_EXPERIMENT_COMMANDS = {"bench": "bench", "mse": "mse", "coloring": "coloring", "qpu-sim": "qpu"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "local-search":
            return _cmd_local_search(args)
        if args.command in _EXPERIMENT_COMMANDS:
            return _cmd_experiment(_EXPERIMENT_COMMANDS[args.command], args)
        if args.command == "gen-graph":
            return _cmd_gen_graph(args)
        parser.print_usage(sys.stderr)
        return 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure after validation
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
