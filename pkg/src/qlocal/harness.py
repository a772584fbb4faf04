"""Reproducible experiment drivers.

Every experiment is a pure function of its spec and master seed: rows carry
their own seeds derived from (master seed, row index), execute independently
(optionally in a process pool), and are canonically sorted before writing, so
the emitted CSV is byte-for-byte reproducible.  Wall-clock timings are kept
out of the CSV and reported in the JSON sidecar instead.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .auxiliary import TransformParams, compile_objective, evaluate, q_vector_from_shots
from .baselines import brute_force, local_search, optimize_bilinear
from .generators import complete_graph, mycielski_graph, random_regular_graph
from .model import (Graph, PolynomialModel, UndefinedRatioError, approximation_ratio,
                    build_graph_coloring, build_maxcut, energy, interaction_graph,
                    parse_graph, qubo_to_ising)
from .neighborhood import enumerate_connected, enumerate_full
from .optimizer import (SolverConfig, _exact_q, build_encoding, composite_eval,
                        minimize_spsa, solve)
from .recovery import recover_best
from .simulator import AnsatzShape, prepare, probabilities, sample

EXPERIMENT_KINDS = ("mse", "bench", "coloring", "qpu")


@dataclass
class ProblemSpec:
    """Where the problem instance comes from."""

    source: str = "regular"          # file | regular | complete | mycielski
    path: str | None = None
    n: int = 16
    degree: int = 3
    level: int = 3
    weights: str = "uniform"
    graph_seed: int = 0

    def build_graph(self) -> Graph:
        if self.source == "file":
            with open(self.path, "rb") as fh:
                return parse_graph(fh.read())
        if self.source == "regular":
            return random_regular_graph(self.n, self.degree, self.graph_seed, self.weights)
        if self.source == "complete":
            return complete_graph(self.n, self.graph_seed, self.weights)
        if self.source == "mycielski":
            return mycielski_graph(self.level)
        raise ValueError(f"unknown problem source {self.source!r}")


@dataclass
class ExperimentSpec:
    """One experiment: a problem, a solver configuration sweep, repetitions."""

    kind: str
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    base_config: SolverConfig = field(default_factory=SolverConfig)
    sweep: dict = field(default_factory=dict)          # SolverConfig field -> list of values
    repetitions: int = 1
    master_seed: int = 0
    output: str | None = None
    algorithms: list = field(default_factory=list)     # bench: extra classical baselines
    shot_values: list = field(default_factory=list)    # mse: shot counts N
    estimates: int = 1000                              # mse: estimate repetitions per point
    recover_values: list = field(default_factory=list) # qpu: most-probable sample counts S
    k_colors: int = 3                                  # coloring
    penalty: float | None = None                       # coloring

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for key, values in self.sweep.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise ValueError(f"sweep entry {key!r} must be a non-empty list")


@dataclass
class ResultRow:
    """One self-describing result record."""

    experiment: str
    row: int
    seed: int
    config: str
    energy: float | None
    ratio: float | None
    rounds: int | None
    shots: int | None
    wall_time: float
    extra: str


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    sidecar: dict


CSV_COLUMNS = ("experiment", "row", "seed", "config", "energy", "ratio",
               "rounds", "shots", "extra")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    """Deterministic CSV: every column except wall time, which is timing noise."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=lambda r: r.row):
        writer.writerow([_fmt(getattr(r, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def expand_sweep(base: SolverConfig, sweep: dict) -> list[SolverConfig]:
    """Cartesian product of the sweep lists applied over the base config."""
    configs = [base]
    for key in sorted(sweep):
        configs = [replace(cfg, **{key: value}) for cfg in configs for value in sweep[key]]
    return configs


def _config_label(config: SolverConfig) -> str:
    d = asdict(config)
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _row_seed(master_seed: int, row: int) -> int:
    return int(np.random.SeedSequence((master_seed, row)).generate_state(1)[0])


def _initial_spins_for_row(master_seed: int, rep: int, n_spins: int) -> np.ndarray:
    """Shared per-repetition starting solution so algorithms are paired."""
    rng = np.random.default_rng(np.random.SeedSequence((master_seed, 7001, rep)))
    return (rng.integers(0, 2, n_spins) * 2 - 1).astype(np.int8)


def _one_hot_for_row(master_seed: int, rep: int, n_vertices: int, k: int) -> np.ndarray:
    """Random feasible coloring: exactly one -1 bit per vertex block."""
    rng = np.random.default_rng(np.random.SeedSequence((master_seed, 7002, rep)))
    z = np.ones(n_vertices * k, dtype=np.int8)
    for v in range(n_vertices):
        z[v * k + int(rng.integers(0, k))] = -1
    return z


def _safe_ratio(found: float, optimal: float | None):
    if optimal is None:
        return None
    try:
        return approximation_ratio(found, optimal)
    except UndefinedRatioError:
        return None


# ---------------------------------------------------------------------------
# row executors (top-level so process pools can pickle the tasks)

def _run_task(task: dict) -> list[ResultRow]:
    start = time.perf_counter()
    try:
        rows = _TASK_RUNNERS[task["task_kind"]](task)
    except Exception as exc:  # recorded, the run continues
        rows = [ResultRow(task["experiment"], task["row"], task.get("seed", 0),
                          task.get("config_label", ""), None, None, None, None, 0.0,
                          json.dumps({"error": f"{type(exc).__name__}: {exc}"}))]
    elapsed = time.perf_counter() - start
    for r in rows:
        r.wall_time = elapsed / len(rows)
    return rows


def _mse_task(task: dict) -> list[ResultRow]:
    model: PolynomialModel = task["model"]
    config: SolverConfig = task["config"]
    encoding = build_encoding(model, config)
    m_scale = float(model.n_spins) if config.m_scale is None else config.m_scale
    params = TransformParams(config.alpha, m_scale)
    shape = AnsatzShape(max(2, encoding.n_qubits), config.n_layers)
    z0 = np.ones(model.n_spins, dtype=np.int8)
    obj = compile_objective(model, z0, encoding)
    theta_ss = np.random.SeedSequence((task["master_seed"], 31, task["config_index"]))
    theta = np.random.default_rng(theta_ss).uniform(0.0, 2.0 * np.pi, shape.n_params)
    exact = composite_eval(obj, shape, theta, None, params)
    n_shots = task["n_shots"]
    state = prepare(shape, theta)
    sample_ss = np.random.SeedSequence(
        (task["master_seed"], 37, task["config_index"], task["shot_index"]))
    errors = np.empty(task["estimates"])
    for rep, child in enumerate(sample_ss.spawn(task["estimates"])):
        q = q_vector_from_shots(sample(state, n_shots, child), params, encoding)
        errors[rep] = evaluate(obj, q) - exact
    mse = float(np.mean(errors ** 2))
    extra = {"n_shots": n_shots, "mse": mse, "exact": exact,
             "r": config.r, "m_scale": m_scale, "estimates": task["estimates"]}
    return [ResultRow(task["experiment"], task["row"], task["seed"],
                      task["config_label"], None, None, None,
                      n_shots * task["estimates"], 0.0,
                      json.dumps(extra, sort_keys=True))]


def _bench_quantum_task(task: dict) -> list[ResultRow]:
    model: PolynomialModel = task["model"]
    config: SolverConfig = replace(task["config"], seed=task["seed"])
    z0 = _initial_spins_for_row(task["master_seed"], task["rep"], model.n_spins)
    final, history = solve(model, config, z0=z0)
    ratio = _safe_ratio(final.best_energy, task.get("optimal"))
    extra = {"algorithm": "quantum", "rep": task["rep"]}
    return [ResultRow(task["experiment"], task["row"], task["seed"], task["config_label"],
                      final.best_energy, ratio, len(history),
                      sum(h.shots_used for h in history), 0.0,
                      json.dumps(extra, sort_keys=True))]


def _bench_local_search_task(task: dict) -> list[ResultRow]:
    model: PolynomialModel = task["model"]
    z0 = _initial_spins_for_row(task["master_seed"], task["rep"], model.n_spins)
    if task["neighborhood"] == "connected":
        groups = enumerate_connected(interaction_graph(model), task["r"])
    else:
        groups = enumerate_full(model.n_spins, task["r"])
    res = local_search(model, z0, groups)
    ratio = _safe_ratio(res.energy, task.get("optimal"))
    extra = {"algorithm": "local-search", "rep": task["rep"], "r": task["r"],
             "neighborhood": task["neighborhood"], "steps": res.steps,
             "evaluations": res.evaluations}
    return [ResultRow(task["experiment"], task["row"], task["seed"], task["config_label"],
                      res.energy, ratio, None, None, 0.0, json.dumps(extra, sort_keys=True))]


def _bench_bilinear_task(task: dict) -> list[ResultRow]:
    model: PolynomialModel = task["model"]
    rng = np.random.default_rng(np.random.SeedSequence((task["master_seed"], 7003, task["rep"])))
    q0 = rng.uniform(-1.0, 1.0, model.n_spins)
    z = optimize_bilinear(model, q0)
    e = energy(model, z)
    ratio = _safe_ratio(e, task.get("optimal"))
    extra = {"algorithm": "bilinear", "rep": task["rep"]}
    return [ResultRow(task["experiment"], task["row"], task["seed"], task["config_label"],
                      e, ratio, None, None, 0.0, json.dumps(extra, sort_keys=True))]


def _coloring_task(task: dict) -> list[ResultRow]:
    model: PolynomialModel = task["model"]
    k = task["k_colors"]
    config: SolverConfig = replace(task["config"], seed=task["seed"],
                                   neighborhood="coloring-swaps", coloring_k=k)
    z0 = _one_hot_for_row(task["master_seed"], task["rep"], model.n_spins // k, k)
    final, history = solve(model, config, z0=z0)
    objective = final.best_energy + model.offset
    conflicts = int(round(objective))
    extra = {"rep": task["rep"], "objective": objective, "conflicts": conflicts,
             "success": bool(objective < 0.5), "k_colors": k}
    return [ResultRow(task["experiment"], task["row"], task["seed"], task["config_label"],
                      final.best_energy, None, len(history),
                      sum(h.shots_used for h in history), 0.0,
                      json.dumps(extra, sort_keys=True))]


def _qpu_task(task: dict) -> list[ResultRow]:
    """One SPSA shot-noise run, then best-of-S recovery for every S in the sweep."""
    model: PolynomialModel = task["model"]
    config: SolverConfig = task["config"]
    encoding = build_encoding(model, config)
    m_scale = float(model.n_spins) if config.m_scale is None else config.m_scale
    params = TransformParams(config.alpha, m_scale)
    shape = AnsatzShape(max(2, encoding.n_qubits), config.n_layers)
    z0 = _initial_spins_for_row(task["master_seed"], task["rep"], model.n_spins)
    obj = compile_objective(model, z0, encoding)
    root = np.random.SeedSequence((task["master_seed"], 73, task["rep"]))
    theta_ss, opt_ss, spsa_ss, final_ss = root.spawn(4)
    theta0 = np.random.default_rng(theta_ss).uniform(0.0, 2.0 * np.pi, shape.n_params)

    def objective(t):
        return composite_eval(obj, shape, t, config.n_shots, params, opt_ss.spawn(1)[0])

    result = minimize_spsa(objective, theta0, config.max_iterations, spsa_ss,
                           config.spsa_a, config.spsa_c, config.spsa_stability)
    state = prepare(shape, result.theta)
    if config.n_shots is None:
        q = _exact_q(obj, probabilities(state), params)
        shots_used = 0
    else:
        q = q_vector_from_shots(sample(state, config.n_shots, final_ss), params, encoding)
        shots_used = (result.evaluations + 1) * config.n_shots
    rows = []
    for s_index, n_best in enumerate(task["recover_values"]):
        z, e = recover_best(obj, q, n_best)
        ratio = _safe_ratio(e, task.get("optimal"))
        extra = {"rep": task["rep"], "n_recover": n_best}
        rows.append(ResultRow(task["experiment"], task["row"] + s_index, task["seed"],
                              task["config_label"], e, ratio, 1, shots_used, 0.0,
                              json.dumps(extra, sort_keys=True)))
    return rows


_TASK_RUNNERS = {
    "mse": _mse_task,
    "bench-quantum": _bench_quantum_task,
    "bench-local-search": _bench_local_search_task,
    "bench-bilinear": _bench_bilinear_task,
    "coloring": _coloring_task,
    "qpu": _qpu_task,
}


# ---------------------------------------------------------------------------
# experiment drivers

def _execute(tasks: list[dict], jobs: int) -> list[ResultRow]:
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: r.row)
    return rows


def _base_sidecar(spec: ExperimentSpec, rows: list[ResultRow]) -> dict:
    return {
        "spec": asdict(spec),
        "wall_times": {str(r.row): r.wall_time for r in rows},
    }


def _build_model(spec: ExperimentSpec) -> PolynomialModel:
    graph = spec.problem.build_graph()
    if spec.kind == "coloring":
        return qubo_to_ising(build_graph_coloring(graph, spec.k_colors, spec.penalty))
    return build_maxcut(graph)


def run_mse_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Shot-count study: MSE of the finite-shot estimate against the exact value."""
    if not spec.shot_values:
        raise ValueError("mse experiment needs shot_values")
    model = _build_model(spec)
    configs = expand_sweep(spec.base_config, spec.sweep)
    tasks = []
    row = 0
    for config_index, config in enumerate(configs):
        for shot_index, n_shots in enumerate(spec.shot_values):
            tasks.append({
                "task_kind": "mse", "experiment": "mse", "row": row,
                "seed": _row_seed(spec.master_seed, row),
                "master_seed": spec.master_seed,
                "model": model, "config": config, "config_index": config_index,
                "config_label": _config_label(config),
                "n_shots": int(n_shots), "shot_index": shot_index,
                "estimates": spec.estimates,
            })
            row += 1
    rows = _execute(tasks, jobs)
    return ExperimentResult(rows, _base_sidecar(spec, rows))


def run_benchmark(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Quantum solver and classical baselines over repeated seeds, with ratios."""
    model = _build_model(spec)
    optimal = None
    if model.n_spins <= 24:
        _, optimal = brute_force(model)
    algorithms = spec.algorithms or [{"kind": "quantum"}]
    tasks = []
    row = 0
    for algo in algorithms:
        kind = algo.get("kind", "quantum")
        if kind == "quantum":
            configs = expand_sweep(spec.base_config, spec.sweep)
            for config in configs:
                for rep in range(spec.repetitions):
                    tasks.append({
                        "task_kind": "bench-quantum", "experiment": "bench", "row": row,
                        "seed": _row_seed(spec.master_seed, row),
                        "master_seed": spec.master_seed, "model": model,
                        "config": config, "config_label": _config_label(config),
                        "rep": rep, "optimal": optimal,
                    })
                    row += 1
        elif kind == "local-search":
            label = json.dumps({"algorithm": "local-search",
                                "r": algo.get("r", 1),
                                "neighborhood": algo.get("neighborhood", "full")},
                               sort_keys=True)
            for rep in range(spec.repetitions):
                tasks.append({
                    "task_kind": "bench-local-search", "experiment": "bench", "row": row,
                    "seed": _row_seed(spec.master_seed, row),
                    "master_seed": spec.master_seed, "model": model,
                    "r": algo.get("r", 1),
                    "neighborhood": algo.get("neighborhood", "full"),
                    "config_label": label, "rep": rep, "optimal": optimal,
                })
                row += 1
        elif kind == "bilinear":
            label = json.dumps({"algorithm": "bilinear"}, sort_keys=True)
            for rep in range(spec.repetitions):
                tasks.append({
                    "task_kind": "bench-bilinear", "experiment": "bench", "row": row,
                    "seed": _row_seed(spec.master_seed, row),
                    "master_seed": spec.master_seed, "model": model,
                    "config_label": label, "rep": rep, "optimal": optimal,
                })
                row += 1
        else:
            raise ValueError(f"unknown benchmark algorithm {kind!r}")
    rows = _execute(tasks, jobs)
    sidecar = _base_sidecar(spec, rows)
    sidecar["optimal_energy"] = optimal
    ecdf: dict[str, list[float]] = {}
    for r in rows:
        if r.ratio is not None:
            ecdf.setdefault(r.config, []).append(r.ratio)
    sidecar["ecdf"] = {k: sorted(v) for k, v in ecdf.items()}
    return ExperimentResult(rows, sidecar)


def run_coloring(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Graph-coloring runs from random feasible starts; reports success rate."""
    model = _build_model(spec)
    config = replace(spec.base_config, neighborhood="coloring-swaps",
                     coloring_k=spec.k_colors, encoding="explicit")
    tasks = []
    for rep in range(spec.repetitions):
        tasks.append({
            "task_kind": "coloring", "experiment": "coloring", "row": rep,
            "seed": _row_seed(spec.master_seed, rep),
            "master_seed": spec.master_seed, "model": model,
            "config": config, "config_label": _config_label(config),
            "rep": rep, "k_colors": spec.k_colors,
        })
    rows = _execute(tasks, jobs)
    sidecar = _base_sidecar(spec, rows)
    outcomes = [json.loads(r.extra) for r in rows if "success" in r.extra]
    if outcomes:
        sidecar["success_rate"] = sum(o["success"] for o in outcomes) / len(outcomes)
        sidecar["min_conflicts"] = min(o["conflicts"] for o in outcomes)
    return ExperimentResult(rows, sidecar)


def run_qpu_emulation(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Shot-noise SPSA runs followed by a best-of-S recovery sweep."""
    if not spec.recover_values:
        raise ValueError("qpu experiment needs recover_values")
    model = _build_model(spec)
    optimal = None
    if model.n_spins <= 24:
        _, optimal = brute_force(model)
    config = replace(spec.base_config, method="spsa")
    if config.n_shots is None:
        raise ValueError("qpu emulation needs finite n_shots")
    stride = len(spec.recover_values)
    tasks = []
    for rep in range(spec.repetitions):
        tasks.append({
            "task_kind": "qpu", "experiment": "qpu", "row": rep * stride,
            "seed": _row_seed(spec.master_seed, rep),
            "master_seed": spec.master_seed, "model": model,
            "config": config, "config_label": _config_label(config),
            "rep": rep, "recover_values": [int(s) for s in spec.recover_values],
            "optimal": optimal,
        })
    rows = _execute(tasks, jobs)
    sidecar = _base_sidecar(spec, rows)
    sidecar["optimal_energy"] = optimal
    return ExperimentResult(rows, sidecar)


RUNNERS = {
    "mse": run_mse_experiment,
    "bench": run_benchmark,
    "coloring": run_coloring,
    "qpu": run_qpu_emulation,
}


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    return RUNNERS[spec.kind](spec, jobs)


def write_results(result: ExperimentResult, spec: ExperimentSpec, out_dir) -> tuple[str, str]:
    """Write <kind>.csv and <kind>.json into out_dir; returns the two paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{spec.kind}.csv")
    json_path = os.path.join(out_dir, f"{spec.kind}.json")
    with open(csv_path, "w") as fh:
        fh.write(rows_to_csv(result.rows))
    with open(json_path, "w") as fh:
        json.dump(result.sidecar, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return csv_path, json_path
