import json
import os

import pytest

from qlocal.cli import main
from qlocal.generators import mycielski_graph, write_dimacs


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "tri.col"
    path.write_text("p edge 3 3\ne 1 2\ne 1 3\ne 2 3\n")
    return str(path)


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == 1


def test_unknown_flag_is_usage_error():
    assert main(["solve", "--graph", "x", "--no-such-flag"]) == 1


def test_help_exits_cleanly():
    assert main(["--help"]) == 0


def test_missing_graph_file_is_usage_error(tmp_path):
    code = main(["solve", "--graph", str(tmp_path / "absent.col"),
                 "--out", str(tmp_path)])
    assert code == 1


def test_solve_maxcut_writes_json(triangle_file, tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["solve", "--graph", triangle_file, "--problem", "maxcut",
                 "--r", "1", "--layers", "2", "--seed", "7", "--out", str(out),
                 "--iterations", "80"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "energy" in printed
    payload = json.load(open(out / "solve.json"))
    assert payload["best_energy"] == pytest.approx(-1.0)
    assert payload["ratio"] == pytest.approx(1.0)
    assert payload["effective_config"]["seed"] == 7


def test_solve_coloring(triangle_file, tmp_path):
    out = tmp_path / "results"
    code = main(["solve", "--graph", triangle_file, "--problem", "coloring",
                 "--colors", "3", "--layers", "2", "--seed", "3", "--out", str(out),
                 "--iterations", "80", "--rounds", "3", "--recover", "4"])
    assert code == 0
    payload = json.load(open(out / "solve.json"))
    assert payload["effective_config"]["coloring_k"] == 3


def test_local_search_prints_summary(triangle_file, capsys):
    assert main(["local-search", "--graph", triangle_file, "--r", "1",
                 "--seed", "1"]) == 0
    assert "energy" in capsys.readouterr().out


def test_gen_graph_round_trip(tmp_path):
    path = tmp_path / "g.col"
    assert main(["gen-graph", "--kind", "mycielski", "--level", "2",
                 "--out-file", str(path)]) == 0
    from qlocal.model import parse_graph
    g = parse_graph(path.read_text())
    ref = mycielski_graph(2)
    assert g.edges == ref.edges


def test_bench_with_config_file(tmp_path, capsys):
    graph = tmp_path / "g.col"
    main(["gen-graph", "--kind", "regular", "--n", "8", "--degree", "3",
          "--weights", "uniform", "--seed", "2", "--out-file", str(graph)])
    config = tmp_path / "bench.toml"
    config.write_text(
        "repetitions = 2\n"
        "master_seed = 5\n"
        "[problem]\n"
        f'source = "file"\npath = "{graph}"\n'
        "[config]\n"
        "r = 1\nn_layers = 2\nmax_iterations = 60\ninitial = \"random\"\n"
        "[[algorithms]]\nkind = \"quantum\"\n"
        "[[algorithms]]\nkind = \"local-search\"\nr = 1\n")
    out = tmp_path / "out"
    assert main(["bench", "--config", str(config), "--out", str(out)]) == 0
    rows = open(out / "bench.csv").read().strip().split("\n")
    assert len(rows) == 1 + 4
    sidecar = json.load(open(out / "bench.json"))
    assert sidecar["spec"]["repetitions"] == 2


def test_flag_overrides_config_file(tmp_path):
    config = tmp_path / "mse.toml"
    config.write_text(
        "master_seed = 1\nestimates = 10\nshot_values = [1, 8]\n"
        "[problem]\nsource = \"regular\"\nn = 8\ndegree = 3\ngraph_seed = 1\n"
        "[config]\nr = 1\nn_layers = 1\nalpha = 2.0\nm_scale = 4.0\n")
    out = tmp_path / "out"
    assert main(["mse", "--config", str(config), "--seed", "42",
                 "--out", str(out)]) == 0
    sidecar = json.load(open(out / "mse.json"))
    assert sidecar["spec"]["master_seed"] == 42


def test_bad_config_file_is_usage_error(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("this is not toml [ [")
    assert main(["bench", "--config", str(config)]) == 1


def test_unknown_config_key_is_usage_error(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[config]\nnot_a_field = 3\n[problem]\nsource = \"mycielski\"\nlevel = 1\n")
    assert main(["coloring", "--config", str(config)]) == 1


def test_env_var_sets_default_output_dir(triangle_file, tmp_path, monkeypatch):
    out = tmp_path / "from-env"
    monkeypatch.setenv("QLOCAL_OUT_DIR", str(out))
    assert main(["solve", "--graph", triangle_file, "--layers", "2",
                 "--seed", "1", "--iterations", "50"]) == 0
    assert (out / "solve.json").exists()


def test_qpu_sim_subcommand(tmp_path):
    config = tmp_path / "qpu.toml"
    config.write_text(
        "repetitions = 1\nmaster_seed = 2\nrecover_values = [1, 4]\n"
        "[problem]\nsource = \"regular\"\nn = 8\ndegree = 3\ngraph_seed = 4\n"
        "weights = \"uniform\"\n"
        "[config]\nr = 1\nn_layers = 2\nn_shots = 100\nmax_iterations = 80\n"
        "initial = \"random\"\n")
    out = tmp_path / "out"
    assert main(["qpu-sim", "--config", str(config), "--out", str(out)]) == 0
    rows = open(out / "qpu.csv").read().strip().split("\n")
    assert len(rows) == 1 + 2  # one row per recovery budget
