import subprocess
import sys

import numpy as np
import pytest

from conftest import cycle_graph
from rotavg import io
from rotavg.cli import main


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def noisy_graph(tmp_path):
    out = tmp_path / "g.rag"
    assert run("generate", "--n", 20, "--phi", 0.2, "--p", 0, "--seed", 1, "--out", out) == 0
    return out


def test_generate_complete(noisy_graph):
    g = io.read_graph(noisy_graph)
    assert g.n == 20 and g.num_edges == 190
    truth = io.read_solution(f"{noisy_graph}.truth")
    assert truth.shape == (20, 3, 3)


def test_generate_noiseless_then_solve(tmp_path):
    graph = tmp_path / "g.rag"
    assert run("generate", "--n", 20, "--phi", 0, "--p", 0.3, "--seed", 1, "--out", graph) == 0
    rep = tmp_path / "r.json"
    assert run("solve", "--graph", graph, "--out", tmp_path / "s", "--report", rep) == 0
    assert io.read_report(rep)["objective"] <= 1e-12


@pytest.mark.parametrize("args", [
    ["generate", "--n", 5, "--phi", 0.1, "--p", 1.0, "--out", "x"],
    ["generate", "--n", 1, "--phi", 0.1, "--out", "x"],
    ["generate", "--n", 5, "--phi", 0.1, "--out", "x", "--bogus"],
    ["solve", "--graph", "g", "--out", "s", "--algorithm", "newton"],
    ["bench", "--n-list", "a", "--phi-list", 0.2],
    ["bench", "--n-list", 5, "--phi-list", 0.2, "--runs", 0],
])
def test_usage_errors(args):
    try:
        code = run(*args)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_solve_cycle_sum(tmp_path, rng):
    g, _ = cycle_graph(rng, 12)
    io.write_graph(tmp_path / "c.rag", g)
    rep = tmp_path / "r.json"
    trace = tmp_path / "t.csv"
    assert run("solve", "--graph", tmp_path / "c.rag", "--algorithm", "sum", "--init", "spanning-tree",
               "--out", tmp_path / "s", "--report", rep, "--trace", trace) == 0
    report = io.read_report(rep)
    assert report["avg_error"] <= 1e-12
    assert report["algorithm"] == "sum" and report["mu"] is not None
    assert trace.read_text().startswith("iter,objective,residual,time_s\n")


@pytest.mark.parametrize("algo", ["bcd", "sum"])
def test_solve_byte_identical(tmp_path, noisy_graph, algo):
    for name in ["a", "b"]:
        assert run("solve", "--graph", noisy_graph, "--algorithm", algo, "--init", "random", "--seed", 3,
                   "--out", tmp_path / name) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_solve_missing_file(tmp_path):
    assert run("solve", "--graph", tmp_path / "none", "--out", tmp_path / "s") == 2


def test_solve_parse_error(tmp_path):
    (tmp_path / "g").write_text("RAG 1 2 1\n0 0 1 0 0 0 1 0 0 0 1\n")
    assert run("solve", "--graph", tmp_path / "g", "--out", tmp_path / "s") == 2


def test_certify_solved(tmp_path, noisy_graph):
    sol = tmp_path / "s"
    assert run("solve", "--graph", noisy_graph, "--algorithm", "bcd", "--out", sol) == 0
    rep = tmp_path / "c.json"
    assert run("certify", "--graph", noisy_graph, "--solution", sol, "--report", rep) == 0
    report = io.read_report(rep)
    assert report["optimal"] is True
    assert report["min_eig"] >= -1e-8


def test_certify_ground_truth_not_stationary(tmp_path):
    graph = tmp_path / "g.rag"
    run("generate", "--n", 20, "--phi", 0.5, "--seed", 2, "--out", graph)
    rep = tmp_path / "c.json"
    assert run("certify", "--graph", graph, "--solution", f"{graph}.truth", "--report", rep) == 0
    report = io.read_report(rep)
    assert report["asymmetry"] > 1.0
    assert report["optimal"] is False


def test_certify_dimension_mismatch(tmp_path, noisy_graph):
    io.write_solution(tmp_path / "s", np.tile(np.eye(3), (3, 1, 1)))
    assert run("certify", "--graph", noisy_graph, "--solution", tmp_path / "s") == 2


def test_bench_single_run_equals_solve(tmp_path):
    rep = tmp_path / "b.json"
    assert run("bench", "--n-list", 10, "--phi-list", 0.3, "--p-list", 0.3, "--runs", 1,
               "--algorithms", "sum", "--seed", 5, "--report", rep) == 0
    cell = io.read_report(rep)["cells"][0]

    graph = tmp_path / "g.rag"
    run("generate", "--n", 10, "--phi", 0.3, "--p", 0.3, "--seed", 5, "--out", graph)
    srep = tmp_path / "s.json"
    run("solve", "--graph", graph, "--algorithm", "sum", "--seed", 5, "--out", tmp_path / "s", "--report", srep)
    single = io.read_report(srep)
    # file round trip at 17 digits is exact, so the numbers match bit for bit
    assert cell["avg_error"] == single["avg_error"]
    assert cell["min_eig"] == single["min_eig"]
    assert cell["iterations"] == single["iterations"]


def test_bench_two_algorithms_agree(tmp_path):
    rep = tmp_path / "b.json"
    assert run("bench", "--n-list", 20, "--phi-list", 0.2, "--p-list", 0, "--runs", 50,
               "--algorithms", "bcd,sum", "--report", rep) == 0
    cells = io.read_report(rep)["cells"]
    assert [c["algorithm"] for c in cells] == ["bcd", "sum"]
    assert abs(cells[0]["avg_error"] - cells[1]["avg_error"]) <= 1e-3


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.rag"
    proc = subprocess.run([sys.executable, "-m", "rotavg", "generate", "--n", "4", "--phi", "0.1", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    proc = subprocess.run([sys.executable, "-m", "rotavg", "solve"], capture_output=True, text=True)
    assert proc.returncode == 1


@pytest.mark.slow
def test_bench_sum_faster_than_bcd_at_200(tmp_path):
    rep = tmp_path / "b.json"
    assert run("bench", "--n-list", 200, "--phi-list", 0.2, "--runs", 3, "--algorithms", "bcd,sum",
               "--report", rep) == 0
    bcd, sm = io.read_report(rep)["cells"]
    assert sm["time_s"] < bcd["time_s"]
