import json
import math
import subprocess
import sys

import numpy as np
import pytest

from caradory.cli import build_parser, default_max_iter, main
from caradory.geometry import LqBall
from caradory.instances import gen_random_polytope, save_instance
from caradory.objectives import ObjectiveSpec
from caradory.solvers import Algorithm, SolverConfig, Step, TRACE_FIELDS, solve
from caradory.traceio import read_trace_csv, trace_from_json, trace_to_csv, trace_to_json


def run(tmp_path, *argv):
    return main(list(argv))


def test_fcfw_sparse_example(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["solve", "--algo", "fcfw", "--p", "2", "--epsilon", "0.02", "--gen", "random",
                 "--n", "100", "--m", "101", "--k", "10", "--seed", "7", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    card = int(next(l for l in text.splitlines() if l.startswith("cardinality:")).split()[1])
    assert card <= 10
    assert "accuracy:" in text
    body = out.read_text()
    assert "# max_iter:" in body and "# seed: 7" in body
    assert body.splitlines()[[i for i, l in enumerate(body.splitlines()) if not l.startswith("#")][0]] == ",".join(TRACE_FIELDS)


def test_epsilon_already_met(tmp_path, capsys):
    code = main(["solve", "--algo", "fw", "--p", "3", "--epsilon", "1e9", "--n", "5", "--m", "6", "--k", "2",
                 "--out", str(tmp_path / "t.csv")])
    assert code == 0
    assert "iterations: 0" in capsys.readouterr().out


def test_hcgs_rejects_p2(tmp_path, capsys):
    code = main(["solve", "--algo", "hcgs", "--p", "2", "--out", str(tmp_path / "t.csv")])
    assert code == 1
    assert "hcgs requires p in [1,2) or inf" in capsys.readouterr().err


def test_iteration_cap_exit_code(tmp_path):
    assert main(["solve", "--algo", "fw", "--epsilon", "1e-9", "--max-iter", "3", "--n", "10", "--m", "20",
                 "--k", "20", "--out", str(tmp_path / "t.csv")]) == 2


@pytest.mark.parametrize("argv", [
    ["solve", "--bogus"],
    ["solve", "--algo", "nope"],
    ["solve", "--p", "0.5"],
    ["solve", "--format", "xml"],
    ["frobnicate"],
])
def test_argument_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_malformed_instance_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"vertices": [[1, 2], [3]],\n "target": [1, 2], "p": 2}')
    code = main(["solve", "--instance", str(path), "--out", str(tmp_path / "t.csv")])
    assert code == 1
    assert "vertices[1]" in capsys.readouterr().err


def test_missing_instance_file(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == 1


def test_instance_and_gen_conflict(tmp_path):
    path = tmp_path / "i.json"
    save_instance(gen_random_polytope(3, 4, 2, seed=0), path)
    assert main(["solve", "--instance", str(path), "--gen", "random"]) == 1


def test_instance_file_run(tmp_path, capsys):
    path = tmp_path / "i.json"
    save_instance(gen_random_polytope(6, 9, 3, seed=2), path)
    assert main(["solve", "--instance", str(path), "--algo", "afw", "--epsilon", "1e-4",
                 "--out", str(tmp_path / "t.csv")]) == 0


def test_json_round_trip(tmp_path):
    out = tmp_path / "t.json"
    assert main(["solve", "--algo", "afw", "--p", "3", "--n", "8", "--m", "12", "--k", "12",
                 "--epsilon", "1e-3", "--format", "json", "--out", str(out)]) == 0
    trace, combo = trace_from_json(out.read_text())
    inst = gen_random_polytope(8, 12, 12, seed=0, p=3.0)
    cfg = SolverConfig(Algorithm.AFW, Step.CLOSED_LOOP, epsilon=1e-3,
                       max_iter=json.loads(out.read_text())["header"]["max_iter"])
    combo2, trace2 = solve(inst.feasible_set, inst.objective, cfg)
    strip = lambda tr: [(r.t, r.f_value, r.primal_gap, r.cardinality, r.gamma, r.vertex_index, r.kind) for r in tr.records]
    assert strip(trace) == strip(trace2)
    assert trace.status == trace2.status
    assert combo.support == combo2.support


def test_in_memory_round_trips():
    inst = gen_random_polytope(5, 8, 8, seed=1)
    combo, trace = solve(inst.feasible_set, inst.objective, SolverConfig("fcfw", epsilon=1e-4))
    back, back_combo = trace_from_json(trace_to_json(trace, combo, {"seed": 0}))
    assert back == trace
    assert back_combo.support == combo.support
    np.testing.assert_array_equal(back_combo.point, combo.point)
    rows = read_trace_csv(trace_to_csv(trace, {"seed": 0}))
    assert [(r.t, r.f_value, r.gamma, r.vertex_index) for r in rows] == \
           [(r.t, r.f_value, r.gamma, r.vertex_index) for r in trace.records]


def test_projection_and_bound_report(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["solve", "--algo", "fw", "--gen", "ball", "--n", "3", "--project", "--epsilon", "1e-5",
                 "--bound", "thm3", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "distance: 1.0 (analytic)" in text
    assert "bound thm3: holds" in text
    report = (tmp_path / "t.thm3.csv").read_text().splitlines()
    assert report[0] == "t,primal_gap,bound,checked"


def test_bound_needs_matching_mode(tmp_path, capsys):
    assert main(["solve", "--algo", "hcgs", "--p", "1", "--bound", "thm1", "--n", "5", "--m", "6",
                 "--out", str(tmp_path / "t.csv")]) == 1


def test_hcgs_thm7_report(tmp_path, capsys):
    assert main(["solve", "--algo", "hcgs", "--p", "inf", "--n", "10", "--m", "12", "--epsilon", "0.5",
                 "--bound", "thm7", "--out", str(tmp_path / "t.csv")]) == 0
    assert "bound thm7: holds" in capsys.readouterr().out


def test_default_max_iter_is_ten_times_bound():
    inst = gen_random_polytope(5, 6, 6, seed=0, p=3.0)
    from caradory.geometry import diameter
    D = diameter(inst.feasible_set, 3.0)
    got = default_max_iter(inst.feasible_set, inst.objective, Algorithm.FW, Step.CLOSED_LOOP, 0.1)
    assert got == 10 * math.ceil(8 * 2 * D ** 2 / 0.01)


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["solve", "--help"])
    text = capsys.readouterr().out
    assert "default: 0" in text and "default: csv" in text and "10 x the bound" in text


def test_bench_single_row(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--algos", "fcfw", "--seeds", "1", "--n", "10", "--m", "12", "--k", "4",
                 "--epsilon", "0.01", "--workers", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("fcfw,0,2.0,")
    assert (tmp_path / "b_curves.csv").exists()


def test_bench_ordering_with_pool(tmp_path, monkeypatch):
    monkeypatch.setenv("CARADORY_THREADS", "2")
    out = tmp_path / "b.csv"
    assert main(["bench", "--algos", "fw,fcfw", "--seeds", "3", "--n", "8", "--m", "10", "--k", "10",
                 "--epsilon", "0.05", "--out", str(out)]) == 0
    rows = [l.split(",")[:2] for l in out.read_text().splitlines()[1:]]
    assert rows == [["fw", "0"], ["fw", "1"], ["fw", "2"], ["fcfw", "0"], ["fcfw", "1"], ["fcfw", "2"]]


def test_bench_hadamard_emits_lower_bound(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["bench", "--gen", "hadamard", "--n", "16", "--ps", "4", "--algos", "fw",
                 "--epsilon", "0.1", "--workers", "1", "--out", str(out)]) == 0
    lb = (tmp_path / "h_lower_bound.csv").read_text().splitlines()
    assert lb[0] == "cardinality,epsilon" and len(lb) == 17
    s, eps = lb[4].split(",")
    assert float(eps) == pytest.approx(math.sqrt(1 / int(s) - 1 / 16))


def test_bench_rejects_bad_threads(monkeypatch, tmp_path):
    monkeypatch.setenv("CARADORY_THREADS", "many")
    assert main(["bench", "--algos", "fw", "--seeds", "1", "--n", "4", "--m", "5",
                 "--out", str(tmp_path / "b.csv")]) == 1


def test_lower_bound_and_hadamard_commands(tmp_path, capsys):
    assert main(["lower-bound", "--n", "64", "--epsilon", str(math.sqrt(63 / 64))]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0)
    assert main(["lower-bound", "--n", "63"]) == 1
    out = tmp_path / "h.json"
    assert main(["hadamard", "--n", "8", "--p", "4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["kind"] == "hadamard"


def test_oracle_command(capsys):
    assert main(["oracle", "--n", "3", "--m", "5", "--k", "2", "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["distance"] < 1e-9 and doc["min_cardinality"] <= 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "caradory.cli", "lower-bound", "--n", "4", "--epsilon", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and float(proc.stdout) == pytest.approx(0.8)
