import csv
import json
import subprocess
import sys

import pytest

from dqc1sim.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, main
from dqc1sim.circuits import generate_hermitian_circuit
from dqc1sim.pauli import loads as load_pauli


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    lines = path.read_bytes().split(b"\r\n")
    assert lines[0].startswith(b"# dqc1sim ")
    return list(csv.DictReader(l.decode() for l in lines[1:] if l))


def test_haar_scatter(tmp_path):
    assert run(tmp_path, "haar_scatter", "--n", "3", "--seed-count", "2") == EXIT_OK
    rows = read_csv(tmp_path / "haar_scatter.csv")
    assert list(rows[0]) == ["N_minus", "seed", "Pq_observed", "Pq_expected"]
    assert len(rows) == 9 * 2
    header = (tmp_path / "haar_scatter.csv").read_text().splitlines()[0]
    assert "config_sha256=" in header and header.endswith("seeds=0..1")


def test_identical_configs_give_identical_bytes(tmp_path):
    args = ["trace_benchmark", "--n", "6", "--m", "2", "--seed-count", "3", "--samples", "40"]
    names = ("trace_benchmark.csv", "trace_benchmark.json")
    assert run(tmp_path, *args) == EXIT_OK
    first = [(tmp_path / n).read_bytes() for n in names]
    assert run(tmp_path, *args) == EXIT_OK
    assert [(tmp_path / n).read_bytes() for n in names] == first


def test_worker_count_does_not_change_results(tmp_path):
    args = ["trace_benchmark", "--n", "6", "--m", "2", "--seed-count", "3", "--samples", "40"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(a)]) == main([*args, "--out", str(b), "--workers", "2"]) == EXIT_OK
    assert (a / "trace_benchmark.csv").read_bytes() == (b / "trace_benchmark.csv").read_bytes()


def test_layered_scatter_one_file_per_m(tmp_path):
    assert run(tmp_path, "layered_scatter", "--n", "4", "--m", "0,2", "--seed-count", "2") == EXIT_OK
    assert (tmp_path / "layered_scatter_m0.csv").exists() and (tmp_path / "layered_scatter_m2.csv").exists()


def test_bch_convergence(tmp_path):
    assert run(tmp_path, "bch_convergence", "--n", "4", "--m", "1", "--order", "1,20",
               "--seed-count", "2", "--gate-set", "toffoli_h") == EXIT_OK
    rows = read_csv(tmp_path / "bch_convergence.csv")
    assert {"seed", "n", "m", "order", "gate_set", "eps_u"} <= set(rows[0])
    assert len(rows) == 4


def test_term_scaling(tmp_path):
    assert run(tmp_path, "term_scaling", "--n", "4", "--m", "1", "--samples", "4") == EXIT_OK
    rows = read_csv(tmp_path / "term_scaling.csv")
    assert [r["kind"] for r in rows] == ["H1", "H2", "random"]
    assert {"n", "kind", "Q3", "median", "max"} <= set(rows[0])


def test_verify(tmp_path):
    assert run(tmp_path, "verify", "--seed-count", "2", "--n", "4", "--counts", "1,1,1") == EXIT_OK
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["schema"] == 1 and report["all_pass"]


def test_config_file(tmp_path):
    conf = tmp_path / "run.toml"
    conf.write_text('n = [4]\nm = [1]\nseed_count = 2\ncounts = [1, 1, 1]\n')
    assert run(tmp_path, "verify", "--config", str(conf), "--seed-count", "1") == EXIT_OK
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["config"]["n"] == [4] and len(report["results"]) == 1


@pytest.mark.parametrize("args", [
    ["verify", "--n", "0"],
    ["haar_scatter", "--n", "20"],
    ["verify", "--gate-set", "cliffordish"],
    ["verify", "--counts", "1,2"],
])
def test_config_errors(tmp_path, args, capsys):
    assert run(tmp_path, *args) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_config_file(tmp_path):
    conf = tmp_path / "bad.toml"
    conf.write_text("n = [4\n")
    assert run(tmp_path, "verify", "--config", str(conf)) == EXIT_CONFIG
    conf.write_text("colour = 'red'\n")
    assert run(tmp_path, "verify", "--config", str(conf)) == EXIT_CONFIG
    assert run(tmp_path, "verify", "--config", str(tmp_path / "missing.toml")) == EXIT_CONFIG


def test_strict_budget(tmp_path):
    conf = tmp_path / "tight.toml"
    conf.write_text("d_term_budget = 2\n")
    args = ["trace_benchmark", "--config", str(conf), "--n", "5", "--m", "1", "--seed-count", "2"]
    assert run(tmp_path, *args) == EXIT_OK
    rows = read_csv(tmp_path / "trace_benchmark.csv")
    assert {r["status"] for r in rows} == {"skipped"}
    assert run(tmp_path, *args, "--strict") == EXIT_BUDGET


def test_dump_artifacts(tmp_path):
    assert run(tmp_path, "trace_benchmark", "--n", "5", "--m", "1", "--seed-count", "1", "--dump") == EXIT_OK
    art = tmp_path / "artifacts"
    h = load_pauli((art / "seed-0.h2.pauli").read_text())
    side = json.loads((art / "seed-0.h2.json").read_text())
    assert side["kind"] == "H2" and side["term_count"] == len(h)
    assert (art / "seed-0.circuit").read_text() == generate_hermitian_circuit(5, 1, seed=0).dumps()


def test_circuit_input(tmp_path):
    path = tmp_path / "c.circuit"
    path.write_text(generate_hermitian_circuit(4, 2, (1, 1, 1), seed=3).dumps())
    assert run(tmp_path, "verify", "--circuit", str(path), "--seed-count", "1") == EXIT_OK
    assert json.loads((tmp_path / "verify.json").read_text())["results"][0]["n"] == 4


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dqc1sim.cli", "verify", "--n", "3", "--m", "1",
                           "--counts", "1,1,1", "--seed-count", "1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "dqc1sim.cli", "nonsense"], capture_output=True)
    assert bad.returncode == 2
