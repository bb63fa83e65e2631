import csv
import io

import pytest

from greenchain import cli, harness
from greenchain.formats import load_topology
from greenchain.power import PowerMode, reference_power, total_power
from greenchain.scenarios import preset, structure_preset

from conftest import DATA

SMALL_CFG = "seed = 1\nsize = small\npsi = 2\nrate_mean_mbps = 100\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL_CFG)
    return p


def _read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_eta_and_eta_bar():
    assert harness.eta(30.0, 120.0) == 0.25
    assert harness.eta_bar(0.25, 0.5) == 1.5
    with pytest.raises(harness.ZeroReference):
        harness.eta(1.0, 0.0)
    with pytest.raises(harness.DegenerateBaseline):
        harness.eta_bar(0.2, 1.0)


def test_run_spec_powers_agree_with_state():
    r = harness.run_spec(preset("small", 2, rate_mean_mbps=100.0, psi=2))
    g, s = r.scenario.graph, r.solve.state
    assert r.total_power == total_power(g, s, PowerMode.TOTAL)
    assert r.reference_power == reference_power(g, s, loaded=True)
    assert r.eta == r.total_power / r.reference_power
    assert 0 < r.eta < 1
    assert r.report.ok


def test_output_files(cfg, tmp_path):
    out = tmp_path / "out"
    r = harness.run_experiment(cfg, out)
    assert sorted(p.name for p in out.iterdir()) == ["results.csv", "solution.txt", "state.txt",
                                                      "summary.csv"]
    assert out.joinpath("summary.csv").read_text().splitlines()[0] == ",".join(harness.SUMMARY_COLUMNS)
    assert out.joinpath("results.csv").read_text().splitlines()[0] == ",".join(harness.RESULT_COLUMNS)
    (row,) = _read_csv(out / "summary.csv")
    assert float(row["eta"]) == r.eta
    assert float(row["total_power"]) == r.total_power
    assert int(row["violations"]) == 0
    rows = _read_csv(out / "results.csv")
    assert len(rows) == len(r.scenario.flows)
    assert sum(int(x["served"]) for x in rows) == int(row["served"])
    assert harness.validate_file(out / "solution.txt").ok


def test_reruns_are_byte_identical(cfg, tmp_path):
    harness.run_experiment(cfg, tmp_path / "a")
    harness.run_experiment(cfg, tmp_path / "b")
    for name in ("results.csv", "summary.csv", "state.txt", "solution.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solution_file_replays_to_same_state(cfg, tmp_path):
    r = harness.run_experiment(cfg, tmp_path)
    topo = load_topology(tmp_path / "solution.txt")
    assert topo.graph == r.scenario.graph
    assert topo.flows == r.scenario.flows
    assert topo.assignments == r.solve.assignments


def test_structure_run_and_oracle():
    r = harness.run_spec(structure_preset(2, seed=0, level=1))
    assert r.report.ok
    cmp = harness.compare_scenario(r.scenario, 1, r.scenario_id)
    assert cmp.status in ("ok", "mva_rejected", "oracle_infeasible", "both_rejected")
    if cmp.status == "ok":
        assert cmp.ratio >= 1 - 1e-9
    text = harness.oracle_csv([cmp])
    assert text.splitlines()[0] == ",".join(harness.ORACLE_COLUMNS)


def test_sweep_serial_and_parallel_agree(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "1")
    serial, v1 = harness.sweep(cfg, "psi", ["1", "2"], tmp_path / "s")
    monkeypatch.setenv(harness.WORKERS_ENV, "2")
    parallel, v2 = harness.sweep(cfg, "psi", ["1", "2"], tmp_path / "p")
    assert serial == parallel and v1 == v2 == 0
    assert (tmp_path / "s" / "sweep.csv").read_text() == serial
    rows = list(csv.DictReader(io.StringIO(serial)))
    assert [r["psi"] for r in rows] == ["1", "2"]


def test_worker_count_errors(monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "many")
    with pytest.raises(harness.ConfigParseError):
        harness.worker_count()


def test_cli_run_ok(cfg, tmp_path, capsys):
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o"), "--psi", "1"]) == 0
    assert "small-s1-psi1" in capsys.readouterr().out


def test_cli_run_with_oracle(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("seed = 0\nstructure = 2\nlevel = 1\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o"), "--oracle"]) == 0
    assert (tmp_path / "o" / "oracle.csv").exists()


def test_cli_oracle_refuses_large_instance(cfg, tmp_path):
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o"), "--oracle"]) == 1


def test_cli_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("size = small\n")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "seed" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 1


def test_cli_validate_detects_tampering(cfg, tmp_path, capsys):
    harness.run_experiment(cfg, tmp_path)
    sol = tmp_path / "solution.txt"
    assert cli.main(["validate", str(sol)]) == 0
    lines = sol.read_text().splitlines()
    # shrink every link so that the stored routes overload them
    tampered = []
    for line in lines:
        parts = line.split()
        if parts and parts[0] == "link":
            parts[4] = "1"
        tampered.append(" ".join(parts))
    bad = tmp_path / "tampered.txt"
    bad.write_text("\n".join(tampered) + "\n")
    capsys.readouterr()
    assert cli.main(["validate", str(bad)]) == 2
    assert "C11" in capsys.readouterr().out


def test_cli_validate_stage_example_without_assignments():
    assert cli.main(["validate", str(DATA / "stage_example.topo")]) == 0


def test_cli_sweep(cfg, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "1")
    assert cli.main(["sweep", str(cfg), "--param", "rate_mean_mbps=100,300",
                     "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == ",".join(harness.SWEEP_COLUMNS)
    assert cli.main(["sweep", str(cfg), "--param", "nonsense=1"]) == 1
    assert cli.main(["sweep", str(cfg), "--param", "psi"]) == 1
