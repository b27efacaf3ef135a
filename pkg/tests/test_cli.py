import json

import pytest

from sarasim.cli import main


def run_cli(args, monkeypatch, tmp_path, env=None):
    monkeypatch.setenv("SARASIM_OUT", str(tmp_path))
    for key, val in (env or {}).items():
        monkeypatch.setenv(key, val)
    return main(args)


def test_analytic_writes_curve(monkeypatch, tmp_path, capsys):
    rc = run_cli(["analytic", "--lambda", "0.02", "--beta-db", "3", "--steps", "11"],
                 monkeypatch, tmp_path)
    assert rc == 0
    out = capsys.readouterr().out
    assert "0.28692" in out
    lines = (tmp_path / "analytic.csv").read_text().strip().splitlines()
    assert lines[0] == "phi,success_probability,ase"
    assert len(lines) == 12


def test_unknown_config_key_rejected(monkeypatch, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda = 0.02\nwarp_speed = 9\n")
    rc = run_cli(["simulate", "--config", str(cfg)], monkeypatch, tmp_path)
    assert rc == 2
    assert "warp_speed" in capsys.readouterr().err


def test_bad_alpha_rejected_with_range(monkeypatch, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 2\nslots = 10\ndrops = 1\n")
    rc = run_cli(["simulate", "--config", str(cfg)], monkeypatch, tmp_path)
    assert rc == 2
    assert "exceed 2" in capsys.readouterr().err


def test_negative_beta_db_accepted(monkeypatch, tmp_path):
    rc = run_cli(["simulate", "--scheme", "fixed_aloha", "--phi", "0.5",
                  "--beta-db", "-1", "--slots", "50", "--drops", "1",
                  "--warmup", "0", "--n-pairs", "2", "--seed", "3"],
                 monkeypatch, tmp_path)
    assert rc == 0


def test_empty_config_gets_defaults(monkeypatch, tmp_path):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("# nothing but a comment\nslots = 60\ndrops = 1\nwarmup = 0\nn_pairs = 2\n")
    rc = run_cli(["simulate", "--config", str(cfg), "--seed", "2"], monkeypatch, tmp_path)
    assert rc == 0
    meta = (tmp_path / "simulate.csv.meta.cfg").read_text()
    assert "beta_db = 3.0" in meta
    assert "alpha = 4.0" in meta
    assert "scheme = sara" in meta
    assert "rt = 5.0" in meta


def test_sweep_row_count_is_grid_product(monkeypatch, tmp_path):
    rc = run_cli(["sweep", "--lambdas", "0.005,0.01", "--beta-dbs", "0,3",
                  "--schemes", "fixed_aloha,optimal_aloha", "--phi", "0.3",
                  "--slots", "40", "--drops", "1", "--warmup", "0", "--seed", "4"],
                 monkeypatch, tmp_path)
    assert rc == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2 * 2


def test_json_and_csv_encode_identical_values(monkeypatch, tmp_path):
    args = ["simulate", "--scheme", "fixed_aloha", "--phi", "0.4", "--slots", "80",
            "--drops", "2", "--warmup", "0", "--n-pairs", "3", "--seed", "6"]
    assert run_cli(args + ["--format", "csv", "--out", str(tmp_path / "a.csv")],
                   monkeypatch, tmp_path) == 0
    assert run_cli(args + ["--format", "json", "--out", str(tmp_path / "a.json")],
                   monkeypatch, tmp_path) == 0
    header, row = (tmp_path / "a.csv").read_text().strip().splitlines()
    csv_vals = dict(zip(header.split(","), row.split(",")))
    json_vals = json.loads((tmp_path / "a.json").read_text())[0]
    for key, val in json_vals.items():
        assert f"{val:.6g}" == csv_vals[key] if isinstance(val, float) else str(val) == csv_vals[key]


def test_replay_from_sidecar_reproduces_csv(monkeypatch, tmp_path):
    args = ["simulate", "--scheme", "sara", "--lambda", "0.01", "--slots", "400",
            "--drops", "2", "--warmup", "200", "--window", "50", "--seed", "11",
            "--out", str(tmp_path / "first.csv")]
    assert run_cli(args, monkeypatch, tmp_path) == 0
    sidecar = tmp_path / "first.csv.meta.cfg"
    assert run_cli(["simulate", "--config", str(sidecar),
                    "--out", str(tmp_path / "second.csv")], monkeypatch, tmp_path) == 0
    assert (tmp_path / "first.csv").read_text() == (tmp_path / "second.csv").read_text()


def test_topology_round_trip_via_cli(monkeypatch, tmp_path):
    rc = run_cli(["topology", "--lambda", "0.02", "--seed", "5",
                  "--out", str(tmp_path / "topo.csv")], monkeypatch, tmp_path)
    assert rc == 0
    rc = run_cli(["simulate", "--topology", str(tmp_path / "topo.csv"),
                  "--scheme", "fixed_aloha", "--phi", "0.3", "--slots", "50",
                  "--drops", "1", "--warmup", "0", "--seed", "2"],
                 monkeypatch, tmp_path)
    assert rc == 0


def test_oracle_subcommand(monkeypatch, tmp_path, capsys):
    rc = run_cli(["oracle", "--n-pairs", "4", "--seed", "8", "--trials", "20"],
                 monkeypatch, tmp_path)
    assert rc == 0
    assert "fixed point" in capsys.readouterr().out
    assert (tmp_path / "oracle_trajectory.csv").exists()
    report = json.loads((tmp_path / "oracle_trajectory_axioms.json").read_text())
    assert report["trials"] == 20


def test_trace_flags(monkeypatch, tmp_path):
    rc = run_cli(["simulate", "--scheme", "sara", "--n-pairs", "2", "--slots", "100",
                  "--drops", "1", "--warmup", "0", "--window", "20", "--seed", "9",
                  "--trace", "--phi-trace"], monkeypatch, tmp_path)
    assert rc == 0
    trace = (tmp_path / "simulate_trace.csv").read_text().strip().splitlines()
    assert trace[0] == "slot,pair,transmitted,success,sinr_db"
    assert len(trace) == 1 + 100 * 2
    phis = (tmp_path / "simulate_phi.csv").read_text().strip().splitlines()
    assert phis[0] == "window,pair,phi"
    assert len(phis) == 1 + 6 * 2


def test_unwritable_output_exit_code(monkeypatch, tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli(["analytic", "--out", "/dev/null/nope/out.csv"], monkeypatch, tmp_path)
    assert exc.value.code == 3


def test_validate_single_fast_criterion(monkeypatch, tmp_path, capsys):
    rc = run_cli(["validate", "--criteria", "optimum-derivation"], monkeypatch, tmp_path)
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "1/1 criteria passed" in out
