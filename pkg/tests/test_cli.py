import json
import os

from spinldp.cli import main

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def run(args):
    return main(args)


def test_pw_rate_outputs_and_reruns_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"b": 2.0, "d": 1.0, "t": 1.0, "a": 1.0,
                               "N_list": [50, 100, 200, 500]}))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run(["pw-rate", str(cfg), "--out-dir", str(out1)]) == 0
    assert run(["pw-rate", str(cfg), "--out-dir", str(out2)]) == 0
    b1 = (out1 / "pw_rate.csv").read_bytes()
    b2 = (out2 / "pw_rate.csv").read_bytes()
    assert b1 == b2
    header = b1.decode().split("\n")[0]
    assert header == "N,t,a,empirical_rate,analytic_rate,gap"


def test_mag_bvp_reports_extremal_coefficients(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m0": 0.5, "mT": 0.0, "T": 1.0, "steps": 2000}))
    out = tmp_path / "out"
    assert run(["mag-bvp", str(cfg), "--out-dir", str(out)]) == 0
    report = json.loads((out / "mag_bvp.json").read_text())
    assert abs(report["C1"] + 0.00933) <= 2e-5
    assert report["el_residual"] <= 1e-4
    lines = (out / "mag_bvp.csv").read_text().strip().split("\n")
    assert lines[0] == "t,value"
    assert len(lines) == 2002


def test_fd_lagrangian_three_routes(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["fd-lagrangian", os.path.join(CONFIGS, "fd_lagrangian.json"),
                "--out-dir", str(out)]) == 0
    report = json.loads((out / "fd_lagrangian.json").read_text())
    assert abs(report["variational"] - 0.1339746) <= 1e-6
    assert abs(report["dual"]["value"] - 0.1339746) <= 1e-6
    assert abs(report["mass_constrained_closed_form"] - 0.1438410) <= 1e-6


def test_malformed_json_exits_2_without_outputs(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{ not json")
    out = tmp_path / "nope"
    assert run(["pw-rate", str(cfg), "--out-dir", str(out)]) == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_missing_field_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"b": 2.0, "d": 1.0, "t": 1.0}))  # no a, no N_list
    assert run(["pw-rate", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    assert "a: required field" in capsys.readouterr().err


def test_invalid_range_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"b": -2.0, "d": 1.0, "t": 1.0, "a": 0.0, "N_list": [10]}))
    assert run(["pw-rate", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_missing_seed_on_stochastic_command_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "rate_function": {"kind": "bernoulli", "params": [0.5]},
        "T_grid": [0.5], "mT_grid": [0.0],
    }))
    assert run(["scan-bad", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err


def test_out_of_range_endpoint_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m0": 1.1, "mT": 0.0, "T": 1.0}))
    assert run(["mag-bvp", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_runtime_error_exits_1_with_error_name(tmp_path, capsys, monkeypatch):
    from spinldp import cli
    from spinldp.errors import NoFeasiblePath

    def boom(cfg, out_dir, workers):
        raise NoFeasiblePath("forced")

    monkeypatch.setitem(cli.COMMANDS, "pw-rate", boom)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({}))
    assert run(["pw-rate", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1
    assert "NoFeasiblePath" in capsys.readouterr().err


def test_scan_bad_cli_and_worker_invariance(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "seed": 5,
        "rate_function": {"kind": "bernoulli", "params": [0.5]},
        "T_grid": [0.2, 1.0],
        "mT_grid": [-0.3, 0.3],
        "solver": {"dt_target": 0.02, "min_steps": 60, "max_iter": 400},
    }))
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    assert run(["scan-bad", str(cfg), "--out-dir", str(out1)]) == 0
    assert run(["scan-bad", str(cfg), "--out-dir", str(out2), "--workers", "2"]) == 0
    assert (out1 / "scan_bad.csv").read_bytes() == (out2 / "scan_bad.csv").read_bytes()
    assert "0 bad cells of 4" in capsys.readouterr().out


def test_lattice_sim_cli(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "seed": 3, "dim": 1, "side": 51,
        "rates": {"kind": "constant", "dim": 1, "value": 1.0, "radius": 0},
        "times": [0.2, 0.6], "replicas": 6,
        "observables": [[[0]], [[0], [1]]],
    }))
    out = tmp_path / "out"
    assert run(["lattice-sim", str(cfg), "--out-dir", str(out)]) == 0
    lines = (out / "lattice_moments.csv").read_text().strip().split("\n")
    assert lines[0] == "t,observable,mean,se,replicas"
    assert len(lines) == 5  # 2 times x 2 observables
    snap = (out / "lattice_final.txt").read_text().strip()
    assert set(snap) <= {"+", "-"}
    assert len(snap) == 51


def test_verify_subset_cli(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 20260808, "criteria": [2, 3, 6, 8]}))
    out = tmp_path / "out"
    assert run(["verify", str(cfg), "--out-dir", str(out)]) == 0
    text = (out / "verify_summary.csv").read_text()
    assert text.count("\n") == 5  # header + 4 criteria
    assert ",1," in text  # all passed
    console = capsys.readouterr().out
    assert console.count("PASS") == 4


def test_verify_rejects_unknown_criteria(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1, "criteria": [2, 99]}))
    assert run(["verify", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
