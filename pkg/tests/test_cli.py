"""End-to-end tests of the command-line front end."""

import json

import pytest

from gtftlab.cli import main

SIM_FLAGS = [
    "simulate", "--n", "40", "--alpha", "0.25", "--beta", "0.25", "--k", "3",
    "--g-hat", "0.25", "--steps", "2000", "--seed", "7",
]


def read_manifest(path):
    return json.loads(path.read_text())


# ------------------------------------------------------------------ simulate


def test_simulate_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(SIM_FLAGS + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,z_1,z_2,z_3,avg_generosity"
    assert len(lines) == 2 + 2000 // 40  # header, t=0, every n=40 steps
    manifest = read_manifest(tmp_path / "traj.csv.manifest.json")
    assert manifest["command"] == "simulate"
    assert manifest["config"]["record_every"] == 40
    assert manifest["seed"] == 7
    assert manifest["outputs"] == [str(out)]


def test_simulate_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(SIM_FLAGS + ["--out", str(out1)]) == 0
    assert main(SIM_FLAGS + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_different_seed_differs(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    main(SIM_FLAGS + ["--out", str(out1)])
    main(SIM_FLAGS[:-1] + ["8", "--out", str(out2)])
    assert out1.read_bytes() != out2.read_bytes()


def test_simulate_zero_steps(tmp_path):
    out = tmp_path / "traj.csv"
    flags = [f if f != "2000" else "0" for f in SIM_FLAGS]
    assert main(flags + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("0,")


def test_simulate_validation_failure_writes_nothing(tmp_path):
    out = tmp_path / "traj.csv"
    bad = [f if f != "40" else "41" for f in SIM_FLAGS]  # 0.25 * 41 not integral
    assert main(bad + ["--out", str(out)]) == 2
    assert not out.exists()


def test_simulate_explicit_init_counts(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(SIM_FLAGS + ["--init-counts", "20", "0", "0", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1] == "0,20,0,0,0.0"


# ------------------------------------------------------------------ stationary


def test_stationary_chain_mode_with_exact(tmp_path, capsys):
    code = main(["stationary", "--k", "3", "--a", "0.4", "--b", "0.2", "--m", "4", "--exact"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form_p"] == pytest.approx([1 / 7, 2 / 7, 4 / 7])
    assert payload["exact_solver"]["tv_diff"] < 1e-10
    assert payload["exact_solver"]["detailed_balance_residual"] < 1e-12
    assert payload["exact_solver"]["exact_p"] == pytest.approx([1 / 7, 2 / 7, 4 / 7])


def test_stationary_beta_mode(capsys):
    assert main(["stationary", "--beta", "0.25", "--k", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form_p"] == pytest.approx([1 / 13, 3 / 13, 9 / 13])


def test_stationary_balanced_is_uniform(capsys):
    assert main(["stationary", "--k", "4", "--a", "0.3", "--b", "0.3", "--m", "5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form_p"] == pytest.approx([0.25] * 4)


def test_stationary_cap_exceeded_degrades_gracefully(capsys):
    code = main(["stationary", "--k", "6", "--a", "0.4", "--b", "0.2", "--m", "20",
                 "--exact", "--cap", "100"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["exact_solver"] is None
    assert "exceeds cap" in payload["note"]


def test_stationary_missing_args_is_config_error(capsys):
    assert main(["stationary", "--k", "3"]) == 2


# ------------------------------------------------------------------ mixing


def test_mixing_single_instance(capsys):
    code = main(["mixing", "--k", "2", "--a", "0.25", "--b", "0.25", "--m", "8",
                 "--trials", "100", "--epsilon", "0.25", "--seed", "5", "--exact-scan"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["estimate"]["t_hat"] <= payload["bound"]
    assert payload["exact_tmix"] <= payload["estimate"]["t_hat"]
    assert payload["estimate"]["trials"] == 100


def test_mixing_sweep_sorted(capsys):
    code = main(["mixing", "--k", "3", "--a", "0.6", "--b", "0.2", "--m", "8",
                 "--trials", "50", "--seed", "5", "--sweep", "m=16,8"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert [row["m"] for row in payload["rows"]] == [8, 16]


def test_mixing_malformed_sweep_is_config_error(capsys):
    base = ["mixing", "--k", "3", "--a", "0.6", "--b", "0.2", "--m", "8",
            "--trials", "5", "--seed", "1", "--sweep"]
    for sweep in ("m8,16", "j=8,16", "m=8,x", "m="):
        assert main(base + [sweep]) == 2


def test_mixing_step_limit_exit_code(capsys):
    code = main(["mixing", "--k", "4", "--a", "0.3", "--b", "0.3", "--m", "16",
                 "--trials", "5", "--seed", "5", "--step-limit", "3"])
    assert code == 3


# ------------------------------------------------------------------ payoff / optimality


def test_payoff_command_closed_series_mc(capsys):
    code = main(["payoff", "--me", "gtft:0.2", "--opp", "alld", "--b", "3", "--c", "2",
                 "--delta", "0.9", "--mc-games", "50000", "--seed", "1"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form"] == pytest.approx(-4.6)
    assert payload["series"] == pytest.approx(-4.6, abs=1e-9)
    mc = payload["monte_carlo"]
    assert abs(mc["mean"] - (-4.6)) < 4 * mc["std_error"]


def test_payoff_rejects_bad_strategy(capsys):
    assert main(["payoff", "--me", "grudger", "--opp", "alld", "--b", "3", "--c", "2",
                 "--delta", "0.9"]) == 2


def test_optimality_low_regime_example(capsys):
    code = main(["optimality", "--b", "3", "--c", "2", "--delta", "0.9", "--g-hat", "0.25",
                 "--alpha", "0.25", "--beta", "0.05", "--n", "100"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["regime"] == "low"
    assert payload["g_star"] == 0.25
    assert payload["phi"] == pytest.approx(0.05 / 0.7)
    assert payload["low_phi_threshold"] == pytest.approx(40 / 169)


def test_optimality_with_k_reports_gap(capsys):
    code = main(["optimality", "--b", "3", "--c", "1", "--delta", "0.5", "--g-hat", "0.25",
                 "--alpha", "0.05", "--beta", "0.25", "--n", "100", "--k", "6"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["gap"] <= payload["gap_bound"]
    assert 0 <= payload["avg_stationary_generosity"] <= 0.25


# ------------------------------------------------------------------ compare


def test_compare_emits_fig_shaped_table(tmp_path):
    out = tmp_path / "compare.csv"
    code = main(["compare", "--b", "3", "--c", "2", "--delta", "0.9", "--g-hat", "0.25",
                 "--k", "6", "--m", "20", "--populations", "0.25,0.25;0.3,0.3",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == [
        "alpha", "beta", "g", "F_meanfield", "F_granular", "avg_generosity",
        "F_meanfield_at_avg",
    ]
    assert len(lines) == 1 + 2 * 6  # two populations, six grid points each
    manifest = read_manifest(tmp_path / "compare.csv.manifest.json")
    assert manifest["command"] == "compare"


# ------------------------------------------------------------------ config file


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"beta": 0.25, "k": 3}))
    assert main(["--config", str(cfg_file), "stationary"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form_p"] == pytest.approx([1 / 13, 3 / 13, 9 / 13])


def test_config_file_flag_override(tmp_path, capsys):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"beta": 0.25, "k": 3}))
    assert main(["--config", str(cfg_file), "stationary", "--k", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["closed_form_p"] == pytest.approx([0.25, 0.75])


def test_missing_config_file_is_config_error():
    assert main(["--config", "/nonexistent/path.json", "stationary"]) == 2
