import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.errors import DomainError, UnknownGroupError, UnsupportedOperation
from carnot_heat.experiments import (
    Check, ExperimentConfig, SuiteResult, config_from_dict, counterexample_closed_form,
    half_modulus_closed_form, load_config, run_counterexample, run_mollifier_commutation, run_suite,
)
from carnot_heat.experiments.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from carnot_heat.experiments.report import jsonable, write_bundle
from carnot_heat.experiments.studies import loglog_fit, variation
from carnot_heat.experiments.suites import params
from carnot_heat.group_core import get_group
from carnot_heat.solver import constant_path, random_coefficient_path

# Config ------------------------------------------------------------------------------------


def test_load_toml_and_json_agree(tmp_path):
    (tmp_path / "c.toml").write_text(
        'experiment_id = "x"\nseed = 3\nprofile = "quick"\nsuites = ["group"]\n'
        '[energy]\ntrials = 4\n')
    (tmp_path / "c.json").write_text(json.dumps(
        {"experiment_id": "x", "seed": 3, "profile": "quick", "suites": ["group"], "energy": {"trials": 4}}))
    a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
    assert a == b
    assert a.study("energy") == {"trials": 4}
    assert a.hash() == b.hash()


@pytest.mark.parametrize("bad", [
    {"bogus": 1},
    {"profile": "slow"},
    {"suites": ["nope"]},
    {"lattice_sizes": [16]},
    {"dt_ladder": [0.1]},
    {"nu": 1.5},
    {"workers": 0},
])
def test_invalid_config(bad):
    with pytest.raises(DomainError):
        config_from_dict(bad)


def test_unknown_group_in_config():
    with pytest.raises(UnknownGroupError):
        config_from_dict({"group": "sl2"})


def test_bad_extension(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 1")
    with pytest.raises(DomainError):
        load_config(p)


def test_hash_ignores_output_location():
    a = ExperimentConfig(out_dir="a", workers=1)
    b = ExperimentConfig(out_dir="b", workers=4)
    assert a.hash() == b.hash()
    assert a.hash() != ExperimentConfig(seed=1).hash()


def test_selected_suites_order():
    assert ExperimentConfig(suites=["holder", "group"]).selected_suites == ["group", "holder"]
    assert len(ExperimentConfig().selected_suites) == 6


def test_params_merge_order():
    cfg = ExperimentConfig(profile="quick", nu=0.5, T=0.1, studies={"energy": {"trials": 7}})
    p = params(cfg, "energy")
    assert p["trials"] == 7 and p["nu"] == 0.5 and p["T"] == 0.1
    assert params(ExperimentConfig(profile="quick"), "energy")["trials"] == 2


# Checks and reporting ------------------------------------------------------------------------


def test_check_grading():
    assert Check("s", "a", 1.0, "<=", 1.0).passed
    assert not Check("s", "a", 1.1, "<=", 1.0).passed
    assert Check("s", "a", 2, "==", 2).passed
    assert not Check("s", "a", math.nan, "<=", 1.0).passed
    assert not Check("s", "a", math.nan, ">=", 1.0).passed
    assert Check("s", "a", 0.5, ">=", 0.45).line() == "PASS s.a: 0.5 >= 0.45"


def test_suite_result_passes_only_if_all_checks_pass():
    ok = Check("s", "a", 0.0, "<=", 1.0)
    bad = Check("s", "b", 2.0, "<=", 1.0)
    assert SuiteResult("s", [ok], [], {}).passed
    assert not SuiteResult("s", [ok, bad], [], {}).passed


def test_jsonable():
    out = jsonable({(1, 2): np.float64(1.5), "a": np.arange(2), "b": math.inf, "c": np.bool_(True),
                    "d": (np.int64(3),)})
    assert out == {"1,2": 1.5, "a": [0, 1], "b": "inf", "c": True, "d": [3]}
    json.dumps(out)


def test_variation():
    assert variation([2.0, 2.0]) == 0.0
    assert variation([1.0, 1.5]) == pytest.approx(0.5)
    assert variation([0.0, 0.0]) == 0.0
    assert variation([0.0, 1.0]) == math.inf


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_loglog_fit_recovers_power(p, c):
    x = np.geomspace(0.01, 1, 8)
    slope, r2 = loglog_fit(x, c * x ** p)
    assert slope == pytest.approx(p, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-9) or p == pytest.approx(0.0, abs=1e-6)


def test_write_bundle_files(tmp_path):
    cfg = ExperimentConfig(profile="quick", suites=["group"], out_dir=str(tmp_path))
    res = run_suite("group", cfg)
    write_bundle(cfg, [res])
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["group.csv", "report.json", "summary.csv"]
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and rep["config_hash"] == cfg.hash() and rep["n_checks"] == len(res.checks)
    assert rep["surrogates"]["domain"].startswith("periodic box")
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(res.checks)
    assert set(rows[0]) == {"suite", "check", "value", "op", "threshold", "passed"}


# CLI ------------------------------------------------------------------------------------------


def test_cli_verify_quick(tmp_path, capsys):
    rc = main(["verify", "--suite", "group", "--profile", "quick", "--out-dir", str(tmp_path)])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS group.heis.associativity" in out and "ALL PASS" in out
    assert (tmp_path / "report.json").exists()


def test_cli_run_config_with_group(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suites": ["group"], "profile": "quick"}))
    rc = main(["run", "--config", str(cfg), "--group", "r2", "--seed", "4", "--out-dir", str(tmp_path / "o")])
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["seed"] == 4 and rep["config"]["group"] == "r2"
    names = [c["name"] for c in rep["suites"]["group"]["checks"]]
    assert names and all(n.startswith("r2.") for n in names)


def test_cli_unknown_group(tmp_path, capsys):
    rc = main(["verify", "--suite", "group", "--group", "foo", "--out-dir", str(tmp_path)])
    assert rc == EXIT_USAGE
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "unknown_group" and err["available"] == ["heis", "r1", "r2"]
    assert not (tmp_path / "report.json").exists()


def test_cli_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.toml")]) == EXIT_USAGE
    assert json.loads(capsys.readouterr().err)["error"] == "config_not_found"


def test_cli_invalid_config(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"dt_ladder": [0.1]}))
    assert main(["run", "--config", str(p)]) == EXIT_USAGE
    assert json.loads(capsys.readouterr().err)["error"] == "invalid_config"


def test_cli_failure_exit_code(tmp_path, monkeypatch):
    from carnot_heat.experiments import cli

    def failing(cfg):
        return EXIT_FAIL, []

    monkeypatch.setattr(cli, "run_all", failing)
    assert main(["verify", "--suite", "group", "--out-dir", str(tmp_path)]) == EXIT_FAIL


def test_cli_rejects_unknown_suite():
    with pytest.raises(SystemExit) as e:
        main(["verify", "--suite", "nope"])
    assert e.value.code == 2


# Studies ---------------------------------------------------------------------------------------


def test_counterexample_preconditions():
    with pytest.raises(DomainError):
        run_counterexample(0.5, M=16)
    with pytest.raises(UnsupportedOperation):
        run_counterexample(0.75, random_coefficient_path(2, 0.5, 2, 0, T=0.05), M=16)


def test_counterexample_closed_form_solves_the_equation():
    # d_t U + a U = -F pointwise for the continuous closed form (sin'' = -sin)
    path = constant_path(2.0, 1.0)
    U, theta = counterexample_closed_form(0.75, path)
    x = np.array([[0.7]])
    t, dt = 0.3, 1e-6
    dU = (U(t + dt, x) - U(t - dt, x)) / (2 * dt)
    assert dU == pytest.approx(-2.0 * U(t, x) - theta(t) * np.sin(0.7), rel=1e-7)


def test_counterexample_quick_rung():
    r = run_counterexample(0.75, T=0.05, M=128, n=32)
    assert abs(r.exponent - 0.75) <= 0.03
    assert r.extra["error_l2"] < 1e-2


def test_half_modulus_closed_form_is_attained_at_endpoints():
    T, M = 0.05, 64
    val = half_modulus_closed_form(0.55, T, M)
    assert val == pytest.approx(T ** 0.55 * math.exp(-T) / math.sqrt(T), rel=1e-12)
    assert half_modulus_closed_form(0.5, T, M) > 0


@pytest.mark.parametrize("group,ladder", [("r1", [64, 128]), ("r2", [16, 32])])
def test_abelian_mollifier_commutes_exactly(group, ladder):
    # periodic discrete convolution commutes with constant-coefficient stencils
    r = run_mollifier_commutation(get_group(group), ladder, [0.5, 0.6], ref_order=2, T=0.05, M=2)
    assert max(row["residual"] for row in r["rows"]) < 1e-11
