import json

import pytest

from covbal import cli
from golden_cases import CLI_ERRORS, CLI_SUCCESS, GOLDEN, run_cli, strip_iterations


@pytest.mark.parametrize("name", sorted(CLI_SUCCESS))
def test_documented_invocation_matches_golden(name):
    code, out, err = run_cli(CLI_SUCCESS[name])
    assert code == 0, err
    assert strip_iterations(out) == (GOLDEN / f"cli_{name}.json").read_text()


@pytest.mark.parametrize("name", sorted(CLI_ERRORS))
def test_documented_error_invocation(name):
    argv, expected = CLI_ERRORS[name]
    code, out, err = run_cli(argv)
    assert code == expected
    assert out == ""
    assert "covbal:" in err


def test_missing_instrument_message():
    _, _, err = run_cli(CLI_ERRORS["late_without_instrument"][0])
    assert "requires an instrument" in err


def test_separation_names_moment():
    _, _, err = run_cli(CLI_ERRORS["separated_mle"][0])
    assert "separat" in err


def test_d4_values():
    code, out, _ = run_cli(CLI_SUCCESS["d4_att_cbps"])
    rep = json.loads(out)
    assert code == 0 and rep["ps_method"] == "cbps_att"
    assert all(abs(e["value"] - 1.5) <= 1e-10 for e in rep["estimates"].values())
    assert rep["audit"]["passed"] is True


def test_json_output_round_trips():
    from covbal.io import to_json

    _, out, _ = run_cli(CLI_SUCCESS["s2_late_ipt"])
    assert to_json(json.loads(out)) == out


def test_top_level_keys():
    _, out, _ = run_cli(CLI_SUCCESS["d4_ate_ipt"])
    rep = json.loads(out)
    assert set(rep) == {
        "audit", "balance", "estimand", "estimates", "n", "n_treated", "ps_method", "solver"
    }
    assert set(rep["solver"]) == {"iterations", "moment_residual_norms", "tol"}


def test_single_estimator_has_no_audit():
    argv = CLI_SUCCESS["d4_ate_ipt"][:-1] + ["ipw"]
    code, out, _ = run_cli(argv)
    rep = json.loads(out)
    assert code == 0 and rep["audit"] is None and list(rep["estimates"]) == ["ipw"]


def test_table_format():
    code, out, _ = run_cli(CLI_SUCCESS["d4_ate_ipt"] + ["--format", "table"])
    assert code == 0
    assert "equivalence PASS" in out and "ipwra" in out


def test_audit_subcommand():
    argv = ["audit"] + CLI_SUCCESS["s2_late_ipt"][1:-2]
    code, out, _ = run_cli(argv)
    rep = json.loads(out)
    assert code == 0 and rep["passed"] is True and rep["estimand"] == "late"


def test_ipt_with_att_is_input_error():
    argv = list(CLI_SUCCESS["d4_att_cbps"])
    argv[argv.index("cbps")] = "ipt"
    assert run_cli(argv)[0] == 1


def test_usage_error_exits_one():
    assert run_cli(["estimate", "--input", "d4.csv", "--outcome", "y"])[0] == 1


def test_missing_file_exits_one():
    code, _, err = run_cli(["estimate", "--input", "nope.csv", "--outcome", "y",
                            "--treatment", "w", "--covariates", "x"])
    assert code == 1 and "cannot open" in err


def test_infeasible_balance_exits_two():
    argv = list(CLI_ERRORS["separated_mle"][0])
    argv[argv.index("mle")] = "ipt"
    assert run_cli(argv)[0] == 2


def test_simulate_reproduces_shipped_fixture(tmp_path):
    from golden_cases import FIXTURES

    out = tmp_path / "s2.csv"
    assert cli.main(["simulate", "--fixture", "s2", "--output", str(out)]) == 0
    assert out.read_text() == (FIXTURES / "s2.csv").read_text()
    out = tmp_path / "fam.csv"
    assert cli.main(["simulate", "--family-seed", "3", "--instrumented", "--output", str(out)]) == 0
    assert out.read_text().startswith("y,w,z,")
