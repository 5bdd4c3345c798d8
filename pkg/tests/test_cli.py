import json
import subprocess
import sys

import jsonschema
import pytest
from referencing import Registry, Resource

from hwselftest.cli import SWEEP_HEADER, load_schema, main, parse_seeds
from hwselftest.strategy import NoiseSpec, ideal_strategy, perturb

SCHEMAS = ["strategy", "lhv_certificate", "isometry_report", "identities_report",
           "bounds_report", "selftest_report"]


def validate(obj, name):
    reg = Registry().with_resources(
        (f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in SCHEMAS)
    jsonschema.Draft202012Validator(load_schema(name), registry=reg).validate(obj)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_schemas_are_valid():
    for n in SCHEMAS:
        jsonschema.Draft202012Validator.check_schema(load_schema(n))


@pytest.mark.parametrize("d", [3, 5])
def test_identities(capsys, d):
    code, out, _ = run(capsys, "identities", "--d", str(d))
    assert code == 0
    rep = json.loads(out)
    validate(rep, "identities_report")
    assert rep["ok"] and rep["config"]["tol_identity"] == 1e-9
    assert all(v <= 1e-9 for v in rep["identities"].values())
    if d == 3:
        assert "qutrit_constraint" in rep["identities"]
    else:
        assert "folding" in rep["identities"]


@pytest.mark.parametrize("d", ["4", "9", "1", "2"])
def test_bad_dimension(capsys, d):
    code, _, err = run(capsys, "identities", "--d", d)
    assert code == 1
    assert "d must be an odd prime" in err


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as e:
        main(["identities"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate", "--d", "5"])
    assert e.value.code == 1


def test_bad_tolerance_and_nu(capsys, tmp_path):
    assert run(capsys, "identities", "--d", "5", "--tol-identity", "0")[0] == 1
    p = tmp_path / "nu.json"
    p.write_text(json.dumps({"coefficients": [0, 1, 2]}))
    code, _, err = run(capsys, "identities", "--d", "5", "--nu", str(p))
    assert code == 1 and "degree" in err
    assert run(capsys, "identities", "--d", "5", "--nu", str(tmp_path / "missing.json"))[0] == 1


def test_custom_cubic(capsys, tmp_path):
    p = tmp_path / "nu.json"
    p.write_text(json.dumps({"coefficients": [0, 0, 0, 1]}))
    code, out, _ = run(capsys, "identities", "--d", "7", "--nu", str(p))
    assert code == 0
    assert json.loads(out)["config"]["nu"] == "cubic:0,0,0,1"


def test_tolerance_failure_exit_2(capsys):
    code, out, _ = run(capsys, "identities", "--d", "5", "--tol-identity", "1e-30")
    assert code == 2
    assert not json.loads(out)["ok"]


def test_bounds_qutrit(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "3")
    assert code == 0
    rep = json.loads(out)
    validate(rep, "bounds_report")
    cert = rep["certificates"][0]
    assert cert["method"] == "exhaustive" and cert["gap"] >= 0.36
    assert abs(rep["max_eigenvalue"] - 6) < 1e-7


def test_bounds_d5(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "5", "--method", "best_response_exhaustive")
    assert code == 0 and json.loads(out)["certificates"][0]["gap"] > 0


def test_bounds_sampled_d11(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "11", "--seeds", "0-2", "--starts", "4")
    rep = json.loads(out)
    assert code == 0
    assert [c["seed"] for c in rep["certificates"]] == [0, 1, 2]
    assert all(not c["exhaustive"] and "non-exhaustive" in c["label"] for c in rep["certificates"])


def test_bounds_csv(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "3", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "d,method,best_value,quantum_value,gap,assignments_examined,seed"
    assert lines[1].startswith("3,exhaustive,5.63815572471545")


def test_selftest_ideal(capsys):
    code, out, _ = run(capsys, "selftest", "--d", "5", "--magnitudes", "0")
    rep = json.loads(out)
    validate(rep, "selftest_report")
    assert code == 0
    assert rep["rows"][0]["isometry"]["state_distance"] <= 1e-9


def test_selftest_perturbed(capsys):
    code, out, _ = run(capsys, "selftest", "--d", "5", "--magnitudes", "1e-3", "--seeds", "0-19")
    rep = json.loads(out)
    assert code == 0 and len(rep["rows"]) == 20
    assert all(r["isometry"]["bound_satisfied"] for r in rep["rows"])


def test_selftest_qutrit_out_of_regime(capsys):
    code, out, _ = run(capsys, "selftest", "--d", "3", "--magnitudes", "1e-2", "--seeds", "0-1")
    rep = json.loads(out)
    validate(rep, "selftest_report")
    assert code == 0
    assert all(r["out_of_regime"] for r in rep["rows"])
    assert all(r["qutrit"] is not None for r in rep["rows"])


def test_selftest_strategy_file(capsys, tmp_path):
    p = tmp_path / "s.json"
    perturb(ideal_strategy(5), NoiseSpec("both", 1e-3, 1)).save(p)
    validate(json.loads(p.read_text()), "strategy")
    code, out, _ = run(capsys, "selftest", "--d", "5", "--strategy", str(p))
    assert code == 0
    assert json.loads(out)["rows"][0]["epsilon"] > 0
    p.write_text('{"d": 5}')
    assert run(capsys, "selftest", "--d", "5", "--strategy", str(p))[0] == 1
    perturb(ideal_strategy(7), NoiseSpec("both", 1e-3, 1)).save(p)
    assert run(capsys, "selftest", "--d", "5", "--strategy", str(p))[0] == 1


def test_selftest_csv(capsys):
    code, out, _ = run(capsys, "selftest", "--d", "5", "--magnitudes", "1e-3", "--format", "csv")
    assert code == 0 and out.splitlines()[0].startswith("d,seed,magnitude,epsilon")


def test_sweep(capsys, tmp_path):
    out_path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--d", "5", "--seeds", "0-2", "--magnitudes", "1e-4,1e-3",
                     "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 7
    for line in lines[1:]:
        ratio = float(line.split(",")[6])
        assert 0 <= ratio <= 1


def test_sweep_unwritable(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--d", "5", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 1 and "cannot write" in err


def test_sweep_floats_round_trip(capsys):
    _, out, _ = run(capsys, "sweep", "--d", "5", "--magnitudes", "1e-3")
    row = out.splitlines()[1].split(",")
    from hwselftest.cli import make_config, build_parser, sweep_table
    cfg = make_config(build_parser().parse_args(["sweep", "--d", "5", "--magnitudes", "1e-3"]))
    assert float(row[3]) == sweep_table(cfg)[0][3]


def test_parse_seeds():
    assert parse_seeds("0-3") == [0, 1, 2, 3]
    assert parse_seeds("5,1,2") == [5, 1, 2]


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "hwselftest", "identities", "--d", "4"],
                         capture_output=True, text=True)
    assert res.returncode == 1
