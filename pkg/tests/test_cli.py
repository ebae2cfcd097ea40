import json

import pytest

from qdgadget.cli import (EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, ExperimentConfig, _commuting_pair_orbits,
                          main, parse_lambdas)
from qdgadget.groups import make_group
from qdgadget.report import Report, emit, validate_report


def test_parse_lambdas():
    assert parse_lambdas("0.02:0.10:5") == pytest.approx([0.02, 0.04, 0.06, 0.08, 0.10])
    assert parse_lambdas("0.1,0.2") == [0.1, 0.2]
    with pytest.raises(ConfigError, match="lambdas"):
        parse_lambdas("a:b")


@pytest.mark.parametrize("field,value", [("tol", 0.0), ("fit_tol", -1.0), ("mode", "magic"),
                                         ("variant", "hex"), ("jobs", 0), ("formats", ["xml"]),
                                         ("criteria", [11]), ("lambdas", [])])
def test_config_validation_names_field(field, value):
    cfg = ExperimentConfig("gadget", **{field: value})
    with pytest.raises(ConfigError) as exc:
        cfg.validate()
    assert exc.value.field == field


def test_gadget_verb(tmp_path, capsys):
    assert main(["gadget", "--group", "S3", "--out", str(tmp_path), "--format", "json,csv"]) == EXIT_OK
    rep = json.loads((tmp_path / "gadget.json").read_text())
    validate_report(rep)
    assert rep["passed"] and rep["data"]["degeneracy"] == 6
    assert rep["hashes"][0]["group"] == "S3" and rep["hashes"][0]["irrep_hash"]
    rows = (tmp_path / "gadget_spectrum.csv").read_text().splitlines()[1:]
    ev = [float(r.split(",")[1]) for r in rows]
    assert ev == sorted(ev) and len(ev) == 6 ** 4
    assert "PASS" in capsys.readouterr().out


def test_reports_are_byte_stable(tmp_path):
    for d in ("a", "b"):
        assert main(["error-scan", "--group", "Z2", "--out", str(tmp_path / d)]) == EXIT_OK
    a = json.loads((tmp_path / "a" / "error_scan.json").read_text())
    b = json.loads((tmp_path / "b" / "error_scan.json").read_text())
    a["timing"] = b["timing"] = 0
    a["config"]["out"] = b["config"]["out"] = None
    assert a == b
    assert list(a) == ["tool", "version", "command", "passed", "config", "hashes", "checks", "data", "timing"]


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"group": "Z3"}))
    assert main(["gadget", "--group", "S3", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "gadget.json").read_text())
    assert rep["config"]["group"] == "Z3" and rep["config"]["variant"] == "cyclic"
    assert rep["data"]["degeneracy"] == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["gadget", "--config", str(cfg)]) == EXIT_USAGE


def test_usage_errors(capsys):
    assert main(["gadget", "--group", "A7"]) == EXIT_USAGE
    assert "group" in capsys.readouterr().err
    assert main(["gadget", "--group", "S3", "--variant", "toric"]) == EXIT_USAGE
    assert main(["qd-ref", "--group", "Z2", "--lattice", "hexagon"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_check_failure_exit_status():
    # an impossible fit tolerance cannot be met
    assert main(["self-energy", "--group", "Z2", "--patch", "single_plaquette", "--orders", "4",
                 "--fit-tol", "1e-300"]) == EXIT_FAIL


def test_qd_ref_torus_and_sphere():
    assert main(["qd-ref", "--group", "S3", "--lattice", "four_qudit_torus"]) == EXIT_OK
    assert main(["qd-ref", "--group", "Z3", "--lattice", "two_qudit_sphere"]) == EXIT_OK


@pytest.mark.parametrize("name,n", [("Z2", 4), ("Z3", 9), ("S3", 8), ("D4", 22), ("Q8", 22)])
def test_commuting_pair_orbits(name, n):
    assert _commuting_pair_orbits(make_group(name)) == n


def test_self_energy_verb(tmp_path):
    assert main(["self-energy", "--group", "Z3", "--patch", "single_vertex", "--orders", "2,4",
                 "--out", str(tmp_path), "--format", "json,csv"]) == EXIT_OK
    rep = json.loads((tmp_path / "self_energy.json").read_text())
    assert rep["data"]["fit"]["c_A"] > 0
    assert (tmp_path / "self_energy_coefficients.csv").exists()


def test_ed_sweep_verb(tmp_path):
    args = ["ed-sweep", "--group", "Z2", "--patch", "single_plaquette", "--lambdas", "0.02:0.10:5",
            "--mode", "brute", "--out", str(tmp_path), "--format", "json,csv,plotdata"]
    assert main(args) == EXIT_OK
    dat = (tmp_path / "ed_sweep_band_width.dat").read_text().splitlines()
    assert dat[0].startswith("#") and len(dat) == 6
    rep = json.loads((tmp_path / "ed_sweep.json").read_text())
    assert abs(rep["data"]["slope"] - 4) < 0.1


def test_verify_all_subset(tmp_path, monkeypatch):
    monkeypatch.setenv("QDGADGET_THREADS", "1")
    assert main(["verify-all", "--only", "1,3,4", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "verify_all.json").read_text())
    assert set(rep["data"]["criteria"]) == {"1", "3", "4"}
    names = [c["name"] for c in rep["checks"]]
    assert len(names) == len(set(names))


def test_report_schema_rejects_bad_objects():
    r = Report("gadget", {})
    r.check("x", 1.0, "<= 2", True)
    obj = json.loads(r.dumps())
    validate_report(obj)
    with pytest.raises(ValueError, match="twice"):
        r.check("x", 1.0, "<= 2", True)
    bad = dict(obj, passed=False)
    with pytest.raises(ValueError, match="verdict"):
        validate_report(bad)
    with pytest.raises(ValueError, match="missing"):
        validate_report({"tool": "qdgadget"})


def test_emit_unwritable(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    with pytest.raises(OSError):
        emit(Report("gadget", {}), "json", target / "sub")
    with pytest.raises(ValueError, match="format"):
        emit(Report("gadget", {}), "xml", tmp_path)
