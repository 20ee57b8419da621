import json

import pytest

from crnbif.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_text(capsys, nets_dir):
    code, out, _ = run(capsys, "parse", str(nets_dir / "r0.crn"))
    assert code == 0
    assert "rank 1" in out
    assert "X2 -> X1 @ k" in out


def test_parse_json(capsys, nets_dir):
    code, out, _ = run(capsys, "parse", str(nets_dir / "r0.crn"), "--format", "json")
    d = json.loads(out)
    assert code == 0
    assert d["rank"] == 1
    assert d["conservation_basis"] == [["1", "1"]]


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "parse", str(tmp_path / "none.crn"))
    assert code == 2
    assert "cannot read" in err


def test_parse_error_location(capsys, tmp_path):
    p = tmp_path / "bad.crn"
    p.write_text("X -> Y @ k\nX => Y @ k\n")
    code, _, err = run(capsys, "parse", str(p))
    assert code == 2
    assert "line 2" in err


def test_analyze_fold(capsys, nets_dir):
    code, out, _ = run(capsys, "analyze", str(nets_dir / "r0.crn"), "--kind", "fold", "--free", "k")
    d = json.loads(out)
    assert code == 0
    assert abs(d["theta"][0]) <= 1e-10 and abs(d["kappa"]["k"] - 1) <= 1e-10
    assert d["pass"] and d["quadratic"] < 0 and d["f_kappa"][0] < 0


def test_analyze_hopf(capsys, nets_dir):
    code, out, _ = run(capsys, "analyze", str(nets_dir / "brusselator.crn"), "--kind", "hopf", "--free", "k3")
    d = json.loads(out)
    assert code == 0 and d["l1"] < 0


def test_analyze_degenerate_hopf(capsys, nets_dir):
    code, out, _ = run(capsys, "analyze", str(nets_dir / "rc0.crn"), "--kind", "hopf", "--free", "k1")
    d = json.loads(out)
    assert code == 0
    assert abs(d["kappa"]["k1"] - 2.0) <= 1e-8 and abs(d["l1"]) <= 1e-8


def test_analyze_no_bracket(capsys, nets_dir):
    code, _, err = run(capsys, "analyze", str(nets_dir / "r0.crn"), "--kind", "fold", "--free", "k",
                       "--bounds", "2", "5")
    assert code == 3
    assert err


def test_analyze_unknown_parameter(capsys, nets_dir):
    code, _, err = run(capsys, "analyze", str(nets_dir / "r0.crn"), "--free", "q")
    assert code == 2


def test_enlarge_text(capsys, nets_dir):
    code, out, _ = run(capsys, "enlarge", str(nets_dir / "r0.crn"), "--step", "E6: split r2 with Y1 + Y2")
    assert code == 0
    assert "Y1 + Y2 -> X1 @ eps^-1" in out


def test_enlarge_invalid(capsys, nets_dir):
    code, _, err = run(capsys, "enlarge", str(nets_dir / "r0.crn"), "--step", "E1: 0 -> X1")
    assert code == 4
    assert "reaction vector not in stoichiometric subspace" in err
    assert err.count("step 1") == 1


def test_inherit_e1(capsys, nets_dir, tmp_path):
    csv = tmp_path / "r1.csv"
    code, out, _ = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "enlarge E1: X1 + X2 -> 2 X2",
                       "--kind", "fold", "--free", "k", "--csv", str(csv))
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "PASS"
    assert d["fit"]["kappa_slope"] == pytest.approx(1.0, abs=0.05)
    assert csv.read_text().startswith("eps,kappa_dev")


def test_inherit_e6_records_transverse_eigenvalues(capsys, nets_dir):
    code, out, _ = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "E6: split r2 with Y1 + Y2",
                       "--kind", "fold", "--free", "k")
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "PASS"
    assert all(p["min_extra_real"] < 0 for p in d["points"])


def test_inherit_invalid_enlargement(capsys, nets_dir):
    code, _, err = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "E1: 0 -> X1", "--free", "k")
    assert code == 4
    assert "reaction vector not in stoichiometric subspace" in err


def test_inherit_from_stored_base(capsys, nets_dir, tmp_path):
    code, out, _ = run(capsys, "analyze", str(nets_dir / "r0.crn"), "--kind", "fold", "--free", "k")
    base = tmp_path / "base.json"
    base.write_text(out)
    code, out, _ = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "E2", "--base-json", str(base),
                       "--points", "6")
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "PASS" and len(d["grid"]) == 6


def test_inherit_json_round_trip_verdict(capsys, nets_dir):
    from crnbif.inherit import InheritanceReport

    _, out, _ = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "E4: Y at r2[1->0]", "--free", "k")
    assert InheritanceReport.from_json(out).verdict == json.loads(out)["verdict"] == "PASS"


def test_flag_validation(capsys, nets_dir):
    code, _, _ = run(capsys, "inherit", str(nets_dir / "r0.crn"), "--step", "E2", "--eps-min", "0.5")
    assert code == 2
    code, _, _ = run(capsys, "gallery", "--csv")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["analyze", str(nets_dir / "r0.crn"), "--kind", "saddle"])
    assert info.value.code == 2


def test_gallery_single_case_with_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "gallery", "--only", "r0-e2", "--out", str(tmp_path), "--csv")
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "r0-e2.json" in names and "r0-e2.csv" in names
    assert "r0-e2" in out


def test_gallery_unknown_case(capsys):
    code, _, err = run(capsys, "gallery", "--only", "r9-e9")
    assert code == 2


def test_gallery_partial_failure_exit_code(capsys, monkeypatch):
    import crnbif.gallery as g

    real = g.run_case

    def broken(case, cfg):
        rep = real(case, cfg)
        if rep.case_id == "r0-e3":
            rep.points = rep.points[:2]
        return rep

    monkeypatch.setattr(g, "run_case", broken)
    code, out, _ = run(capsys, "gallery", "--only", "r0-e2", "r0-e3")
    assert code == 1
    assert "r0-e3" in out
