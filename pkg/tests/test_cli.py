import csv
import io
import json

import pytest

from lglab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_nil3(capsys):
    code, out, _ = run(capsys, "classify", "--matrix", "0,1,0,0")
    assert code == 0
    assert "label: Nil3" in out and "trace class: Unimodular" in out and "admits open book: yes" in out


def test_classify_product_point(capsys):
    code, out, _ = run(capsys, "classify", "--Db", "0,0")
    assert code == 0
    d = json.loads(out[out.index("{"):])
    assert d["kind"] == "NonUnimodular" and d["params"]["a"] == 1.0 and d["admitsOpenBook"]


def test_classify_e2tilde(capsys):
    code, out, _ = run(capsys, "classify", "--matrix", "0,-1,1,0")
    assert code == 0
    assert "E2tilde" in out and "admits open book: no" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["classify", "--matrix", "0,1,0"],
        ["classify", "--matrix", "0,1,0,zero"],
        ["classify", "--matrix", "0,1,0,0", "--group", "nil3"],
        ["classify"],
        ["classify", "--Db", "2,0.5"],
        ["classify", "--group", "torus"],
        ["moduli", "--steps", "1"],
        ["verify", "--group", "nil3", "--surface", "cube:1"],
        ["verify", "--group", "nil3", "--surface", "obj:/nonexistent/file.obj"],
    ],
)
def test_parse_failures_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_PARSE
    assert "lglab: error:" in err


def test_unclassified_exit_3(capsys, monkeypatch):
    from lglab.errors import UnclassifiedUnimodularError

    def boom(_):
        raise UnclassifiedUnimodularError("no match", {"det": 1.0})

    monkeypatch.setattr(cli, "classify", boom)
    code, _, err = run(capsys, "classify", "--matrix", "0,1,0,0")
    assert code == cli.EXIT_UNCLASSIFIED and "unclassified" in err


def moduli_table(capsys, *extra):
    code, out, _ = run(capsys, "moduli", *extra)
    assert code == 0
    return list(csv.DictReader(io.StringIO(out)))


def test_moduli_rows(capsys):
    rows = moduli_table(capsys, "--Dmin", "0", "--Dmax", "2", "--bmax", "1", "--steps", "3")
    by_key = {(float(r["D"]), float(r["b"])): r for r in rows}
    assert len(rows) == 9
    assert by_key[(2.0, 1.0)]["valid"] == "true" and float(by_key[(2.0, 1.0)]["a"]) == 0.0
    assert by_key[(2.0, 0.5)]["valid"] == "false" and by_key[(2.0, 0.5)]["a"] == ""
    assert by_key[(1.0, 0.0)]["valid"] == "true" and float(by_key[(1.0, 0.0)]["a"]) == 0.0


def test_moduli_boundary_is_sqrt_D_minus_1(capsys):
    rows = moduli_table(capsys, "--Dmin", "1", "--Dmax", "5", "--bmax", "3", "--steps", "41")
    for r in rows:
        D, b = float(r["D"]), float(r["b"])
        if D > 1 and abs(b - (D - 1) ** 0.5) > 1e-9:
            assert (r["valid"] == "true") == (b > (D - 1) ** 0.5)


def test_moduli_is_reproducible(capsys):
    assert run(capsys, "moduli", "--steps", "7") == run(capsys, "moduli", "--steps", "7")


def test_make_surface_round(capsys, tmp_path):
    path = tmp_path / "round.obj"
    code, out, _ = run(capsys, "make-surface", "round", "--r", "0.2", "--level", "4", "--out", str(path))
    assert code == 0
    assert "F=5120" in out and "chi=2" in out
    assert sum(1 for line in path.read_text().splitlines() if line.startswith("f ")) == 5120


def test_make_surface_control_to_stdout(capsys):
    code, out, err = run(capsys, "make-surface", "control", "--level", "3")
    assert code == 0
    assert "chi=2" in err
    assert out.startswith("v ")


def test_make_surface_unwritable_exit_4(capsys, tmp_path):
    code, _, err = run(capsys, "make-surface", "round", "--level", "1", "--out", str(tmp_path / "missing" / "x.obj"))
    assert code == cli.EXIT_IO and "cannot write" in err


def verify_json(capsys, *argv):
    code, out, _ = run(capsys, "verify", *argv)
    return code, json.loads(out)


def test_verify_nil3_round(capsys):
    code, rep = verify_json(capsys, "--group", "nil3", "--surface", "round:0.2:4")
    assert code == 0 and rep["verdict"] == "Embedded"


def test_verify_e2tilde_skips_open_book(capsys):
    code, rep = verify_json(capsys, "--group", "e2tilde:1", "--surface", "round:0.2:4")
    assert code == 0
    assert rep["skipped"] and rep["morse"] is None
    assert "gauss" in rep and rep["selfIntersections"] == []


def test_verify_sol3_control(capsys):
    code, rep = verify_json(capsys, "--group", "sol3:1", "--surface", "control:3")
    assert code == 0
    assert rep["verdict"] == "NotEmbedded" and rep["gauss"]["diffeo"] is False


def test_verify_writes_file_and_summary(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "--group", "h3", "--surface", "round:0.2:2", "--out", str(path))
    assert code == 0
    assert "verdict Embedded" in out
    assert json.loads(path.read_text())["verdict"] == "Embedded"


def test_verify_obj_input_matches_generator(capsys, tmp_path):
    path = tmp_path / "s.obj"
    run(capsys, "make-surface", "round", "--r", "0.2", "--level", "2", "--out", str(path))
    a = run(capsys, "verify", "--group", "nil3", "--surface", f"obj:{path}", "--fiber-grid", "16", "--z-samples", "4")
    b = run(capsys, "verify", "--group", "nil3", "--surface", "round:0.2:2", "--fiber-grid", "16", "--z-samples", "4")
    assert a == b


def test_seed_env_override(capsys, monkeypatch):
    monkeypatch.setenv("LGLAB_SEED", "42")
    _, rep = verify_json(capsys, "--group", "r3", "--surface", "round:0.2:1", "--seed", "3", "--fiber-grid", "8", "--z-samples", "2")
    assert rep["seed"] == 42
    monkeypatch.setenv("LGLAB_SEED", "x")
    code, _, _ = run(capsys, "verify", "--group", "r3", "--surface", "round:0.2:1")
    assert code == cli.EXIT_PARSE


def test_exit_codes_follow_report():
    from lglab.verify import VerificationReport

    def report(verdict, ok):
        return VerificationReport({}, {}, [], verdict, 0, {}, consistency={"ok": ok})

    assert cli.exit_code(report("Embedded", True)) == 0
    assert cli.exit_code(report("Embedded", False)) == 1
    assert cli.exit_code(report("Inconclusive", True)) == 5
