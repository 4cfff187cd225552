import csv
import io
import json

import pytest

from spinbounds import bounds, cli


def run(capsys, *argv):
    code = cli.main(["--quiet", *argv])
    return code, capsys.readouterr().out


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_coefficients_command(capsys):
    code, out = run(capsys, "coeffs", "--kernel", "f", "--order", "6", "--format", "json")
    assert code == 0
    recs = json.loads(out)
    assert {r["order"]: r["value"] for r in recs} == {0: "1", 2: "1/3", 4: "-1/45", 6: "2/945"}
    assert recs[3]["float"] == pytest.approx(2 / 945)


def test_verify_command(capsys):
    code, out = run(capsys, "verify", "--sites", "2", "--trials", "10", "--seed", "7", "--theorems", "t1", "--orders", "2")
    assert code == 0
    recs = records(out)
    reports = [r for r in recs if r["record_type"] == "bound_report"]
    assert len(reports) == 10 and all(r["satisfied"] for r in reports)
    assert recs[-1]["record_type"] == "verify_summary" and recs[-1]["unsatisfied"] == 0


@pytest.mark.parametrize("argv", [
    ["verify", "--orders", "3"],
    ["verify", "--theorems", "t1,t2", "--orders", "2"],
    ["verify", "--theorems", "t9"],
    ["coeffs", "--order", "5"],
    ["coeffs", "--kernel", "k"],
    ["sk", "solve", "--beta", "-1"],
    ["sk", "experiment", "--sites", "40"],
    ["sk", "derivative-check", "--s", "1.0"],
    ["spectral", "--observable", "W7"],
    ["nonsense"],
    ["coeffs", "--unknown-flag"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert cli.main(["--quiet", *argv]) == 2


def test_unsatisfied_bound_exits_1(capsys, monkeypatch):
    real = bounds.theorem_bounds

    def broken(*args):
        rep = real(*args)
        return bounds.BoundReport(**{**rep.__dict__, "satisfied": False})

    monkeypatch.setattr(bounds, "theorem_bounds", broken)
    code, out = run(capsys, "verify", "--trials", "2", "--theorems", "t2", "--orders", "0")
    assert code == 1
    assert records(out)[-1]["unsatisfied"] == 2


def test_exit_code_matrix(capsys):
    assert run(capsys, "lemma6", "--kernel", "g", "--n", "4")[0] == 0
    assert run(capsys, "sk", "experiment", "--sites", "3", "--samples", "10")[0] == 0
    # the sampled derivative formula misses 1e-6; the quadrature average meets it
    assert run(capsys, "sk", "derivative-check", "--sites", "1", "--samples", "10")[0] == 1
    assert run(capsys, "sk", "derivative-check", "--sites", "1", "--quadrature-nodes", "40")[0] == 0


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"beta": 2.0, "h": 0.0}))
    _, out = run(capsys, "sk", "classical", "--config", str(cfg))
    assert records(out)[0]["beta"] == 2.0
    _, out = run(capsys, "sk", "classical", "--config", str(cfg), "--beta", "0.5")
    rec = records(out)[0]
    assert rec["beta"] == 0.5 and rec["q"] == 0.0 and rec["at_lhs"] == pytest.approx(0.25)


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"betta": 1.0}))
    assert cli.main(["--quiet", "sk", "solve", "--config", str(bad)]) == 2
    bad.write_text("{not json")
    assert cli.main(["--quiet", "sk", "solve", "--config", str(bad)]) == 2
    assert cli.main(["--quiet", "sk", "solve", "--config", str(tmp_path / "absent.json")]) == 2


def test_hamiltonian_from_config(tmp_path, capsys):
    cfg = tmp_path / "h.json"
    cfg.write_text(json.dumps({"hamiltonian": [[-1.0, "X1"], [0.5, "Z1*Z2"]], "sites": 2}))
    code, out = run(capsys, "spectral", "--config", str(cfg), "--observable", "Z1", "--beta", "1")
    atoms = records(out)
    assert code == 0
    assert sum(a["weight_re"] for a in atoms) == pytest.approx(2.0)


def test_csv_and_out_file(tmp_path, capsys):
    path = tmp_path / "r.csv"
    code, out = run(capsys, "sk", "experiment", "--sites", "2", "--samples", "5", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert rows[0]["record_type"] == "experiment_report" and rows[0]["schema_version"] == "1"


@pytest.mark.parametrize("argv", [
    ["coeffs", "--kernel", "h", "--order", "8"],
    ["lemma6", "--kernel", "h", "--n", "2", "--grid-points", "101"],
    ["spectral", "--sites", "2", "--observable", "X1*Z2"],
    ["verify", "--sites", "1", "--trials", "2"],
    ["sk", "solve", "--beta", "2", "--b1", "0.3"],
    ["sk", "classical", "--beta", "1.5", "--h", "0.2"],
    ["sk", "compare", "--beta", "1", "--b1", "0.5"],
    ["sk", "compare", "--beta", "3", "--b1", "1"],
    ["sk", "experiment", "--sites", "2", "--samples", "4"],
    ["sk", "derivative-check", "--sites", "1", "--samples", "4"],
])
def test_every_record_matches_schema(capsys, argv):
    _, out = run(capsys, *argv)
    recs = records(out)
    assert recs
    for rec in recs:
        cli.validate_record(rec)


def test_strong_field_absence_is_a_record(capsys):
    _, out = run(capsys, "sk", "compare", "--beta", "3", "--b1", "1")
    dev = [r for r in records(out) if r["record_type"] == "strong_field_deviation"][0]
    assert dev["found"] is False and dev["b0"] is None


def test_validate_record_rejects():
    with pytest.raises(ValueError):
        cli.validate_record({"schema_version": 2, "record_type": "coefficient"})
    with pytest.raises(ValueError):
        cli.validate_record({"schema_version": 1, "record_type": "coefficient", "order": 0})
