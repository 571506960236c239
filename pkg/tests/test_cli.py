import csv
import json

import numpy as np
import pytest

from fuzzycausal.cli import main

LINEAR_SCM = {
    "variables": [
        {"name": "x", "expr": "0", "noise": {"kind": "normal", "mean": 1, "std": 1}},
        {"name": "t", "expr": "0.5 * x", "noise": {"kind": "normal", "mean": 5, "std": 1}},
        {"name": "y", "expr": "2 * t + 3 * x", "noise": {"kind": "normal", "mean": 0, "std": 1}},
    ],
    "treatment": "t",
    "outcome": "y",
}


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_generate_writes_sodium_columns(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["generate", "--builtin", "sodium", "--n", "500", "--seed", "0", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["age", "sodium", "bloodpressure", "proteinuria"]
    assert len(rows) == 501


def test_generate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["generate", "--builtin", "sodium", "--n", "300", "--seed", "7", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_rejects_zero_rows(tmp_path):
    assert main(["generate", "--builtin", "sodium", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert not (tmp_path / "x.csv").exists()


def test_env_seed_is_the_default(tmp_path, monkeypatch):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    monkeypatch.setenv("FUZZY_CAUSAL_SEED", "11")
    main(["generate", "--builtin", "sodium", "--n", "50", "--out", str(a)])
    main(["generate", "--builtin", "sodium", "--n", "50", "--seed", "11", "--out", str(b)])
    main(["generate", "--builtin", "sodium", "--n", "50", "--seed", "12", "--out", str(c)])
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    monkeypatch.setenv("FUZZY_CAUSAL_SEED", "eleven")
    assert main(["generate", "--builtin", "sodium", "--n", "50", "--out", str(a)]) == 2


def test_config_file_with_flag_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"builtin": "sodium", "n": 40, "seed": 3}))
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(["generate", "--config", str(conf), "--out", str(a)]) == 0
    assert main(["generate", "--config", str(conf), "--n", "60", "--out", str(b)]) == 0
    assert main(["generate", "--builtin", "sodium", "--n", "40", "--seed", "3", "--out", str(c)]) == 0
    assert len(_rows(b)) == 61
    assert a.read_bytes() == c.read_bytes()
    conf.write_text(json.dumps({"colour": "blue"}))
    assert main(["generate", "--config", str(conf), "--builtin", "sodium"]) == 2


def test_effects_needs_pair(tmp_path):
    assert main(["effects", "--builtin", "sodium", "--n", "100"]) == 2
    assert main(["effects", "--builtin", "sodium", "--pair", "fig9"]) == 2


def test_effects_nfate_single_row_equals_coefficient(tmp_path, capsys):
    scm = tmp_path / "lin.json"
    scm.write_text(json.dumps(LINEAR_SCM))
    out = tmp_path / "e.csv"
    rc = main(["effects", "--scm", str(scm), "--estimators", "nfate", "--pair", "fig1a",
               "--n", "2000", "--n-mc", "2000", "--out", str(out)])
    assert rc == 0
    rows = _rows(out)
    assert rows[0] == ["estimator", "estimate", "true"]
    assert len(rows) == 2 and rows[1][0] == "NFATE"
    assert float(rows[1][1]) == pytest.approx(2.0, abs=0.05)
    assert float(rows[1][2]) == pytest.approx(2.0, abs=1e-9)
    assert "NFATE" in capsys.readouterr().out


def test_effects_from_csv_data(tmp_path):
    data = tmp_path / "s.csv"
    main(["generate", "--builtin", "sodium", "--n", "3000", "--out", str(data)])
    out = tmp_path / "e.csv"
    rc = main(["effects", "--data", str(data), "--treatment", "sodium", "--outcome", "bloodpressure",
               "--covariates", "age", "--pair", "fig1a", "--estimators", "ate,nfate,ngfate", "--out", str(out)])
    assert rc == 0
    vals = {r[0]: float(r[1]) for r in _rows(out)[1:]}
    for k in ("ATE", "NFATE", "NGFATE"):
        assert vals[k] == pytest.approx(1.05, abs=0.1)
    assert main(["effects", "--data", str(data), "--pair", "fig1a"]) == 2


def test_missing_input_file_is_io_error(tmp_path):
    assert main(["effects", "--data", str(tmp_path / "nope.csv"), "--pair", "fig1a"]) == 4
    assert main(["surface", "--rulebase", str(tmp_path / "nope.json")]) == 4


def test_surface_counts_and_range(tmp_path):
    out = tmp_path / "surf.csv"
    assert main(["surface", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["quality", "service", "tip"]
    assert len(rows) == 51 * 51 + 1
    tips = np.array([float(r[2]) for r in rows[1:]])
    assert tips.min() >= 0 and tips.max() <= 25


def test_surface_one_file_per_defuzzifier(tmp_path):
    out = tmp_path / "surf.csv"
    assert main(["surface", "--size", "5", "--defuzz", "centroid,lom", "--out", str(out)]) == 0
    assert len(_rows(tmp_path / "surf_centroid.csv")) == 26
    assert len(_rows(tmp_path / "surf_lom.csv")) == 26


def test_probabilistic_surface_with_unit_probabilities(tmp_path):
    det = tmp_path / "det.csv"
    prob = tmp_path / "prob.csv"
    assert main(["surface", "--size", "11", "--out", str(det)]) == 0
    from fuzzycausal.experiments import tipping_rulebase

    rb = tmp_path / "rb.json"
    tipping_rulebase().save(rb)
    assert main(["surface", "--size", "11", "--rulebase", str(rb), "--probabilistic", "--out", str(prob)]) == 0
    assert det.read_bytes() == prob.read_bytes()


def test_tipping_table_shape(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["tipping", "--n-mc", "100", "--grid", "21", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0][1:] == ["centroid", "bisector", "mom", "som", "lom"]
    assert [r[0] for r in rows[1:]] == ["FATE", "NFATE", "GFATE", "NGFATE"]
    out2 = tmp_path / "p.csv"
    assert main(["tipping", "--builtin", "tipping-prob", "--n-mc", "100", "--grid", "21", "--out", str(out2)]) == 0
    assert len(_rows(out2)[0]) == 2


def test_rules_thresholds_of_one_is_domain_error(tmp_path):
    assert main(["rules", "--n", "500", "--support", "1", "--confidence", "1"]) == 3


def test_rules_writes_rulebase(tmp_path, capsys):
    rb = tmp_path / "rb.json"
    out = tmp_path / "r.csv"
    rc = main(["rules", "--n", "2000", "--n-mc", "50", "--rulebase-out", str(rb), "--out", str(out)])
    assert rc == 0
    doc = json.loads(rb.read_text())
    assert doc["rules"] and doc["output"]["name"] == "bloodpressure"
    assert [r[0] for r in _rows(out)[1:]] == ["ATE", "FATE", "NFATE", "GFATE", "NGFATE"]
    assert "prediction MAE on first 100 rows" in capsys.readouterr().out


def test_bad_fraction_is_usage_error():
    assert main(["rules", "--support", "1.5"]) == 2
