import csv
import io
import json
import math

import pytest
from numpy.testing import assert_allclose

from erasurelab.channel import AdditiveChannel
from erasurelab.cli import ExperimentConfig, ConfigError, main
from erasurelab.coding import sample_codebook
from erasurelab.decoder import ForneyDecoder
from erasurelab.ldp import predict_mixed
from erasurelab.oracle import exact_error_probs
from erasurelab.probmodel import entropy, varentropy


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out))) if out else []


def write_config(tmp_path, **over):
    cfg = {
        "channel": {"d": 2, "noise": [0.6, 0.4]},
        "regime": {"t": 0.5, "a": 0.3, "b": 0.1},
        "n_grid": [100, 400],
        "trials": 20000,
        "seed": 3,
        "estimators": ["E1", "E2_reweight", "E2_exchange", "cgf"],
        "output": str(tmp_path / "out"),
    }
    cfg.update(over)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


def test_predict(capsys):
    code, rows = run(capsys, "predict", "--d", "2", "--noise", "0.6,0.4", "--t", "0.5", "--a", "0.3", "--b", "0.1")
    assert code == 0
    V = varentropy(AdditiveChannel.from_probs((0.6, 0.4)).noise)
    byk = {r["kind"]: float(r["predicted"]) for r in rows}
    assert byk["e1_limit"] == predict_mixed(0.3, 0.1, V).e1_limit
    assert byk["e2_leading"] == 0.1


def test_predict_with_grid(capsys):
    code, rows = run(capsys, "predict", "--noise", "0.6,0.4", "--t", "0.5", "--a", "0.3", "--b", "0.1", "--n-grid", "100,400")
    assert code == 0
    assert rows[0]["M"] == "infeasible"
    assert {r["n"] for r in rows} == {"100", "400"}


def test_oracle_matches_module(capsys):
    code, rows = run(capsys, "oracle", "--n", "3", "--d", "2", "--M", "2", "--noise", "0.9,0.1",
                     "--decoder", "forney", "--T", "0.1", "--seed", "5")
    assert code == 0
    ch = AdditiveChannel.from_probs((0.9, 0.1))
    ref = exact_error_probs(sample_codebook(3, 2, 2, 5), ch, ForneyDecoder(0.1))
    assert float(rows[0]["p_total"]) == ref.total
    assert float(rows[0]["p_undetected"]) == ref.undetected


def test_oracle_infospec_ensemble(capsys):
    code, rows = run(capsys, "oracle", "--n", "3", "--M", "2", "--noise", "0.9,0.1", "--decoder", "infospec",
                     "--b", "0.3", "--t", "0.5", "--ensemble")
    assert code == 0
    assert float(rows[0]["p_undetected"]) <= math.exp(-0.3 * 3**0.5)


def test_oracle_budget_exit(capsys, monkeypatch):
    monkeypatch.delenv("ERASURELAB_BUDGET_OVERRIDE", raising=False)
    code, _ = run(capsys, "oracle", "--n", "30", "--M", "2", "--noise", "0.9,0.1", "--T", "0.1")
    assert code == 4


def test_capacity(capsys):
    code, rows = run(capsys, "capacity", "--noise", "0.89,0.11")
    assert code == 0
    assert abs(float(rows[0]["capacity"]) - (math.log(2) - entropy(AdditiveChannel.from_probs((0.89, 0.11)).noise))) < 1e-8


def test_capacity_matrix(capsys, tmp_path):
    path = tmp_path / "bsc.txt"
    path.write_text("0.89 0.11\n0.11 0.89\n")
    code, rows = run(capsys, "capacity", "--matrix", str(path))
    assert code == 0 and rows[0]["input_dist"].startswith("0.5")


def test_ge(capsys):
    code, rows = run(capsys, "ge", "--slope0", "2", "--curvature", "1", "--x", "1")
    assert code == 0
    assert_allclose(float(rows[0]["y0"]), -1.0, atol=1e-10)
    assert_allclose(float(rows[0]["rate"]), 0.5, atol=1e-10)


def test_concentration(capsys):
    code, rows = run(capsys, "concentration", "--L", "4", "--M1", "2", "--M2", "1", "--s", "1", "--eps", "0.5")
    assert code == 0
    assert float(rows[0]["bound"]) <= float(rows[0]["exact"]) == pytest.approx(2.0)


def test_types(capsys):
    code, rows = run(capsys, "types", "--n", "4", "--d", "2", "--noise", "0.75,0.25")
    assert code == 0 and len(rows) == 5


def test_cgf(capsys):
    code, rows = run(capsys, "cgf", "--noise", "0.6,0.4", "--n", "400", "--t", "0.5", "--a", "0.3",
                     "--b", "0.1", "--trials", "5000", "--u", "0,1")
    assert code == 0
    assert float(rows[0]["phi"]) == 0.0


def test_config_errors(capsys, tmp_path):
    assert main(["predict", "--noise", "0.6,0.5", "--t", "0.5", "--a", "0.3", "--b", "0.1"]) == 2
    assert main(["predict", "--t", "0.5"]) == 2
    path = write_config(tmp_path, bogus=1)
    assert main(["simulate", "--config", str(path)]) == 2
    path = write_config(tmp_path, regime={"t": 0.5, "a": 0.3, "b": 0.1, "c": 2})
    assert main(["simulate", "--config", str(path)]) == 2
    path = write_config(tmp_path, estimators=["E3"])
    assert main(["simulate", "--config", str(path)]) == 2
    path = write_config(tmp_path, regime={"t": 0.3, "a": 0.1, "b": 0.3})
    assert main(["simulate", "--config", str(path)]) == 2
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"channel": {"noise": [0.5, 0.5]}})


def test_simulate_infeasible_everywhere(tmp_path):
    path = write_config(tmp_path, n_grid=[10, 50])
    assert main(["simulate", "--config", str(path)]) == 3
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert [e["status"] for e in summary["per_n"]] == ["infeasible", "infeasible"]


def test_simulate_outputs_and_determinism(tmp_path):
    path = write_config(tmp_path)
    outs = []
    for w, name in ((1, "w1"), (2, "w2")):
        out = tmp_path / name
        assert main(["simulate", "--config", str(path), "--seed", "7", "--workers", str(w), "--out", str(out)]) == 0
        outs.append(out)
    for f in ("measurements.csv", "predictions.csv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    text = (outs[0] / "measurements.csv").read_text()
    assert "\r" not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {r["estimator"] for r in rows} == {"E1", "E2_reweight", "E2_exchange", "cgf_u=1"}
    for r in rows:
        assert r["n"] == "400" and r["seed"] == "7" and r["d"] == "2"
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["per_n"][0]["status"] == "infeasible"
    assert "wall_time_ms" in summary["per_n"][1]
    assert "E1" in summary["per_n"][1]["gaps"]


def test_simulate_with_oracle(tmp_path):
    path = write_config(
        tmp_path, channel={"noise": [0.98, 0.02]}, regime={"t": 0.5, "a": 0.7, "b": 0.1},
        n_grid=[4], trials=2000, estimators=["E1", "oracle"],
    )
    assert main(["simulate", "--config", str(path)]) == 0
    rows = list(csv.DictReader((tmp_path / "out" / "measurements.csv").open()))
    assert {r["estimator"] for r in rows} == {"E1", "E1_exact", "E2_exact"}
