import csv
import io
import json
import math

import numpy as np
import pytest

from qmem import _parallel
from qmem.cli import UsageError, fmt, main, parse_range


def run_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_ideal_map_verdicts(capsys):
    doc = run_json(capsys, "ideal-map", "--xi", "0", "--phi", str(math.pi / 2))
    assert doc["complete_memory_map"] is True
    assert doc["symplectic_residual"] < 1e-12
    assert np.allclose(doc["matrix"][0], [0, 0, 1, 0])
    doc = run_json(capsys, "ideal-map", "--xi", "0.4", "--phi", "0.3")
    assert doc["complete_memory_map"] is False


def test_protocol_default_fidelity(capsys):
    doc = run_json(capsys, "protocol")
    assert doc["overlap_fidelity"] == pytest.approx(math.sqrt(2 / 3), abs=1e-11)
    assert doc["analytic_fidelity"] == pytest.approx(math.sqrt(2 / 3), abs=1e-11)


def test_protocol_triple_pass_is_perfect(capsys):
    doc = run_json(capsys, "protocol", "--scheme", "triple_pass")
    assert doc["overlap_fidelity"] == pytest.approx(1.0, abs=1e-11)
    assert doc["analytic_fidelity"] == 1.0


def test_protocol_double_pass_strengths(capsys):
    doc = run_json(capsys, "protocol", "--scheme", "double_pass", "--t", "2", "0.5")
    assert doc["overlap_fidelity"] == pytest.approx(0.942809041582, abs=1e-11)


def test_protocol_monte_carlo_is_seeded(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["protocol", "--samples", "2000", "--seed", "7", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    mc = json.loads(a.read_text())["monte_carlo"]
    assert mc["fidelity"] == pytest.approx(math.sqrt(2 / 3), abs=5 * mc["standard_error"])


def test_protocol_rejects_noise_without_measurement(capsys):
    assert main(["protocol", "--scheme", "double_pass", "--sigma-eta", "0.1"]) == 2


def test_numeric_failure_exit_code(capsys):
    assert main(["protocol", "--sigma-eta", "inf"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["protocol", "--scheme", "quadruple_pass"]) == 2
    assert main(["cat-fidelity", "--alpha2", "1:2"]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_flag": 1}))
    assert main(["protocol", "--config", str(cfg)]) == 2


def test_config_sets_defaults_and_flags_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "double_pass", "t": [2.0, 0.5]}))
    doc = run_json(capsys, "protocol", "--config", str(cfg))
    assert doc["scheme"] == "double_pass"
    assert doc["overlap_fidelity"] == pytest.approx(0.942809041582, abs=1e-11)
    doc = run_json(capsys, "protocol", "--config", str(cfg), "--t", "1", "1")
    assert doc["pass_strengths"] == [1.0, 1.0]


def test_parse_range_and_format():
    assert np.allclose(parse_range("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(parse_range("1e-3:1e-1:3", log=True), [1e-3, 1e-2, 1e-1])
    for bad in ("1:2", "a:b:3", "0:1:0"):
        with pytest.raises(UsageError):
            parse_range(bad)
    assert fmt(1 / 3) == "0.333333333333"


def test_cat_grid_csv_and_sidecar(tmp_path, monkeypatch):
    monkeypatch.setenv("QMEM_THREADS", "2")
    out = tmp_path / "fig.csv"
    assert main(["cat-fidelity", "--alpha2", "0.1:5:12", "--var", "0.05:0.5:4", "-o", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(io.StringIO(raw.decode())))
    assert rows[0] == ["alpha2", "sigma_xa", "fidelity"]
    F = np.array([[float(v) for v in r] for r in rows[1:]])[:, 2].reshape(12, 4)
    assert np.all(np.diff(F, axis=0) < 0) and np.all(np.diff(F, axis=1) < 0)
    assert np.max(np.abs(np.diff(F[:3], axis=0))) < 0.05
    side = json.loads(out.with_suffix(".crossing.json").read_text())
    assert side["alpha2_crossing"]["quadrature"] == pytest.approx(2.0, abs=0.15)
    assert side["alpha2_crossing"]["coherent"] == pytest.approx(side["alpha2_crossing"]["quadrature"] / 2)


def test_cat_grid_is_reproducible(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["cat-fidelity", "--alpha2", "0.5:2:3", "--var", "0.1:0.5:2", "-o", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_eit_command_columns(capsys):
    assert main(["eit", "--durations", "20", "40"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == ["T", "theta_dot_over_gammaB", "efficiency", "predicted_loss",
                             "gamma_D_T", "omega_B", "status"]
    assert [float(r["T"]) for r in rows] == pytest.approx([20, 40])
    assert all(r["status"] == "ok" and float(r["omega_B"]) == 0 for r in rows)
    assert float(rows[1]["efficiency"]) > float(rows[0]["efficiency"])


def test_eit_rejects_bad_durations(capsys):
    assert main(["eit", "--durations", "-1"]) == 2


def test_thread_cap_validation(monkeypatch):
    monkeypatch.setenv("QMEM_THREADS", "3")
    assert _parallel.max_workers() == 3
    for bad in ("0", "two"):
        monkeypatch.setenv("QMEM_THREADS", bad)
        with pytest.raises(ValueError):
            _parallel.max_workers()
    monkeypatch.delenv("QMEM_THREADS")
    assert _parallel.max_workers() >= 1
    assert _parallel.parallel_map(abs, [-3, 2, -1], workers=2) == [3, 2, 1]
