import json
import subprocess
import sys
from pathlib import Path

import pytest

from omegafib.cli import main

FAST_EXPERIMENT = {"B": [50, 100], "epsilons": [0.5]}
FAST_BOUNDS = {
    "norton": {"x_grid": [1, 2], "beta_grid": [1.5, 2]},
    "hardy_ramanujan": {"t_max": 3, "x_grid": [1000]},
    "radical": {"r_max": 2, "T": 30},
    "nair_tenenbaum": {"form": "1 1", "B_grid": [100]},
    "truncated_moment": {"form": "1 1", "B": 100, "C1": 1.0, "C2": 1.0, "y": 2.0},
}


def write_cfg(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return str(p)


def run(args):
    return main(args)


def test_sieve_artifacts(tmp_path):
    out = tmp_path / "out"
    code = run(["sieve", "--out", str(out), "--quiet", "--config",
                write_cfg(tmp_path, "c.json", {"limit": 100})])
    assert code == 0
    lines = (out / "sieve_primes.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == "# artifact=sieve_primes"
    assert lines[2].startswith("# config=")
    assert lines[3] == "p"
    assert lines[4] == "2" and lines[-1] == "97"
    summary = json.loads((out / "sieve_summary.json").read_text())
    assert summary["data"]["count"] == 25
    assert summary["schema_version"] == "1"
    assert summary["config"]["limit"] == 100


def test_sigma_fit(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(
        tmp_path, "c.json",
        {"table": {"kind": "synthetic-delta", "delta": "1", "lo": 2, "T": 10000},
         "fit_grid": [100, 1000, 10000]},
    )
    assert run(["sigma", "--out", str(out), "--quiet", "--config", cfg]) == 0
    summary = json.loads((out / "sigma_summary.json").read_text())
    assert abs(summary["data"]["delta_hat"] - 1.0) < 0.2


def test_model_pmf_artifacts(tmp_path):
    out = tmp_path / "out"
    assert run(["model", "--out", str(out), "--quiet"]) == 0
    rows = [l for l in (out / "model_pmf.csv").read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "k,prob"
    pmf = [float(r.split(",")[1]) for r in rows[1:]]
    assert pmf == [0.25, 0.5, 0.25]
    mgf_rows = [l for l in (out / "model_mgf.csv").read_text().splitlines() if not l.startswith("#")]
    assert mgf_rows[0] == "t,mgf"


def test_rate_artifact_values(tmp_path):
    out = tmp_path / "out"
    assert run(["rate", "--out", str(out), "--quiet"]) == 0
    rows = [l for l in (out / "rate_curve.csv").read_text().splitlines() if not l.startswith("#")]
    table = {float(r.split(",")[0]): r.split(",")[1] for r in rows[1:]}
    assert table[1.0] == "0.0"
    assert table[-1.0] == "inf"


def test_experiment_artifacts(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "c.json", FAST_EXPERIMENT)
    assert run(["experiment", "--out", str(out), "--quiet", "--config", cfg]) == 0
    body = json.loads((out / "experiment_summary.json").read_text())
    assert body["config"]["B"] == [50, 100]
    assert "candidates" in body["data"]
    csv_rows = [
        l for l in (out / "experiment_tail.csv").read_text().splitlines() if not l.startswith("#")
    ]
    assert csv_rows[0].split(",")[:3] == ["B", "epsilon", "mode"]
    assert len(csv_rows) == 1 + 2 * 2  # (B, eps, mode) rows


def test_bounds_and_report_merge(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "c.json", FAST_BOUNDS)
    assert run(["bounds", "--out", str(out), "--quiet", "--config", cfg]) == 0
    verdicts = json.loads((out / "bounds_summary.json").read_text())["data"]["verdicts"]
    assert verdicts["norton"] == "holds"
    assert verdicts["radical"] == "holds"
    assert run(["report", "--out", str(out), "--quiet"]) == 0
    merged = json.loads((out / "report.json").read_text())
    assert "bounds_summary" in merged["data"]["artifacts"]


def test_double_run_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, "c.json", FAST_EXPERIMENT)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run(["experiment", "--out", str(out), "--quiet", "--config", cfg]) == 0
        assert run(["model", "--out", str(out), "--quiet", "--seed", "5"]) == 0
        outs.append(out)
    for fn in ("experiment_tail.csv", "experiment_summary.json", "model_pmf.csv", "model_summary.json"):
        assert (outs[0] / fn).read_bytes() == (outs[1] / fn).read_bytes(), fn


def test_exit_code_config_error(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "c.json", {"B": [100, 50]})
    assert run(["experiment", "--out", str(out), "--quiet", "--config", cfg]) == 2
    assert (out / "FAILED").exists()


def test_exit_code_unknown_config_key(tmp_path, capsys):
    # a typo'd key must exit 2, not silently run the defaults
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "c.json", {"b_grid": [100, 200], "epsilons": [0.5]})
    assert run(["experiment", "--out", str(out), "--quiet", "--config", cfg]) == 2
    assert "b_grid" in capsys.readouterr().err
    # config rejected before anything ran: no out dir, so nothing to flag
    assert not out.exists()
    out.mkdir()
    cfg2 = write_cfg(tmp_path, "c2.json", {"norton": {"x_grid": [1], "beta_grid": [2]}, "nortn": {}})
    assert run(["bounds", "--out", str(out), "--quiet", "--config", cfg2]) == 2
    # pre-existing out dir does get the marker, so stale artifacts read as failed
    assert (out / "FAILED").exists()


def test_exit_code_budget_error(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "c.json", {"limit": 2_000_000_000})
    assert run(["sieve", "--out", str(out), "--quiet", "--config", cfg]) == 3
    assert (out / "FAILED").exists()


def test_exit_code_bad_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run(["sieve", "--out", str(tmp_path / "out"), "--quiet", "--config", str(bad)]) == 2


def test_failed_marker_cleared_on_success(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, "bad.json", {"B": [100, 50]})
    assert run(["experiment", "--out", str(out), "--quiet", "--config", cfg]) == 2
    assert (out / "FAILED").exists()
    good = write_cfg(tmp_path, "good.json", FAST_EXPERIMENT)
    assert run(["experiment", "--out", str(out), "--quiet", "--config", good]) == 0
    assert not (out / "FAILED").exists()


def test_seed_override_changes_histogram(tmp_path):
    outs = {}
    for seed in ("1", "2"):
        out = tmp_path / seed
        assert run(["model", "--out", str(out), "--quiet", "--seed", seed]) == 0
        outs[seed] = json.loads((out / "model_summary.json").read_text())["data"]["mc_histogram"]
    assert outs["1"] != outs["2"]


def test_console_entrypoint_runs(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "omegafib.cli", "rate", "--out", str(tmp_path / "o"), "--quiet"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == ""


def test_unquiet_prints_artifacts(tmp_path, capsys):
    assert run(["rate", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "rate_curve.csv" in out
