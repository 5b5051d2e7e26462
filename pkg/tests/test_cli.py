"""End-to-end CLI behavior: subcommands, exit codes, manifests."""
import csv
import subprocess
import sys
from pathlib import Path

import yaml

FAST = [
    "--set", "sim_time_s=1.0",
    "--set", "group_c.count=5",
    "--set", "group_c.allow_any_count=true",
]


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "slsim.cli", *args],
        capture_output=True,
        text=True,
    )


def test_simulate_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "run"
    r = run_cli("simulate", "--seed", "3", "--out", str(out), *FAST)
    assert r.returncode == 0, r.stderr
    csv_path = out / "scenario1-c5-s3.csv"
    assert csv_path.exists()
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and {"run_id", "group", "metric", "value"} <= set(rows[0])
    manifest = yaml.safe_load((out / "manifest.yaml").read_text())
    assert manifest["runs"] == ["scenario1-c5-s3"]
    assert manifest["config"]["seed"] == 3
    assert manifest["provenance"]["seed"] == "flag"
    assert manifest["provenance"]["sim_time_s"] == "flag"
    assert manifest["provenance"]["pool.t1"] == "default"


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"scenario": "scenario3", "sim_time_s": 1.0,
                                   "group_c": {"count": 5, "allow_any_count": True}}))
    out = tmp_path / "run"
    r = run_cli("simulate", "--config", str(cfg), "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert (out / "scenario3-c5-s1.csv").exists()


def test_sweep_and_aggregate_pipeline(tmp_path):
    out = tmp_path / "sweep"
    r = run_cli(
        "sweep", "--seeds", "1..2", "--group-c", "5,6", "--out", str(out), *FAST
    )
    assert r.returncode == 0, r.stderr
    run_files = sorted(p.name for p in out.glob("scenario1-*.csv"))
    assert run_files == [
        "scenario1-c5-s1.csv",
        "scenario1-c5-s2.csv",
        "scenario1-c6-s1.csv",
        "scenario1-c6-s2.csv",
    ]
    manifest = yaml.safe_load((out / "manifest.yaml").read_text())
    assert len(manifest["runs"]) == 4

    agg = tmp_path / "aggregate.csv"
    r = run_cli("aggregate", "--runs", str(out), "--out", str(agg))
    assert r.returncode == 0, r.stderr
    with open(agg, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r_["group_c_count"] for r_ in rows} == {"5", "6"}
    for row in rows:
        assert float(row["p5"]) <= float(row["p50"]) <= float(row["p95"])


def test_validate_ok_and_exit_codes(tmp_path):
    assert run_cli("validate").returncode == 0

    # config error -> exit 2
    r = run_cli("validate", "--set", "pool.t1=40")
    assert r.returncode == 2
    assert "t1 < t2" in r.stderr

    r = run_cli("simulate", "--out", str(tmp_path / "x"), "--set", "nope=1")
    assert r.returncode == 2
    assert "unknown config key" in r.stderr


def test_aggregate_empty_dir_is_config_error(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    r = run_cli("aggregate", "--runs", str(empty), "--out", str(tmp_path / "a.csv"))
    assert r.returncode == 2


def test_runtime_error_exit_code(tmp_path):
    # unwritable output path surfaces as a runtime failure, not a crash
    r = run_cli("simulate", "--out", "/proc/definitely/not/writable", *FAST)
    assert r.returncode == 3


def test_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        r = run_cli("simulate", "--seed", "11", "--out", str(out), *FAST)
        assert r.returncode == 0, r.stderr
    f1 = (out1 / "scenario1-c5-s11.csv").read_bytes()
    f2 = (out2 / "scenario1-c5-s11.csv").read_bytes()
    assert f1 == f2
