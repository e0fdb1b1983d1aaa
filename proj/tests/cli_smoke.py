"""Smoke tests for the cpinfer command-line tool: exit codes and report shape."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

CLI = sys.argv[1]
failures = []


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


def check(name, cond, detail=""):
    print(("ok   " if cond else "FAIL ") + name + (f" ({detail})" if detail and not cond else ""))
    if not cond:
        failures.append(name)


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    toy = tmp / "toy.csv"
    toy.write_text("value\n" + "0\n" * 4 + "10\n" * 4)
    flat = tmp / "flat.csv"
    flat.write_text("# constant\n" + "3\n" * 6)
    bad = tmp / "bad.csv"
    bad.write_text("1\n2\nx\n")

    r = run("detect", str(toy))
    check("detect exit 0", r.returncode == 0, r.stderr)
    rep = json.loads(r.stdout)
    check("detect finds row 4", rep["changepoints"]["indices"] == [4])
    check("schema version", rep["schema_version"] == 1)

    r = run("detect", str(flat), "--threshold", "1")
    check("constant series, threshold mode", r.returncode == 0 and json.loads(r.stdout)["changepoints"]["indices"] == [])

    check("missing file -> 3", run("detect", str(tmp / "none.csv")).returncode == 3)
    check("malformed file -> 3", run("detect", str(bad)).returncode == 3)
    check("zero MAD -> 3", run("test", str(flat), "--mad").returncode == 3)
    check("unknown flag -> 2", run("detect", str(toy), "--bogus").returncode == 2)
    check("bad condition -> 2", run("test", str(toy), "--condition", "nope").returncode == 2)
    check("sigma with mad -> 2", run("test", str(toy), "--sigma", "1", "--mad").returncode == 2)
    check("help -> 0", run("--help").returncode == 0)

    out_json = tmp / "t.json"
    out_csv = tmp / "t.csv"
    r = run("test", str(toy), "--half-width", "3", "-N", "2", "--seed", "5", "--json", str(out_json), "--csv", str(out_csv))
    check("test exit 0", r.returncode == 0, r.stderr)
    rep = json.loads(out_json.read_text())
    rec = rep["records"][0]
    check("test record fields", all(k in rec for k in ("tau_hat", "h1", "h2", "phi_obs", "p_hat", "p_adjusted",
                                                       "interval_count", "zero_weight_samples")))
    check("p in [0, 1]", 0.0 <= rec["p_hat"] <= rec["p_adjusted"] <= 1.0)
    lines = out_csv.read_text().splitlines()
    check("csv header", lines[0] == "index,p,p_adjusted")
    check("csv rows", len(lines) == 1 + len(rep["records"]))

    r2 = run("test", str(toy), "--half-width", "3", "-N", "2", "--seed", "5")
    check("reproducible", json.loads(r2.stdout) == rep)

    cfg = tmp / "run.ini"
    cfg.write_text("[test]\nsamples = 3\ncorrection = bh\n")
    rep = json.loads(run("--config", str(cfg), "test", str(toy), "--half-width", "3").stdout)
    check("config file read", rep["config"]["samples"] == 3 and rep["config"]["correction"] == "bh")
    rep = json.loads(run("--config", str(cfg), "test", str(toy), "--half-width", "3", "-N", "4").stdout)
    check("flags override config", rep["config"]["samples"] == 4)

    r = run("null-study", "--length", "100", "--alternating", "0", "--replicates", "20", "--n-grid", "1,2")
    check("null-study", r.returncode == 0 and len(json.loads(r.stdout)["rows"]) == 2, r.stderr)
    r = run("power-study", "--length", "200", "--changepoints", "100", "--means", "0,20", "--replicates", "10",
            "--n-grid", "1")
    check("power-study, overwhelming signal", r.returncode == 0 and json.loads(r.stdout)["rows"][0]["rejection_rate"] == 1.0,
          r.stdout[-300:])
    r = run("corr-study", "--length", "400", "--alternating", "1", "--amplitude", "2", "--count", "1",
            "--resamples", "5")
    check("corr-study needs two changepoints -> 3", r.returncode == 3)

sys.exit(1 if failures else 0)
