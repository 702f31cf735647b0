"""End-to-end command-line checks: formats, determinism, exit codes."""

import csv
import io
import json
import math
import subprocess
import sys

import numpy as np

from cqrel.channels import bsc_channel
from cqrel.cli import CSV_COLUMNS, channel_spec_dict

CLI = [sys.executable, "-m", "cqrel.cli"]


def run_cli(*args, **kw):
    return subprocess.run(CLI + list(args), capture_output=True,
                          text=True, **kw)


def test_exponents_csv_schema_and_shape():
    res = run_cli("exponents", "--channel", "bsc:0.11",
                  "--rates", "0.1:0.6:0.1", "--format", "csv")
    assert res.returncode == 0
    rows = list(csv.DictReader(io.StringIO(res.stdout)))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 6  # stop-inclusive range
    lowers = [float(r["E_lower"]) for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(lowers, lowers[1:]))
    assert all(r["vacuous_flag"] in ("0", "1") for r in rows)


def test_exponents_output_is_byte_identical_across_runs():
    args = ("exponents", "--channel", "pure2:0.4",
            "--rates", "0.05,0.2,0.35", "--format", "json")
    a, b = run_cli(*args), run_cli(*args)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_exponents_json_and_csv_agree():
    common = ("exponents", "--channel", "bsc:0.2", "--rates", "0.05,0.3,0.7")
    rows_c = list(csv.DictReader(io.StringIO(
        run_cli(*common, "--format", "csv").stdout)))
    rows_j = json.loads(run_cli(*common, "--format", "json").stdout)
    for rc, rj in zip(rows_c, rows_j):
        for col, key in (("E_lower", "lower"), ("E_upper", "upper")):
            c = float(rc[col])
            j = rj[key]["value"]
            if math.isinf(c) or math.isinf(j):
                assert c == j
            else:
                assert abs(c - j) < 1e-11


def test_channel_file_reproduces_generator(tmp_path):
    spec = tmp_path / "chan.json"
    spec.write_text(json.dumps(channel_spec_dict(bsc_channel(0.11))))
    args = ("--rates", "0.2,0.4", "--format", "csv")
    from_gen = run_cli("exponents", "--channel", "bsc:0.11", *args)
    from_file = run_cli("exponents", "--channel", str(spec), *args)
    assert from_file.returncode == 0
    for rg, rf in zip(csv.DictReader(io.StringIO(from_gen.stdout)),
                      csv.DictReader(io.StringIO(from_file.stdout))):
        for col in CSV_COLUMNS[:-1]:
            g, f = float(rg[col]), float(rf[col])
            assert g == f or abs(g - f) < 1e-12


def test_output_file_flag(tmp_path):
    out = tmp_path / "rows.csv"
    res = run_cli("exponents", "--channel", "pure2:0.3",
                  "--rates", "0.1,0.2", "--output", str(out))
    assert res.returncode == 0 and res.stdout == ""
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_verify_subcommand_passes():
    res = run_cli("verify", "--seed", "0", "--bundles", "2")
    assert res.returncode == 0
    assert res.stdout.strip().endswith("verify: PASS")
    assert "0 failed" in res.stdout


def test_simulate_emits_passing_certificate(tmp_path):
    out = tmp_path / "cert.json"
    res = run_cli("simulate", "--channel", "pure2:0.5", "--n", "2",
                  "--m", "1", "--output", str(out))
    assert res.returncode == 0
    cert = json.loads(out.read_text())
    assert cert["pass"] is True
    assert cert["observed_exponent"] >= max(cert["bound_values"]) - 1e-9


def test_pa_and_dc_subcommands_run():
    pa = run_cli("pa", "--channel", "bsc:0.1", "--prior", "0.5,0.5",
                 "--n", "2", "--k", "1")
    assert pa.returncode == 0 and "PASS" in pa.stdout
    dc = run_cli("dc", "--channel", "bsc:0.1", "--prior", "0.5,0.5",
                 "--n", "3", "--k", "1")
    assert dc.returncode == 0 and "error" in dc.stdout


def test_parse_errors_exit_2(tmp_path):
    assert run_cli("exponents", "--channel", "bsc:oops",
                   "--rates", "0.1").returncode == 2
    assert run_cli("exponents", "--channel", "unknown:1",
                   "--rates", "0.1").returncode == 2
    assert run_cli("exponents", "--channel", str(tmp_path / "absent.json"),
                   "--rates", "0.1").returncode == 2
    assert run_cli("exponents", "--channel", "bsc:0.1").returncode == 2
    # degenerate range produces no records -> usage error
    assert run_cli("exponents", "--channel", "bsc:0.1",
                   "--rates", "0.9:0.1:0.1").returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("exponents", "--channel", str(bad),
                   "--rates", "0.1").returncode == 2


def test_validation_errors_exit_3(tmp_path):
    res = run_cli("exponents", "--channel", "bsc:0.7", "--rates", "0.1")
    assert res.returncode == 3
    spec = channel_spec_dict(bsc_channel(0.2))
    spec["states"][1] = np.stack(
        [np.diag([1.5, -0.5]), np.zeros((2, 2))], axis=-1).tolist()
    bad = tmp_path / "nonpsd.json"
    bad.write_text(json.dumps(spec))
    res = run_cli("exponents", "--channel", str(bad), "--rates", "0.1")
    assert res.returncode == 3
    assert "state 1" in res.stderr


def test_guard_violation_exits_4():
    res = run_cli("simulate", "--channel", "bsc:0.1", "--n", "9", "--m", "1")
    assert res.returncode == 4


def test_io_failure_exits_5(tmp_path):
    res = run_cli("exponents", "--channel", "bsc:0.1", "--rates", "0.1",
                  "--output", str(tmp_path / "no" / "dir" / "out.csv"))
    assert res.returncode == 5
