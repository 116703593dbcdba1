import csv
import json
import subprocess
import sys

import pytest

from qudit_learn import cli, results
from qudit_learn.results import ResultEnvelope


def run(*argv):
    return cli.main(list(argv))


def test_verify_passes(tmp_path):
    out = tmp_path / "v.json"
    assert run("verify", "--d", "3", "--seed", "1", "--format", "json", "--out", str(out)) == 0
    env = json.loads(out.read_text())
    assert env["schema_version"] == results.SCHEMA_VERSION
    assert env["summary"]["passed"] and env["summary"]["dimensions"] == [2, 3, 5, 7]
    assert "metadata" not in env


def test_bad_dimension_exit_code(capsys):
    assert run("verify", "--d", "4") == 2
    assert "d must be prime" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [("learn", "--eps", "1.5"), ("learn", "--delta", "0"),
                                  ("scaling", "--d-list", "3,9"), ("shadows", "--observables", "Q:1:1"),
                                  ("norms", "--d", "2"), ("twirl", "--d", "7"),
                                  ("learn", "--state", "spiked", "--spike", "0,0,1")])
def test_usage_errors(argv):
    assert run(*argv) == 2


def test_learn_maximally_mixed_zero(tmp_path):
    out = tmp_path / "l.csv"
    assert run("learn", "--d", "5", "--eps", "0.3", "--state", "maximally_mixed", "--out", str(out)) == 0
    rows = results.read_csv(out)
    assert len(rows) == 24
    assert all(float(r["y_hat_re"]) == 0 and float(r["y_hat_im"]) == 0 for r in rows)


def test_check_failure_still_writes(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "SHADOW_Z_MAX", -1.0)
    out = tmp_path / "s.csv"
    assert run("shadows", "--d", "3", "--samples", "200", "--out", str(out)) == 1
    rows = results.read_csv(out)
    assert rows and all(r["passed"] == "false" for r in rows)


@pytest.mark.parametrize("argv", [("verify", "--d", "5"), ("learn", "--d", "5", "--seed", "3"),
                                  ("shadows", "--d", "5", "--samples", "3000"),
                                  ("scaling", "--d-list", "3,5", "--trials", "10"),
                                  ("twirl", "--d", "2"), ("norms", "--d", "3")])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_byte_determinism(tmp_path, argv, fmt):
    a, b = tmp_path / "a", tmp_path / "b"
    run(*argv, "--format", fmt, "--out", str(a))
    run(*argv, "--format", fmt, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("# sweep settings\nd = 7\neps = 0.4\nseed = 5\nformat = json\n")
    args = cli.build_parser().parse_args(["learn", "--config", str(cfgf), "--seed", "9"])
    cfg = cli.build_config(args)
    assert (cfg.d, cfg.epsilon, cfg.seed, cfg.format) == (7, 0.4, 9, "json")


def test_unknown_config_key(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("colour = blue\n")
    assert run("verify", "--config", str(cfgf)) == 2


def test_workers_env(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.build_config(cli.build_parser().parse_args(["scaling"])).workers == 3
    assert cli.build_config(cli.build_parser().parse_args(["scaling", "--workers", "1"])).workers == 1


def test_header_only_csv(tmp_path):
    env = ResultEnvelope("scaling", {"command": "scaling"}, [], {"passed": True})
    path = tmp_path / "e.csv"
    results.write_results(env, str(path), "csv")
    assert path.read_text() == ",".join(results.COLUMNS["scaling"]) + "\n"


def test_float_round_trip(tmp_path):
    vals = [0.1 + 0.2, 1 / 3, 2.0**-1074, 1e300 * 7, -0.0]
    env = ResultEnvelope("verify", {}, [{"check": "x", "d": 3, "value": v, "tolerance": v,
                                         "passed": True} for v in vals], {"passed": True})
    c, j = tmp_path / "r.csv", tmp_path / "r.json"
    results.write_results(env, str(c), "csv")
    results.write_results(env, str(j), "json")
    assert [float(r["value"]) for r in results.read_csv(c)] == vals
    assert [r["value"] for r in json.loads(j.read_text())["rows"]] == vals


def test_content_hash_is_git_blob_style():
    import hashlib
    payload = b'{"a":1}'
    assert results.content_hash({"a": 1}) == hashlib.sha1(b"blob 7\0" + payload).hexdigest()


def test_unwritable_path_reports_path(capsys):
    assert run("norms", "--d", "3", "--out", "/nonexistent-dir/x.csv") == 2
    assert "/nonexistent-dir/x.csv" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qudit_learn", "norms", "--d", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert next(csv.reader(r.stdout.splitlines())) == results.COLUMNS["norms"]
