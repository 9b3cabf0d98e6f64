import csv
import dataclasses
import io
import json
import subprocess
import sys
from fractions import Fraction

import mpmath
import pytest

from qplancherel import cli
from qplancherel.numtheory import RealDescriptor


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "qplancherel", *args],
                          capture_output=True, text=True, env=env, timeout=600)


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_theta():
    r = run("eval", "theta", "--q", "1/2", "--z", "1")
    assert r.returncode == 0
    row = rows_of(r.stdout)[0]
    assert row["value_re"].startswith("2.1289368272118771586694585485449513246")
    assert Fraction(row["value_im"]) == 0


def test_classify():
    r = run("classify", "--tau", "0", "--theta", "1/4")
    assert r.returncode == 0 and rows_of(r.stdout)[0]["regime"] == "2"
    assert rows_of(run("classify", "--tau", "-1/2", "--theta", "surd:0,1,2,1").stdout)[0]["regime"] == "5"


def test_domain_error_exit_code():
    r = run("verify", "--tau", "-2", "--theta", "0", "--n", "3")
    assert r.returncode == 1 and "error" in r.stderr


def test_usage_error_exit_code():
    assert run("verify", "--nrange", "5..x").returncode == 1
    assert run("frobnicate").returncode == 1


def test_parse_nrange():
    assert cli.parse_nrange("3..9:3") == [3, 6, 9]
    assert cli.parse_nrange("1,2,4") == [1, 2, 4]
    with pytest.raises(cli.UsageError):
        cli.parse_nrange("1,4,2")


def test_csv_rows_consistent_with_pass_column():
    r = run("verify", "--q", "1/2", "--tau", "-1/2", "--theta", "1/3", "--z", "2", "--nrange", "8..30")
    assert r.returncode == 0
    rows = rows_of(r.stdout)
    assert list(rows[0]) == cli.CSV_HEADER
    assert [int(x["n"]) for x in rows] == list(range(8, 31))
    for x in rows:
        d = mpmath.mpf(x["abs_diff"])
        b = mpmath.mpf(x["bound"])
        diff = abs(mpmath.mpc(x["exact_re"], x["exact_im"]) - mpmath.mpc(x["main_re"], x["main_im"]))
        assert abs(diff - d) <= 1e-12 * max(1, d)
        assert (x["pass"] == "true") == (d <= b)
        assert x["regime"] == "4" and x["n_small"] == "false"


def test_irrational_nrange_filtered_to_hits():
    r = run("verify", "--tau", "0", "--theta", "surd:0,1,2,1", "--nrange", "1..100")
    assert r.returncode == 0
    ns = [int(x["n"]) for x in rows_of(r.stdout)]
    assert {5, 12, 29, 70} <= set(ns) and 100 not in ns
    assert all(x["beta1"] == "0" for x in rows_of(r.stdout))


def test_json_output(tmp_path):
    out = tmp_path / "rows.json"
    r = run("verify", "--tau", "1/2", "--theta", "0", "--nrange", "1..3", "--format", "json", "--output", str(out))
    assert r.returncode == 0
    data = json.loads(out.read_text())
    assert [d["n"] for d in data] == ["1", "2", "3"]
    assert all(d["pass"] == "true" for d in data)


def test_failures_give_exit_two(monkeypatch):
    real = cli.verify

    def failing(*a, **k):
        return dataclasses.replace(real(*a, **k), passed=False)

    monkeypatch.setattr(cli, "verify", failing)
    assert cli.main(["verify", "--tau", "1/2", "--theta", "0", "--n", "4"]) == 2


def test_precision_from_environment():
    import os
    env = dict(os.environ, QPLANCHEREL_PRECISION="256")
    r = run("eval", "Bq", "--q", "1/2", "--z", "1", env=env)
    digits = rows_of(r.stdout)[0]["value_re"]
    assert len(digits.replace(".", "")) > 60


@pytest.mark.parametrize("text", ["7/3", "surd:1,-1,2,1", "dec:0.3333:irrational"])
def test_descriptor_round_trip(text):
    r = run("classify", "--tau", "1/2", "--theta", text)
    assert r.returncode == 0
    assert RealDescriptor.parse(str(RealDescriptor.parse(text))) == RealDescriptor.parse(text)


def test_sweep_worker_independent():
    base = ["sweep", "--tau", "-1/2", "--theta", "1/3", "--nrange", "8..24"]
    outs = [run(*base, "--workers", w).stdout for w in ("1", "3")]
    assert outs[0] == outs[1] and len(rows_of(outs[0])) == 17
