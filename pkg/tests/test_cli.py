import csv
import io
from pathlib import Path

import pytest

from encaudit.audit import reduce
from encaudit.cli import bench, bench_csv, run_command
from encaudit.logstore import read_log
from encaudit.modecheck import parse_delta, parse_modes
from encaudit.policy import GLBA_EXAMPLE, GLBA_MODES, parse_policy

POLICY_DIR = Path(__file__).resolve().parent.parent / "policies"
POLICY = str(POLICY_DIR / "glba.pol")
MODES = str(POLICY_DIR / "glba.modes")


def run(*argv):
    return run_command([str(a) for a in argv])


def test_modecheck_prints_delta(capsys):
    assert run("modecheck", POLICY, MODES) == 0
    out = capsys.readouterr().out
    assert "send.3 -> tagged.1" in out
    assert len(parse_delta(out)) == 17


def test_modecheck_failure(tmp_path, capsys):
    bad = tmp_path / "bad.pol"
    bad.write_text("forall m,q,a. (tagged(m, q, a) -> true)\n")
    assert run("modecheck", bad, MODES) == 1


def test_usage_errors(tmp_path, capsys):
    assert run() == 2
    assert run("frobnicate") == 2
    assert run("audit", "--scheme", "kh", "--log", tmp_path, "--policy", POLICY,
               "--out", tmp_path / "r") == 2
    assert run("audit", "--scheme", "det", "--log", tmp_path, "--policy", POLICY,
               "--tokens", "t", "--out", tmp_path / "r") == 2
    assert run("bench", "--schemes", "plain,rot13") == 2


@pytest.fixture(scope="module")
def plain_log(tmp_path_factory):
    d = tmp_path_factory.mktemp("plain")
    assert run("gen-log", "--policy", POLICY, "--modes", MODES, "--actions", 40,
               "--violations", 1, "--seed", 3, "--incomplete", "discNotice,customerOf",
               "--reuse", 0.3, "--noise", 0.3, "--out", d) == 0
    return d


@pytest.mark.parametrize("scheme", ["det", "kh"])
def test_pipeline_matches_reduce(scheme, plain_log, tmp_path, capsys):
    delta = tmp_path / "delta.txt"
    assert run("modecheck", POLICY, MODES) == 0
    delta.write_text(capsys.readouterr().out)
    keys, elog = tmp_path / "keys", tmp_path / "elog"
    assert run("keygen", "--scheme", scheme, "--schema", MODES, "--delta", delta,
               "--seed", 5, "--out", keys) == 0
    assert run("encrypt-log", "--keys", keys, "--log", plain_log, "--modes", MODES,
               "--policy", POLICY, "--out", elog) == 0
    assert (elog / "et.txt").exists()
    assert run("encrypt-policy", "--keys", keys, "--policy", POLICY,
               "--out", tmp_path / "epol") == 0
    extra = []
    if scheme == "kh":
        assert run("gen-tokens", "--keys", keys, "--delta", delta,
                   "--out", tmp_path / "tokens") == 0
        extra = ["--tokens", tmp_path / "tokens"]
    trace = tmp_path / "trace.txt"
    assert run("audit", "--scheme", scheme, "--log", elog, "--policy", tmp_path / "epol",
               "--modes", MODES, "--out", tmp_path / "res", "--trace-queries",
               "--trace-out", trace, *extra) == 0
    assert run("decrypt-result", "--keys", keys, "--residual", tmp_path / "res",
               "--out", tmp_path / "plain.pol") == 0
    modes = parse_modes(GLBA_MODES)
    want = reduce(read_log(plain_log, modes), parse_policy(GLBA_EXAMPLE))
    assert parse_policy((tmp_path / "plain.pol").read_text()) == want
    lines = trace.read_text().splitlines()
    assert any(line.startswith("compare ") for line in lines)


def test_encrypt_log_scheme_mismatch(plain_log, tmp_path):
    keys = tmp_path / "keys"
    assert run("keygen", "--scheme", "kh", "--schema", MODES, "--out", keys) == 0
    assert run("encrypt-log", "--scheme", "det", "--keys", keys, "--log", plain_log,
               "--out", tmp_path / "e") == 2


def test_check_equiv(plain_log, tmp_path, capsys):
    assert run("check-equiv", plain_log, plain_log, "--modes", MODES,
               "--consts", "institution,npi", "--disps", "0,30") == 0
    other = tmp_path / "other"
    assert run("gen-log", "--policy", POLICY, "--modes", MODES, "--actions", 41,
               "--seed", 3, "--out", other) == 0
    assert run("check-equiv", plain_log, other, "--modes", MODES) == 1
    assert "not equivalent" in capsys.readouterr().out


def test_bench_rows_and_csv(tmp_path):
    modes = parse_modes(GLBA_MODES)
    rows = bench(parse_policy(GLBA_EXAMPLE), modes, [20], ["plain", "det", "kh"],
                 repeats=1, verify=True, include_encryption=True)
    assert [r["scheme"] for r in rows] == ["plain", "det", "kh"]
    for r in rows:
        assert r["per_action_ms"] == pytest.approx(r["total_ms"] / 20, abs=1e-4)
    text = bench_csv(rows)
    header = text.splitlines()[0]
    assert header == "scheme,actions,total_ms,per_action_ms,log_bytes,encrypt_ms"
    out = tmp_path / "bench.csv"
    assert run("bench", "--actions", "10", "--schemes", "plain,det", "--repeats", 1,
               "--out", out) == 0
    parsed = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [p["scheme"] for p in parsed] == ["plain", "det"]
