"""Command-line front end: subcommands, exit codes, and JSON output."""

import json
import os

import pytest

from seclus.cli import main

from conftest import fixture_path, leaky_pairs

GOLDEN = "cnt_dn(a1,a2) =>g (b1) { g|a1|a2 <= b1 }"


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("SECLUS_COLOR", "0")


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# -- check -----------------------------------------------------------------------


def test_check_prints_signatures(capsys):
    code, out, _ = run(capsys, "check", fixture_path("cnt_dn.lus"))
    assert code == 0
    assert out.strip() == GOLDEN


def test_check_policy_secure(capsys, tmp_path):
    pol = tmp_path / "ok.pol"
    pol.write_text("res = L\nn = L\ncpt = L\nbase = L\n")
    code, out, _ = run(
        capsys, "check", fixture_path("cnt_dn.lus"), "--policy", str(pol)
    )
    assert code == 0 and "Secure" in out


def test_check_policy_violation_exit_code(capsys):
    lus, pol = leaky_pairs()[0]
    code, out, _ = run(capsys, "check", lus, "--policy", pol)
    assert code == 1 and "Violation" in out


def test_all_leaky_policies_rejected(capsys):
    for lus, pol in leaky_pairs():
        code, out, _ = run(capsys, "check", lus, "--policy", pol)
        assert code == 1 and "Violation" in out, lus


def test_check_json(capsys):
    code, out, _ = run(capsys, "check", fixture_path("re_trig.lus"), "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["signatures"]["cnt_dn"] == GOLDEN
    assert "re_trig" in doc["signatures"]


# -- normalize ---------------------------------------------------------------------


def test_normalize_roundtrips(capsys):
    code, out, _ = run(capsys, "normalize", fixture_path("cnt_dn.lus"))
    assert code == 0 and "::" in out and "fby" in out


def test_normalize_fby_init_writes_file(capsys, tmp_path):
    dest = tmp_path / "out.lus"
    code, _, _ = run(
        capsys,
        "normalize",
        fixture_path("cnt_dn.lus"),
        "--emit",
        "fby-init",
        "-o",
        str(dest),
    )
    assert code == 0
    text = dest.read_text()
    assert "xinit1" in text
    from seclus.parser import parse_program

    parsed = parse_program(text)
    assert len(parsed.node("cnt_dn").equations) == 4


# -- interpret ---------------------------------------------------------------------


def test_interpret_oracle(capsys, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text(
        "res,n\ntrue,4\nfalse,4\nfalse,4\nfalse,4\n"
    )
    code, out, _ = run(
        capsys, "interpret", fixture_path("cnt_dn.lus"), "--inputs", str(csv)
    )
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "cpt"
    assert rows[1:] == ["4", "3", "2", "1"]


def test_interpret_steps_zero(capsys, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text("res,n\ntrue,4\n")
    code, out, _ = run(
        capsys,
        "interpret",
        fixture_path("cnt_dn.lus"),
        "--inputs",
        str(csv),
        "--steps",
        "0",
    )
    assert code == 0 and out.strip() == "cpt"


def test_interpret_trace_includes_locals(capsys, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text("i,n\ntrue,2\nfalse,2\n")
    code, out, _ = run(
        capsys,
        "interpret",
        fixture_path("re_trig.lus"),
        "--inputs",
        str(csv),
        "--trace",
    )
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert set(header) >= {"i", "n", "o", "edge", "c", "v"}


def test_interpret_missing_column_is_an_error(capsys, tmp_path):
    csv = tmp_path / "in.csv"
    csv.write_text("res\ntrue\n")
    code, _, err = run(
        capsys, "interpret", fixture_path("cnt_dn.lus"), "--inputs", str(csv)
    )
    assert code == 1 and "error:" in err


# -- verify ------------------------------------------------------------------------


def test_verify_all_passes(capsys):
    code, out, _ = run(
        capsys,
        "verify",
        fixture_path("re_trig.lus"),
        "--trials",
        "5",
        "--ni-trials",
        "10",
        "--horizon",
        "20",
        "--seed",
        "1",
    )
    assert code == 0
    assert "seed: 1" in out
    assert "preservation re_trig: pass" in out
    assert "semantics" in out and "ni" in out


def test_verify_json_stable(capsys):
    argv = [
        "verify",
        fixture_path("cnt_dn.lus"),
        "--what",
        "semantics",
        "--trials",
        "5",
        "--horizon",
        "10",
        "--seed",
        "7",
        "--json",
    ]
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a == b and a[0] == 0
    json.loads(a[1])


def test_verify_ni_rejected_policy_fails(capsys):
    lus, pol = leaky_pairs()[0]
    code, out, _ = run(
        capsys,
        "verify",
        lus,
        "--what",
        "ni",
        "--policy",
        pol,
        "--trials",
        "50",
        "--horizon",
        "20",
        "--seed",
        "0",
    )
    assert code == 1 and "fail" in out and "violation" in out


def test_verify_argument_validation(capsys):
    code, _, err = run(
        capsys, "verify", fixture_path("cnt_dn.lus"), "--horizon", "0"
    )
    assert code == 1 and "horizon" in err


def test_parse_error_diagnostics(capsys, tmp_path):
    bad = tmp_path / "bad.lus"
    bad.write_text("node f(x: int) returns (o: int) let o = ; tel")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 1 and "error:" in err


def test_empty_program(capsys, tmp_path):
    empty = tmp_path / "empty.lus"
    empty.write_text("")
    code, out, _ = run(capsys, "check", str(empty))
    assert code == 0 and out.strip() == ""
    code, _, err = run(capsys, "interpret", str(empty))
    assert code == 1 and "no nodes" in err
