import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from crfund import crmodels, symcas as S
from crfund.cli import run

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("CRFUND_REGEN") == "1"

CASES = {
    "roots_g2": ["roots", "--type", "G2"],
    "grade_g2": ["grade", "--type", "G", "--rank", "2", "--sigma1", "1"],
    "bigrade_c3": ["bigrade", "--type", "C3", "--sigma1", "1", "--sigma2", "3"],
    "models_c4": ["models", "--type", "C4"],
    "harmonic_g2": ["harmonic", "--type", "G2", "--sigma1", "1", "--sigma2", "2", "--oracle"],
    "table3_a3": ["table3", "--type", "A3"],
    "oracle_a3": ["oracle", "--type", "A3", "--sigma1", "1,3"],
    "verify_sp4": ["verify", "--model", "sp4"],
    "invariant_g2": ["invariant", "--model", "g2"],
    "invariant_sp4_poly": ["invariant", "--model", "sp4", "--F", "t1*t2"],
    "invariant_sp6_zb1": ["invariant", "--model", "sp6", "--F", "zb1", "--selection", "R-[11^1][^1_2]"],
    "flatness_sp4": ["flatness", "--model", "sp4", "--F", "0", "--expect", "flat"],
}

EXPECTED_EXIT = {"invariant_g2": 1}


def _same(a, b) -> bool:
    """JSON trees equal, with expression strings compared semantically."""
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_same(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, str) and isinstance(b, str) and a != b:
        try:
            return (S.parse(a) - S.parse(b)).is_zero()
        except S.SymcasError:
            return False
    return a == b


@pytest.fixture(scope="module", autouse=True)
def _radicals():
    # expression strings may mention model radicals
    for name in crmodels.BUILTIN:
        crmodels.load_model(name)


@pytest.mark.parametrize("case", sorted(CASES))
def test_golden(case):
    report, code, text = run(CASES[case] + ["--json"])
    assert code == EXPECTED_EXIT.get(case, 0)
    path = GOLDEN / f"{case}.json"
    if REGEN:
        path.write_text(text + "\n")
    want = json.loads(path.read_text())
    got = json.loads(text)
    assert got["command"] == want["command"]
    assert got["inputs"] == want["inputs"]
    assert [(c["name"], c["status"]) for c in got["checks"]] == [(c["name"], c["status"]) for c in want["checks"]]
    assert _same(got["results"], want["results"])


def test_every_verb_has_a_golden():
    from crfund.cli import VERBS
    assert {argv[0] for argv in CASES.values()} == set(VERBS)


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "crfund", *argv], capture_output=True, text=True)


@pytest.mark.parametrize("argv", [["verify", "--model", "sp4"], ["invariant", "--model", "sp4", "--F", "t1*t2"],
                                  ["harmonic", "--type", "B3", "--sigma1", "2", "--sigma2", "1"]])
def test_json_is_byte_identical_across_runs(argv):
    a, b = _cli(*argv, "--json"), _cli(*argv, "--json")
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_g2_printed_pde_check_fails():
    report, code, _ = run(["verify", "--model", "g2"])
    assert code == 1
    failed = [c["name"] for c in report.checks if c["status"] == "fail"]
    assert len(failed) == 1 and failed[0].startswith("printed PDE")


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["grade", "--type", "G"], ["grade", "--type", "G2"],
    ["grade", "--type", "A3", "--sigma1", "x"], ["grade", "--type", "A3", "--sigma1", "9"],
    ["verify", "--model", "nonexistent"], ["flatness", "--model", "sp4"],
    ["invariant", "--model", "sp4", "--F", "t1+"],
])
def test_usage_errors_exit_2(argv):
    _, code, text = run(argv)
    assert code == 2
    assert "error" in text


def test_failed_check_exits_1():
    _, code, text = run(["models", "--type", "E7"])
    assert code == 1
    assert "[FAIL] E7" in text


def test_excluded_locus_reported():
    report, code, _ = run(["verify", "--model", "g2"])
    assert report.results["excluded_locus"] == ["zb1*z1 - 1", "zb2*z1 + z2", "z1", "zb1"]


def test_flatness_expectation_mismatch():
    _, code, _ = run(["flatness", "--model", "sp4", "--F", "t1", "--expect", "flat"])
    assert code == 1


def test_console_script_entry():
    r = _cli("grade", "--type", "G", "--rank", "2", "--sigma1", "1", "--json")
    assert json.loads(r.stdout)["results"]["negative_dims"] == [2, 1, 2]
