"""Acceptance criteria 1-13, one printed pass/fail line each.

Run standalone with ``python tests/test_acceptance.py`` or through pytest.
"""

import json
import subprocess
import sys

import pytest

from bscoulomb.verify import CHECKS, run_all


def line(record) -> str:
    status = "PASS" if record.ok else "FAIL"
    note = " (documented discrepancy)" if record.status == "discrepancy" else ""
    return f"criterion {record.id:>2}: {status}{note}  {record.name}  {record.detail}".rstrip()


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__ for c in CHECKS])
def test_criterion(check, capsys):
    record = run_all((check,))[0]
    with capsys.disabled():
        print("\n" + line(record))
    assert record.ok, record.detail


def _verify_subprocess():
    return subprocess.Popen([sys.executable, "-m", "bscoulomb.cli", "verify"],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE)


def test_concurrent_verify_runs_are_identical():
    procs = [_verify_subprocess() for _ in range(2)]
    results = [p.communicate(timeout=600) for p in procs]
    assert [p.returncode for p in procs] == [0, 0]
    assert results[0][0] == results[1][0]
    doc = json.loads(results[0][0])
    assert [r["id"] for r in doc["data"]] == list(range(1, 14))


@pytest.mark.parametrize("args, code", [
    (["eigs", "--bogus"], 1),
    (["eigs", "--abs-e", "-1"], 1),
    (["eigs", "--n", "64", "--tol", "1e-300"], 2),
    (["eigs", "--n", "32"], 0),
])
def test_subprocess_exit_codes(args, code):
    proc = subprocess.run([sys.executable, "-m", "bscoulomb.cli", *args], capture_output=True)
    assert proc.returncode == code


if __name__ == "__main__":
    records = run_all()
    for r in records:
        print(line(r))
    sys.exit(0 if all(r.ok for r in records) else 1)
