"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import pytest

from itodilate.acceptance import DEFAULT_SEED, criterion_9, run_criterion
from itodilate.cli import execute

_results = {}
_determinism = None


def _result(number):
    if number not in _results:
        _results[number] = run_criterion(number, DEFAULT_SEED)
    return _results[number]


@pytest.mark.parametrize("number", range(1, 9))
def test_criterion(number):
    result = _result(number)
    print(result.line(), result.details)
    assert result.passed, result.details


def test_criterion_9_determinism():
    first = {n: _result(n) for n in range(1, 9)}
    global _determinism
    result = criterion_9(first, DEFAULT_SEED)
    _determinism = result
    print(result.line(), result.details)
    assert result.passed, result.details


def test_selftest_command():
    code, text = execute(["selftest"])
    print(text.splitlines()[-1] if text else "")
    assert code == 0
