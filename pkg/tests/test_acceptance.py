"""The twelve acceptance criteria; each prints one PASS/FAIL line."""

import time

import pytest

from realgit.verify import CRITERIA, criterion_12

RESULTS: dict[int, tuple[bool, float]] = {}
TIME_LIMITS = {1: 1.0, 6: 30.0}


def _run(number, fn):
    start = time.perf_counter()
    res = fn(0)
    elapsed = time.perf_counter() - start
    ok = res.passed and elapsed < TIME_LIMITS.get(number, float("inf"))
    RESULTS[number] = (ok, elapsed)
    print(f"criterion {number:2d} {res.name}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s)")
    return res, elapsed


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res, elapsed = _run(number, CRITERIA[number])
    assert res.passed, res.values
    assert elapsed < TIME_LIMITS.get(number, float("inf"))


def test_criterion_12_determinism():
    res, _elapsed = _run(12, criterion_12)
    assert res.passed, res.values
