"""Every acceptance criterion at its stated tolerance, fast tier, seed 0.

The suite is run once per module; each criterion then gets its own test so
that a failure names the criterion.  A pass/fail line per criterion is
printed and repeated in the terminal summary.
"""

from __future__ import annotations

import pytest

from idconv.acceptance import CRITERIA, RUNTIME_BUDGETS, run_all, run_criterion, strip_timing

from conftest import ACCEPTANCE_LINES

SEED = 0


@pytest.fixture(scope="module")
def results():
    out = {}
    for k in CRITERIA:
        res = run_criterion(k, seed=SEED, workers=1, tier="fast")
        print(res.line())
        ACCEPTANCE_LINES.append(res.line())
        out[k] = res
    return out


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(results, k):
    res = results[k]
    assert res.passed, res.line()


@pytest.mark.parametrize("k", sorted(RUNTIME_BUDGETS))
def test_runtime_budget(results, k):
    assert results[k].seconds < RUNTIME_BUDGETS[k], results[k].line()


def test_report_lists_every_criterion(results):
    report = {str(k): r.to_json() for k, r in results.items()}
    assert set(report) == {str(k) for k in range(1, 11)}


@pytest.mark.slow
def test_verify_report_independent_of_workers(results):
    one = {"seed": SEED, "tier": "fast",
           "criteria": {str(k): r.to_json() for k, r in results.items()},
           "all_passed": all(r.passed for r in results.values())}
    eight = run_all(seed=SEED, workers=8, tier="fast")
    assert strip_timing(eight) == strip_timing({**one, "workers": 1})
