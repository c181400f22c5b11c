"""The twelve acceptance criteria at their fixed tolerances, seed 0, full mode.

The suite runs once per session; each test asserts one criterion and prints
its report line. The lines are repeated in the terminal summary.
"""

import pytest

from sqbsde.acceptance import CRITERIA, AcceptanceConfig, run_acceptance_suite


@pytest.fixture(scope="module")
def report(request):
    rep = run_acceptance_suite(AcceptanceConfig(seed=0))
    request.config._acceptance_lines = [c.line() for c in rep.criteria]
    return {c.number: c for c in rep.criteria}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[f"C{n}-{CRITERIA[n][0].replace(' ', '-')}"
                                                           for n in sorted(CRITERIA)])
def test_criterion(report, number):
    crit = report[number]
    print(crit.line())
    assert crit.passed, crit.line()
