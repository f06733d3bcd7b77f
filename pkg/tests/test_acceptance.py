"""Acceptance criteria at their stated tolerances; one PASS/FAIL line per criterion."""

import pytest

from junctionhj import acceptance

CRITERIA = [
    acceptance.envelope_identities,
    acceptance.representation_equality,
    acceptance.idempotence,
    acceptance.ae_equals_ishii,
    acceptance.coercivity,
    acceptance.vanishing_viscosity,
    acceptance.whole_line,
    acceptance.ldp_identification,
    acceptance.scheme_monotonicity,
]


@pytest.mark.parametrize("check", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, f"{result.name}: measured {result.measured:.6g}, tolerance {result.tolerance:g}, {result.detail}"
    assert result.within_budget, f"{result.name}: {result.runtime:.2f}s exceeds {result.budget:g}s"
