import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junctionhj.errors import BisectionBudgetExceeded, ConfigError, LevelBelowMinimum
from junctionhj._bisect import bisect_boundary
from junctionhj.hamiltonian import (
    AbsoluteValue,
    ParamPoint,
    PiecewiseLinear,
    Quadratic,
    Trapezoid,
    evaluate,
    from_dict,
    minimal_minimizer,
    monotone_part,
    pi_plus,
    pi_plus_bisect,
    pi_plus_hat,
    random_hamiltonian,
    validate,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def draw(seed):
    return random_hamiltonian(np.random.default_rng(seed))


# -- worked values -------------------------------------------------------


@pytest.mark.parametrize(
    "H, p, expected",
    [
        (Quadratic(1.0), 3.0, 9.0),
        (Trapezoid(1.0, 1.0, 0.0), 0.5, 0.0),
        (PiecewiseLinear(((-1, 2), (0, 0), (1, 2))), 0.5, 1.0),
        (AbsoluteValue(2.0, 1.0, -1.0), -1.0, 3.0),
    ],
)
def test_evaluate(H, p, expected):
    assert evaluate(H, p) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "H, expected",
    [(Quadratic(1.0), 0.0), (Quadratic(2.0, -1.0, 3.0), -1.0), (Trapezoid(1.0, 1.0, 0.0), -1.0)],
)
def test_minimal_minimizer(H, expected):
    assert minimal_minimizer(H) == expected


def test_piecewise_flat_valley_takes_first_breakpoint():
    H = PiecewiseLinear(((-2, 1), (-1, 0), (0, 0), (1, 0), (2, 1)))
    assert H.minimal_minimizer == -1.0


def test_monotone_parts():
    H = Quadratic(1.0)
    assert monotone_part(H, "-", 2.0) == 0.0
    assert monotone_part(H, "-", -2.0) == 4.0
    assert monotone_part(H, "+", -3.0) == 0.0


def test_inverses_closed_form():
    assert pi_plus(Quadratic(1.0), 4.0) == 2.0 == pi_plus_hat(Quadratic(1.0), 4.0)
    T = Trapezoid(1.0, 1.0, 0.0)
    assert pi_plus(T, 0.0) == -1.0
    assert pi_plus_hat(T, 0.0) == 1.0
    H = Quadratic(1.0, -1.0, -1.0)
    assert pi_plus(H, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert pi_plus_bisect(H, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_level_below_minimum_raises():
    with pytest.raises(LevelBelowMinimum):
        Quadratic(1.0, 0.0, 2.0).pi_plus(1.0)
    # within the level tolerance the level snaps to the minimum
    assert Quadratic(1.0, 0.0, 2.0).pi_plus(2.0 - 1e-13) == 0.0


def test_validate_examples():
    assert validate(Quadratic(1.0)).ok
    bump = validate(PiecewiseLinear(((-1, 0), (0, 1), (1, 0)), 1.0, 1.0))
    assert not bump["quasi_convex"].passed
    falling = validate(PiecewiseLinear(((-1, 1), (0, 0), (1, 1)), 1.0, -1.0))
    assert not falling["coercive"].passed


def test_param_point_rejects_mismatched_dims():
    with pytest.raises(ValueError):
        ParamPoint(0.0, (1.0,), (1.0, 2.0))


def test_from_dict_roundtrip_and_errors():
    for H in (Quadratic(2.0, 1.0, -1.0), AbsoluteValue(1.0), Trapezoid(0.5, 2.0, 1.0, 0.3),
              PiecewiseLinear(((-1, 1), (0, 0), (2, 3)), 2.0, 0.5)):
        assert from_dict(H.to_dict()) == H
    with pytest.raises(ConfigError, match=r"h\.a"):
        from_dict({"family": "quadratic"}, "h")
    with pytest.raises(ConfigError, match="unknown family"):
        from_dict({"family": "cubic"})


def test_bisection_budget():
    with pytest.raises(BisectionBudgetExceeded):
        bisect_boundary(lambda x: x >= 0.3, 0.0, 1.0, max_iter=5)


# -- properties --------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_envelope_identity(seed):
    H = draw(seed)
    ps = H.minimal_minimizer + np.linspace(-10, 10, 401)
    assert np.array_equal(np.maximum(H.lower(ps), H.upper(ps)), H(ps))


@settings(max_examples=150, deadline=None)
@given(seeds, st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_pi_plus_inverts_and_is_increasing(seed, d1, d2):
    H = draw(seed)
    lo, hi = sorted((H.minimum + d1, H.minimum + d2))
    assert abs(H(H.pi_plus(lo)) - lo) <= 1e-9
    assert abs(H(H.pi_plus_hat(hi)) - hi) <= 1e-9
    if hi > lo + 1e-9:
        assert H.pi_plus(hi) > H.pi_plus(lo)


@settings(max_examples=100, deadline=None)
@given(seeds, st.floats(0.0, 10.0))
def test_inverses_bracket_slopes(seed, offset):
    H = draw(seed)
    p = H.minimal_minimizer + offset
    lam = float(H(p))
    assert H.pi_plus(lam) <= p + 1e-9
    assert p <= H.pi_plus_hat(lam) + 1e-9


@settings(max_examples=100, deadline=None)
@given(seeds, st.floats(1e-3, 10.0))
def test_closed_forms_match_bisection_oracle(seed, d):
    H = draw(seed)
    lam = H.minimum + d
    assert H.pi_plus(lam) == pytest.approx(pi_plus_bisect(H, lam), abs=1e-7)
    assert H.pi_plus_hat(lam) == pytest.approx(pi_plus_bisect(H, lam, hat=True), abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_closed_forms_match_oracle_at_minimum(seed):
    # a smooth bottom is flat to round-off over a slope width ~1e-6, so compare levels there
    H = draw(seed)
    lam = H.minimum
    for hat in (False, True):
        closed = H.pi_plus_hat(lam) if hat else H.pi_plus(lam)
        assert abs(H(closed) - H(pi_plus_bisect(H, lam, hat=hat))) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_minimal_minimizer_is_global(seed):
    H = draw(seed)
    rng = np.random.default_rng(seed)
    ps = H.minimal_minimizer + rng.uniform(-20, 20, 1000)
    assert np.all(H(ps) >= H(H.minimal_minimizer) - 1e-12)
    assert H.pi_plus(H.minimum) == pytest.approx(H.minimal_minimizer, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_random_hamiltonians_validate(seed):
    assert validate(draw(seed)).ok


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(-5, 5))
def test_reflection(seed, p):
    H = draw(seed)
    assert H.reflected()(p) == pytest.approx(H(-p), abs=1e-12)
    assert H.level_slope_decreasing(H.minimum + 1.0) <= H.minimal_minimizer + 1e-12 or math.isclose(
        H.level_slope_decreasing(H.minimum + 1.0), H.minimal_minimizer
    )
