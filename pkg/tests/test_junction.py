import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junctionhj.errors import ArityMismatch, ConfigError
from junctionhj.hamiltonian import Quadratic, random_hamiltonian
from junctionhj.junction import (
    Affine,
    FluxLimited,
    Kirchhoff,
    Neumann,
    Tabulated,
    evaluate_L,
    from_dict,
    validate_assumptions_L,
)

vectors = st.lists(st.floats(-50, 50), min_size=3, max_size=3)


def test_evaluate_examples():
    assert evaluate_L(Kirchhoff((1.0, 1.0)), 123.0, (2.0, 3.0)) == -5.0
    H = Quadratic(1.0)
    assert evaluate_L(FluxLimited(1.0, (H, H)), -2.0, (-1.0, 0.0)) == 3.0
    assert evaluate_L(Neumann(), 0.0, (-4.0,)) == 4.0


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        Kirchhoff((1.0, 1.0))(0.0, (1.0,))


def test_validator_examples():
    assert validate_assumptions_L(Kirchhoff((1.0, 1.0))).ok
    rep = validate_assumptions_L(Affine((-1.0, 1.0)))
    assert not rep["L2"].passed
    hams = (Quadratic(1.0), Quadratic(2.0, 1.0, -1.0))
    assert validate_assumptions_L(FluxLimited(0.0, hams))["L4"].passed
    assert validate_assumptions_L(FluxLimited(0.0, hams)).ok


def test_validator_catches_bounded_table():
    ax = (-1.0, 1.0)
    T = Tabulated((ax, ax), np.array([[1.0, 0.0], [0.0, -1.0]]))
    rep = validate_assumptions_L(T)
    assert not rep["L4"].passed and not rep["L5"].passed


def test_validator_catches_non_strict():
    # a constant L is non-increasing but never strictly decreasing
    rep = validate_assumptions_L(Affine((0.0, 0.0)))
    assert not rep["L3"].passed


def test_tabulated_interpolates_and_clamps():
    T = Tabulated(((0.0, 1.0), (0.0, 2.0)), np.array([[0.0, -2.0], [-1.0, -3.0]]))
    assert T(0.5, (1.0,)) == pytest.approx(-1.5)  # mean of the four corners
    assert T(5.0, (9.0,)) == pytest.approx(-3.0)
    assert not T.in_hull(5.0, (9.0,))
    assert T.in_hull(0.5, (1.0,))


@settings(max_examples=80, deadline=None)
@given(vectors, vectors, st.lists(st.floats(0.1, 5.0), min_size=2, max_size=2), st.floats(-5, 5))
def test_linear_families_are_exactly_affine(p, q, w, off):
    p, q = np.array(p), np.array(q)
    for L in (Kirchhoff(tuple(w)), Affine((-0.5, -w[0], -w[1]), off)):
        d1 = L(p[0] + q[0], p[1:] + q[1:]) - L(p[0], p[1:])
        d2 = L(q[0], q[1:]) - L(0.0, (0.0, 0.0))
        assert d1 == pytest.approx(d2, abs=1e-12 * (1 + np.abs(p).sum() + np.abs(q).sum()) * 10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(-10, 10), st.floats(-10, 10), vectors)
def test_flux_limited_shift_in_p0(seed, a, b, p):
    rng = np.random.default_rng(seed)
    hams = tuple(random_hamiltonian(rng) for _ in range(3))
    L = FluxLimited(max(H.minimum for H in hams), hams)
    assert L(a, p) + a == pytest.approx(L(b, p) + b, abs=1e-9)


def test_from_dict():
    assert from_dict({"family": "kirchhoff", "beta": [1, 2]}) == Kirchhoff((1.0, 2.0))
    with pytest.raises(ConfigError, match=r"junction\.beta"):
        from_dict({"family": "kirchhoff"})
    fl = from_dict({"family": "flux_limited", "A": 1, "hamiltonians": [{"family": "quadratic", "a": 1}]})
    assert fl(0.0, (-3.0,)) == 9.0
    L = from_dict(Affine((-1.0, -2.0), 3.0).to_dict())
    assert L == Affine((-1.0, -2.0), 3.0)
