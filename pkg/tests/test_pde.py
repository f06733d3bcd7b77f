import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junctionhj.acceptance import hopf_lax_abs
from junctionhj.errors import CFLViolation, GridMismatch, NonpositiveViscosity
from junctionhj.hamiltonian import Quadratic, random_hamiltonian
from junctionhj.limiter import compute_A0
from junctionhj.pde import (
    JunctionGrid,
    flux_limited_step,
    fold_line,
    fold_line_problem,
    godunov_flux,
    line_grid,
    solve_flux_limited,
    solve_viscous_kirchhoff,
    unfold,
    vvl_sweep,
    windowed_sup_error,
)

H = Quadratic(1.0)


def test_grid_layout_roundtrip():
    g = JunctionGrid(3, 0.5, 4)
    assert g.n_dof == 10
    v = np.arange(10.0)
    U = g.to_branches(v)
    assert np.all(U[:, 0] == 0.0)
    assert np.array_equal(g.from_branches(U), v)
    with pytest.raises(GridMismatch):
        g.to_branches(np.zeros(9))


def test_godunov_flux_is_consistent():
    ps = np.linspace(-3, 3, 13)
    assert np.allclose(godunov_flux(H, ps, ps), H(ps))


def test_single_step_travelling_solution():
    g = JunctionGrid(1, 0.1, 11)
    u0 = g.sample(lambda i, x: x)
    sol = solve_flux_limited((H,), 1.0, u0, 0.05, g, save_every=1)
    dt = sol.scheme_meta["dt"]
    first = sol.values[1]
    assert first[0] == pytest.approx(-dt, abs=1e-15)
    assert np.allclose(first, u0 - dt, atol=1e-14)
    assert np.allclose(sol.final, u0 - 0.05, atol=1e-12)


@pytest.mark.filterwarnings("ignore:flux limiter:RuntimeWarning")
def test_constants_are_stationary():
    g = JunctionGrid(3, 0.1, 8)
    u0 = np.full(g.n_dof, 2.5)
    for A in (-1.0, 0.0):
        sol = solve_flux_limited((H, H, H), A, u0, 0.3, g)
        assert np.array_equal(sol.final, u0)


def test_limiter_below_A0_is_clamped():
    g = JunctionGrid(2, 0.1, 6)
    with pytest.warns(RuntimeWarning):
        sol = solve_flux_limited((H, H), -1.0, np.zeros(g.n_dof), 0.1, g)
    assert sol.scheme_meta["A"] == 0.0


def test_whole_line_hopf_lax():
    dx, M = 0.01, 201
    grid, u0 = fold_line(np.abs, dx, M)
    sol = solve_flux_limited((H.reflected(), H), 0.0, u0, 0.5, grid)
    y = line_grid(dx, M)
    mask = np.abs(y) <= 1.0
    err = np.max(np.abs(unfold(grid, sol.final)[mask] - hopf_lax_abs(y[mask], 0.5)))
    assert err <= 2 * dx


def test_viscous_linear_profile_is_exact():
    dx, M = 0.05, 41
    prob = fold_line_problem(lambda y: y, H, H, dx, M)
    sol = solve_viscous_kirchhoff(prob.hamiltonians, (1.0, 1.0), 0.1, prob.u0, 0.4, prob.grid)
    assert np.max(np.abs(unfold(prob.grid, sol.final) - (line_grid(dx, M) - 0.4))) <= 1e-10


def test_viscous_T0_and_bad_eps():
    g = JunctionGrid(2, 0.1, 6)
    u0 = g.sample(lambda i, x: x**2)
    assert np.array_equal(solve_viscous_kirchhoff((H, H), (1, 1), 0.1, u0, 0.0, g).final, u0)
    with pytest.raises(NonpositiveViscosity):
        solve_viscous_kirchhoff((H, H), (1, 1), 0.0, u0, 0.1, g)


def test_viscous_maximum_principle():
    g = JunctionGrid(3, 0.05, 21)
    rng = np.random.default_rng(7)
    u0 = g.sample(lambda i, x: np.sin((i + 1) * x) + 0.3 * x)
    hams = tuple(random_hamiltonian(rng, ("quadratic",)) for _ in range(3))
    T = 0.2
    sol = solve_viscous_kirchhoff(hams, (1.0, 2.0, 0.5), 0.05, u0, T, g, save_every=5)
    lo, hi = sol.scheme_meta["slope_budget"]
    C = max(float(np.max(np.abs(Hk(np.linspace(lo, hi, 201))))) for Hk in hams)
    assert np.all(sol.values >= u0.min() - C * T - 1e-12)
    assert np.all(sol.values <= u0.max() + C * T + 1e-12)


def test_fold_definition():
    dx, M = 0.1, 6
    grid, u0 = fold_line(lambda y: y, dx, M)
    U = grid.to_branches(u0)
    assert np.allclose(U[0], -np.arange(M) * dx)
    grid, u0 = fold_line(np.cos, dx, M)
    U = grid.to_branches(u0)
    assert np.array_equal(U[0], U[1])
    assert np.allclose(unfold(grid, u0), np.cos(line_grid(dx, M)))


def test_refinement_halves_the_gap():
    def run(dx):
        grid, u0 = fold_line(np.abs, dx, int(round(1.0 / dx)) + 1)
        sol = solve_flux_limited((H.reflected(), H), 0.0, u0, 0.25, grid)
        return line_grid(dx, grid.M), unfold(grid, sol.final)

    y1, v1 = run(0.02)
    y2, v2 = run(0.01)
    y3, v3 = run(0.005)
    d12 = np.max(np.abs(v1 - v2[::2]))
    d23 = np.max(np.abs(v2 - v3[::2]))
    assert d12 / d23 >= 1.5


def test_truncation_order_on_quadratic_profile():
    # u = x^2 on a single branch with H = p^2: u_t = -4x^2 initially
    errs = []
    for dx in (0.04, 0.02, 0.01):
        g = JunctionGrid(1, dx, int(round(1.0 / dx)) + 1)
        U = g.to_branches(g.sample(lambda i, x: x**2))
        dt = 1e-6
        new = flux_limited_step((H,), 0.0, U, dx, dt, "frozen")
        rate = (new - U)[0, 1:-1] / dt
        x = g.x[1:-1]
        mask = x >= 0.25
        errs.append(np.max(np.abs(rate[mask] + 4 * x[mask] ** 2)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 0.9)


def test_discrete_steady_state_is_fixed():
    # H(p) = |p| - 1 with slopes +-1 is an exact steady state, vertex limited at A = 0
    from junctionhj.hamiltonian import AbsoluteValue

    Habs = AbsoluteValue(1.0, 0.0, -1.0)
    g = JunctionGrid(2, 0.1, 11)
    U = g.to_branches(g.sample(lambda i, x: x))
    new = flux_limited_step((Habs, Habs), 0.0, U, 0.1, 0.05, "extrapolation")
    assert np.max(np.abs(new - U)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_one_step_monotone(seed):
    rng = np.random.default_rng(seed)
    g = JunctionGrid(3, 0.1, 5)
    hams = tuple(random_hamiltonian(rng) for _ in range(3))
    A = compute_A0(hams) + float(rng.uniform(0, 2))
    U = g.to_branches(rng.uniform(-1, 1, g.n_dof))
    V = U + g.to_branches(rng.uniform(0, 0.5, g.n_dof))
    s = np.concatenate([np.diff(U, axis=1).ravel(), np.diff(V, axis=1).ravel()]) / g.dx
    dt = 0.9 * g.dx / max(Hk.lipschitz(s.min(), s.max()) for Hk in hams)
    assert np.all(flux_limited_step(hams, A, U, g.dx, dt, "frozen") <= flux_limited_step(hams, A, V, g.dx, dt, "frozen"))


def test_cfl_violation_is_raised(monkeypatch):
    import junctionhj.pde as pde

    monkeypatch.setattr(pde, "_slope_budget", lambda *a, **k: (0.5, 0.6))
    g = JunctionGrid(2, 0.1, 11)
    u0 = g.sample(lambda i, x: np.where(x < 0.5, 0.5 * x, 2.0 * x))
    with pytest.raises(CFLViolation):
        solve_flux_limited((H, H), 0.0, u0, 0.5, g)


def test_vvl_sweep_table():
    g = JunctionGrid(2, 0.02, 51)
    u0 = g.sample(lambda i, x: x)
    rows = vvl_sweep((H, H), (1.0, 1.0), [0.2, 0.1, 0.05], u0, 0.25, g)
    errs = [r["sup_error"] for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert set(rows[0]) == {"epsilon", "sup_error", "dx", "dt", "A_e"}
    assert len(vvl_sweep((H, H), (1.0, 1.0), [0.1], u0, 0.1, g)) == 1
    with pytest.raises(ValueError):
        vvl_sweep((H, H), (1.0, 1.0), [0.1, 0.2], u0, 0.1, g)


def test_vvl_toward_drift_pair():
    H1t, H2t = Quadratic(0.5, 1.0, -0.5), Quadratic(0.5, -1.0, -0.5)
    prob = fold_line_problem(np.abs, H1t, H2t, 0.02, 76)
    rows = vvl_sweep(prob.hamiltonians, (1.0, 1.0), [0.2, 0.1, 0.05], prob.u0, 0.5, prob.grid)
    assert rows[0]["A_e"] == pytest.approx(0.0, abs=1e-10)
    errs = [r["sup_error"] for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_windowed_error_ignores_far_field():
    g = JunctionGrid(2, 0.1, 11)
    a = np.zeros(g.n_dof)
    b = g.from_branches(np.tile(np.r_[np.zeros(10), 5.0], (2, 1)))
    assert windowed_sup_error(g, a, b) == 0.0


def test_csv_rows_cover_every_node():
    g = JunctionGrid(2, 0.1, 4)
    sol = solve_flux_limited((H, H), 0.0, g.sample(lambda i, x: x), 0.0, g)
    rows = list(sol.csv_rows())
    assert len(rows) == g.n_dof
    assert rows[0] == (0.0, 0, 0, 0.0, 0.0)
