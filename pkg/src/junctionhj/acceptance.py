"""Acceptance checks shared by the test suite and ``junctionhj self-test``.

Each check returns a :class:`CriterionResult` with the measured quantity,
the tolerance it is held to and the wall time it took.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .hamiltonian import Quadratic, random_hamiltonian
from .junction import Affine, FluxLimited, Kirchhoff
from .ldp import QuadraticSideData, hopf_cole_pipeline
from .limiter import (
    ParametricHamiltonian,
    check_representations,
    compute_A0,
    compute_AL,
    compute_Ae,
    sphere_grid,
    sweep_limiter,
    verify_Ae_equals_AIminus,
)
from .pde import (
    JunctionGrid,
    flux_limited_step,
    fold_line,
    line_grid,
    solve_flux_limited,
    unfold,
    vvl_sweep,
)

DEFAULT_SEED = 42


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: float
    tolerance: float
    runtime: float
    budget: float
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.runtime <= self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (
            f"[{status}] {self.number}. {self.name}: measured={self.measured:.3e} "
            f"tol={self.tolerance:.1e} time={self.runtime:.2f}s (budget {self.budget:g}s)"
        )


def _timed(number: int, name: str, budget: float, body: Callable[[], tuple[bool, float, float, dict]]) -> CriterionResult:
    start = time.perf_counter()
    passed, measured, tol, detail = body()
    return CriterionResult(number, name, passed, measured, tol, time.perf_counter() - start, budget, detail)


# -- 1 ------------------------------------------------------------------


def envelope_identities(seed: int = DEFAULT_SEED, n_hams: int = 500) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        env_err = inv_err = 0.0
        for _ in range(n_hams):
            H = random_hamiltonian(rng)
            center = H.minimal_minimizer
            ps = center + rng.uniform(-10.0, 10.0, 1000)
            vals = H(ps)
            env_err = max(env_err, float(np.max(np.abs(np.maximum(H.lower(ps), H.upper(ps)) - vals))))
            levels = H.minimum + np.concatenate([[0.0], rng.uniform(0.0, 10.0, 99)])
            for lam in levels:
                inv_err = max(inv_err, abs(float(H(H.pi_plus(lam))) - lam))
        worst = max(env_err, inv_err)
        return worst <= 1e-9, worst, 1e-9, {"envelope_error": env_err, "inverse_error": inv_err}

    return _timed(1, "envelope identities", 5.0, body)


# -- 2 ------------------------------------------------------------------


def _random_linear_L(rng, n: int):
    if rng.random() < 0.5:
        return Kirchhoff(tuple(rng.uniform(0.2, 3.0, n)))
    gamma = [float(-rng.uniform(0.0, 2.0))] + list(-rng.uniform(0.2, 3.0, n))
    return Affine(tuple(gamma), float(rng.uniform(-5.0, 5.0)))


def representation_equality(seed: int = DEFAULT_SEED, n_cases: int = 300) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        n_root = 0
        failures = []
        for k in range(n_cases):
            n = int(rng.integers(1, 4))
            hams = [random_hamiltonian(rng) for _ in range(n)]
            L = _random_linear_L(rng, n)
            rep = compute_AL(L, hams)
            chk = check_representations(rep, L, hams, tol=1e-8)
            if chk.skipped:
                continue
            n_root += 1
            gap = max(chk.sup_gap, chk.inf_gap, -chk.view_def, chk.view_def_plus, 0.0)
            worst = max(worst, gap)
            if not chk.passed:
                failures.append(k)
        return not failures, worst, 1e-8, {"root_cases": n_root, "A0_cases": n_cases - n_root, "failures": failures}

    return _timed(2, "representation equality", 10.0, body)


# -- 3 ------------------------------------------------------------------


def idempotence(seed: int = DEFAULT_SEED, n_cases: int = 100) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(n_cases):
            n = int(rng.integers(1, 5))
            hams = tuple(random_hamiltonian(rng, ("quadratic",)) for _ in range(n))
            A0 = compute_A0(hams)
            B = A0 if k % 10 == 0 else A0 + float(rng.uniform(0.0, 5.0))
            AL = compute_AL(FluxLimited(B, hams), hams).AL
            worst = max(worst, abs(AL - B))
        return worst <= 1e-8, worst, 1e-8, {}

    return _timed(3, "idempotence of flux-limited conditions", 5.0, body)


# -- 4 ------------------------------------------------------------------

_SHIFTABLE = ("quadratic", "absolute", "trapezoid")


def _forced_pair(rng, tag: str):
    """Line-coordinate pair whose folded configuration lands in ``tag``."""
    h1 = random_hamiltonian(rng, _SHIFTABLE)
    h2 = random_hamiltonian(rng, _SHIFTABLE)
    # folded minimizers are -(c1 + w1) for branch 1 and c2 - w2 for branch 2
    w1 = getattr(h1, "w", 0.0)
    w2 = getattr(h2, "w", 0.0)
    gap = float(rng.uniform(0.5, 2.0))
    if tag == "pi_sum_nonneg":
        c1 = -w1 + float(rng.uniform(-2, 2))
        c2 = w2 + (c1 + w1) + gap
        m1, m2 = h1.m, h2.m
    else:
        c1 = -w1 + gap
        c2 = w2 - gap
        lift = float(rng.uniform(5.0, 8.0))
        m1, m2 = {"case1": (0.0, lift), "case3": (lift, 0.0), "case2": (0.0, 0.0)}[tag]
    return dataclasses.replace(h1, c=c1, m=m1), dataclasses.replace(h2, c=c2, m=m2)


def ae_equals_ishii(seed: int = DEFAULT_SEED, n_cases: int = 200, forced_each: int = 10) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        pairs = []
        for tag in ("case1", "case2", "case3", "pi_sum_nonneg"):
            pairs += [_forced_pair(rng, tag) for _ in range(forced_each)]
        while len(pairs) < n_cases:
            pairs.append((random_hamiltonian(rng), random_hamiltonian(rng)))
        worst = 0.0
        tags: dict[str, int] = {}
        passed = 0
        for h1, h2 in pairs:
            rep = verify_Ae_equals_AIminus(h1, h2, tol=1e-8)
            tags[rep.case] = tags.get(rep.case, 0) + 1
            worst = max(worst, rep.difference)
            passed += rep.passed
        covered = all(tags.get(t, 0) > 0 for t in ("case1", "case2", "case3", "pi_sum_nonneg"))
        return passed == len(pairs) and covered, worst, 1e-8, {"equalities": f"{passed}/{len(pairs)}", "cases": tags}

    return _timed(4, "Kirchhoff limiter equals maximal Ishii limiter", 10.0, body)


# -- 5 ------------------------------------------------------------------


def coercivity(radii=(0.0, 1.0, 2.0, 4.0, 8.0)) -> CriterionResult:
    def body():
        family = [
            ParametricHamiltonian("quadratic", {"a": 1.0, "c": {"1": 1.0, "|p'|": 0.1}, "m": {"1": -1.0, "|p'|^2": 0.5}}),
            ParametricHamiltonian("quadratic", {"a": 2.0, "c": -0.5, "m": {"|p'|^2": 0.25, "|p'|": 0.5}}),
        ]
        res = sweep_limiter(Kirchhoff((1.0, 2.0)), family, sphere_grid(radii, dim=2, n_directions=16), threads=1)
        mins = [m for _, m in res.coercivity]
        increasing = all(b > a for a, b in zip(mins, mins[1:]))
        margin = mins[-1] - (mins[0] + 10.0)
        return increasing and margin > 0, margin, 0.0, {"sphere_minima": mins}

    return _timed(5, "coercivity of the effective limiter", 5.0, body)


# -- 6 ------------------------------------------------------------------


def vanishing_viscosity(dx: float = 0.01, length: float = 2.0, T: float = 0.5) -> CriterionResult:
    def body():
        H = Quadratic(1.0)
        grid = JunctionGrid(2, dx, int(round(length / dx)) + 1)
        u0 = grid.sample(lambda i, x: x)
        rows = vvl_sweep((H, H), (1.0, 1.0), [0.2, 0.1, 0.05, 0.025], u0, T, grid)
        errs = [r["sup_error"] for r in rows]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        return decreasing and errs[-1] <= 0.05, errs[-1], 0.05, {"errors": errs, "strictly_decreasing": decreasing}

    return _timed(6, "vanishing viscosity sweep", 300.0, body)


# -- 7 ------------------------------------------------------------------


def hopf_lax_abs(y: np.ndarray, t: float, dz: float = 1e-3, reach: float = 4.0) -> np.ndarray:
    """``min_z |z| + (y - z)^2 / (4t)``, the value for ``H = p^2`` from ``|y|``, by direct minimization."""
    z = np.arange(-reach, reach + dz / 2, dz)
    return np.array([np.min(np.abs(z) + (yy - z) ** 2 / (4.0 * t)) for yy in y])


def whole_line(dx: float = 0.005, length: float = 2.0, T: float = 0.5, window: float = 1.0) -> CriterionResult:
    def body():
        H = Quadratic(1.0)
        M = int(round(length / dx)) + 1
        A_e, _ = compute_Ae(H.reflected(), H)
        grid, u0 = fold_line(np.abs, dx, M)
        sol = solve_flux_limited((H.reflected(), H), A_e, u0, T, grid)
        y = line_grid(dx, M)
        mask = np.abs(y) <= window
        err = float(np.max(np.abs(unfold(grid, sol.final)[mask] - hopf_lax_abs(y[mask], T))))
        return err <= 2 * dx, err, 2 * dx, {"A_e": A_e}

    return _timed(7, "whole-line fold matches Hopf-Lax", 60.0, body)


# -- 8 ------------------------------------------------------------------


def ldp_identification(eps: float = 0.05, dx: float = 0.005) -> CriterionResult:
    def body():
        worst_dp_fl = worst_eps = 0.0
        cases = {}
        for hname, h in (("y^2", np.square), ("|y|", np.abs)):
            for b1, b2 in ((1.0, -1.0), (-1.0, 1.0), (0.0, 0.0)):
                rep = hopf_cole_pipeline(QuadraticSideData(1.0, b1), QuadraticSideData(1.0, b2), h, eps, dx=dx)
                v_eps, v_dp, v_fl = map(np.asarray, (rep.v_eps, rep.v_dp, rep.v_fl))
                d1 = float(np.max(np.abs(v_dp - v_fl)))
                d2 = float(max(np.max(np.abs(v_eps - v_dp)), np.max(np.abs(v_eps - v_fl))))
                cases[f"{hname} b=({b1:g},{b2:g})"] = {"dp_vs_fl": d1, "eps_vs_limits": d2}
                worst_dp_fl = max(worst_dp_fl, d1)
                worst_eps = max(worst_eps, d2)
        ok = worst_dp_fl <= 0.05 and worst_eps <= 0.1
        return ok, worst_dp_fl, 0.05, {"eps_gap": worst_eps, "eps_tolerance": 0.1, "cases": cases}

    return _timed(8, "large-deviation identification", 300.0, body)


# -- 9 ------------------------------------------------------------------


def scheme_monotonicity(seed: int = DEFAULT_SEED, n_pairs: int = 1000, dx: float = 0.1) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        grid = JunctionGrid(2, dx, 6)  # vertex plus 5 nodes on each branch
        violations = 0
        worst = 0.0
        for _ in range(n_pairs):
            hams = (random_hamiltonian(rng), random_hamiltonian(rng))
            A = compute_A0(hams) + float(rng.uniform(0.0, 2.0))
            U = grid.to_branches(rng.uniform(-1.0, 1.0, grid.n_dof))
            gap = rng.uniform(0.0, 0.5, grid.n_dof) * (rng.random(grid.n_dof) < 0.7)
            V = U + grid.to_branches(gap)
            slopes = np.concatenate([np.diff(U, axis=1).ravel(), np.diff(V, axis=1).ravel()]) / dx
            lo, hi = float(slopes.min()), float(slopes.max())
            lip = max(H.lipschitz(lo, hi) for H in hams)
            dt = 0.9 * dx / lip
            nu = flux_limited_step(hams, A, U, dx, dt, "frozen")
            nv = flux_limited_step(hams, A, V, dx, dt, "frozen")
            excess = float(np.max(nu - nv))
            if excess > 0:
                violations += 1
                worst = max(worst, excess)
        return violations == 0, float(violations), 0.0, {"worst_excess": worst, "nodes": grid.n_dof}

    return _timed(9, "one-step scheme monotonicity", 1.0, body)


# -- suites -----------------------------------------------------------------

SUITES: dict[str, tuple[Callable[..., CriterionResult], ...]] = {
    "envelopes": (envelope_identities,),
    "representations": (representation_equality, idempotence, coercivity),
    "ae-ishii": (ae_equals_ishii,),
    "vvl": (vanishing_viscosity, whole_line, scheme_monotonicity),
    "ldp": (ldp_identification,),
}

_SEEDED = {envelope_identities, representation_equality, idempotence, ae_equals_ishii, scheme_monotonicity}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [fn(seed=seed) if fn in _SEEDED else fn() for fn in SUITES[name]]


def run_all(seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    out = [r for name in SUITES for r in run_suite(name, seed)]
    return sorted(out, key=lambda r: r.number)
