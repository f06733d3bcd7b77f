"""Effective flux limiters at a frozen parameter point.

The central object is the level map ``g(lam) = L(lam, pi_1^+(lam), ...,
pi_N^+(lam))`` on ``lam >= A0``. It is strictly decreasing under the
structural assumptions on ``L``; the effective limiter is where it stops
being positive.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ._bisect import bisect_boundary
from .errors import ArityMismatch, AssumptionViolated, BracketNotFound, ConfigError
from .hamiltonian import (
    AbsoluteValue,
    Hamiltonian1D,
    ParamPoint,
    Quadratic,
    Trapezoid,
)
from .junction import JunctionFunction, Kirchhoff, Tabulated, validate_assumptions_L

BRACKET_CEILING = 1e6
TOL_ROOT = 1e-10
TOL_CERT = 1e-8


@dataclass
class FluxLimiterReport:
    A0: float
    AL: float
    branch_slopes: tuple[float, ...]
    took_A0_branch: bool
    rep_sup: float
    rep_inf: float
    iterations: int
    residual: float = 0.0
    params: ParamPoint = field(default_factory=ParamPoint)
    warnings: list[str] = field(default_factory=list)

    def as_row(self) -> dict[str, Any]:
        row = {"A0": self.A0, "AL": self.AL, "rep_sup": self.rep_sup, "rep_inf": self.rep_inf}
        for k, p in enumerate(self.branch_slopes, start=1):
            row[f"p_plus_{k}"] = p
        row["case_tag"] = "A0" if self.took_A0_branch else "root"
        return row


@dataclass
class RepresentationCheck:
    skipped: bool
    view_def: float = math.nan  # g(AL), must be >= 0
    view_def_plus: float = math.nan  # hat-g(AL), must be <= 0
    sup_gap: float = math.nan
    inf_gap: float = math.nan
    tolerance: float = TOL_CERT
    notes: str = ""

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return (
            self.view_def >= -self.tolerance
            and self.view_def_plus <= self.tolerance
            and self.sup_gap <= self.tolerance
            and self.inf_gap <= self.tolerance
        )


@dataclass
class IshiiReport:
    A0: float
    A_star: float
    A_I_plus: float
    A_I_minus: float
    interval_I: tuple[float, float]
    case_tag: str
    pi0: tuple[float, float]


@dataclass
class EqualityReport:
    A_e: float
    A_I_minus: float
    case: str
    difference: float
    tolerance: float = TOL_CERT

    @property
    def passed(self) -> bool:
        return self.difference <= self.tolerance


def compute_A0(hams: Sequence[Hamiltonian1D]) -> float:
    """Largest branch minimum."""
    return max(H.minimum for H in hams)


def _level_map(L: JunctionFunction, hams, params, hat: bool) -> Callable[[float], float]:
    if hat:
        return lambda lam: L(lam, [H.pi_plus_hat(lam) for H in hams], params)
    return lambda lam: L(lam, [H.pi_plus(lam) for H in hams], params)


def _expand_bracket(pred: Callable[[float], bool], A0: float, step: float) -> float:
    """Smallest ``A0 + step * 2^k`` (capped at the ceiling) where ``pred`` holds."""
    while True:
        hi = A0 + min(step, BRACKET_CEILING)
        if pred(hi):
            return hi
        if step >= BRACKET_CEILING:
            raise BracketNotFound(
                f"no sign change in [A0, A0 + {BRACKET_CEILING:g}]; the junction function "
                "does not decrease to -inf along the increasing branches"
            )
        step *= 2.0


def _sup_positive_scan(g: Callable[[float], float], A0: float, n_grid: int = 64) -> float:
    """sup{lam >= A0 : g(lam) > 0} by a uniform scan followed by bisection."""
    top = _expand_bracket(lambda lam: g(lam) <= 0, A0, 1.0)
    grid = np.linspace(A0, top, n_grid + 1)
    k = next(k for k in range(1, n_grid + 1) if g(grid[k]) <= 0)
    lo, _, _ = bisect_boundary(lambda lam: g(lam) <= 0, float(grid[k - 1]), float(grid[k]))
    return lo


def _inf_negative_scan(g_hat: Callable[[float], float], A0: float, n_grid: int = 64) -> float:
    """inf{lam >= A0 : g_hat(lam) < 0}."""
    if g_hat(A0) < 0:
        return A0
    top = _expand_bracket(lambda lam: g_hat(lam) < 0, A0, 1.0)
    grid = np.linspace(A0, top, n_grid + 1)
    k = next(k for k in range(1, n_grid + 1) if g_hat(grid[k]) < 0)
    _, hi, _ = bisect_boundary(lambda lam: g_hat(lam) < 0, float(grid[k - 1]), float(grid[k]))
    return hi


def _certify(L, hams, params, level: float, lower: Sequence[float], upper: Sequence[float]):
    """Choose p_i in [lower_i, upper_i] with L(level, p) = 0.

    Coordinates are released one at a time in branch order: each is moved to
    its upper end unless that overshoots, in which case it is bisected and the
    remaining coordinates stay at their lower ends.
    """
    p = np.array(lower, dtype=float)

    def resid(q):
        return L(level, q, params)

    if resid(p) <= 0:
        return p, resid(p)
    for i in range(len(p)):
        q = p.copy()
        q[i] = upper[i]
        if resid(q) <= 0:

            def pred(x, i=i):
                r = p.copy()
                r[i] = x
                return resid(r) <= 0

            lo, hi, _ = bisect_boundary(pred, float(p[i]), float(upper[i]))
            p[i] = hi
            return p, resid(p)
        p = q
    return p, resid(p)


def compute_AL(
    L: JunctionFunction,
    hams: Sequence[Hamiltonian1D],
    params: ParamPoint | None = None,
    *,
    check_assumptions: bool = True,
    initial_step: float = 1.0,
) -> FluxLimiterReport:
    """Effective flux limiter of ``L`` for the branch Hamiltonians ``hams``."""
    hams = tuple(hams)
    params = params or ParamPoint()
    if L.arity != len(hams):
        raise ArityMismatch(f"L has arity {L.arity} but {len(hams)} Hamiltonians were given")
    if check_assumptions and L.enforce_assumptions:
        report = validate_assumptions_L(L, params=params)
        if not report.ok:
            names = ", ".join(c.name for c in report.failures())
            raise AssumptionViolated(f"junction function fails {names}", report)

    A0 = compute_A0(hams)
    g = _level_map(L, hams, params, hat=False)
    g_hat = _level_map(L, hams, params, hat=True)
    p0 = tuple(H.pi_plus(A0) for H in hams)
    warnings: list[str] = []

    if L(A0, p0, params) <= 0:
        rep = FluxLimiterReport(A0, A0, p0, True, math.nan, math.nan, 0, L(A0, p0, params), params, warnings)
        _hull_warning(L, rep)
        return rep

    def crossed(lam):
        return g(lam) <= 0

    hi = _expand_bracket(crossed, A0, initial_step)
    lo, hi, n_iter = bisect_boundary(crossed, A0, hi)
    AL = lo
    lower = [H.pi_plus(lo) for H in hams]
    upper = [H.pi_plus_hat(hi) for H in hams]
    slopes, residual = _certify(L, hams, params, AL, lower, upper)
    if abs(residual) > TOL_CERT:
        warnings.append(f"certification residual {residual:.3e} exceeds {TOL_CERT:g}")

    rep = FluxLimiterReport(
        A0=A0,
        AL=AL,
        branch_slopes=tuple(float(s) for s in slopes),
        took_A0_branch=False,
        rep_sup=_sup_positive_scan(g, A0),
        rep_inf=_inf_negative_scan(g_hat, A0),
        iterations=n_iter,
        residual=float(residual),
        params=params,
        warnings=warnings,
    )
    _hull_warning(L, rep)
    return rep


def _hull_warning(L, rep: FluxLimiterReport) -> None:
    if isinstance(L, Tabulated) and not L.in_hull(rep.AL, rep.branch_slopes):
        rep.warnings.append("root-finding left the table hull; values there are clamped")


def check_representations(
    report: FluxLimiterReport,
    L: JunctionFunction,
    hams: Sequence[Hamiltonian1D],
    tol: float = TOL_CERT,
) -> RepresentationCheck:
    """Evaluate both one-sided identities and the sup/inf representations at ``AL``."""
    if report.took_A0_branch:
        return RepresentationCheck(True, tolerance=tol, notes="first case of the definition: AL = A0")
    params = report.params
    AL = report.AL
    return RepresentationCheck(
        skipped=False,
        view_def=_level_map(L, hams, params, hat=False)(AL),
        view_def_plus=_level_map(L, hams, params, hat=True)(AL),
        sup_gap=abs(AL - report.rep_sup),
        inf_gap=abs(AL - report.rep_inf),
        tolerance=tol,
    )


# -- two-branch limiters ------------------------------------------------


def compute_Ae(H1: Hamiltonian1D, H2: Hamiltonian1D) -> tuple[float, tuple[float, float]]:
    """Limiter selected by the Kirchhoff condition ``-p1 - p2 = 0``.

    Returns the level and a certifying pair of slopes. In the ``A0`` case the
    pair is ``(p1^0, p2^0)``, which need not sum to zero.
    """
    A0 = max(H1.minimum, H2.minimum)
    p10, p20 = H1.pi_plus(A0), H2.pi_plus(A0)
    if p10 + p20 >= 0:
        return A0, (p10, p20)

    def crossed(lam):
        return H1.pi_plus(lam) + H2.pi_plus(lam) >= 0

    hi = _expand_bracket(crossed, A0, 1.0)
    lo, hi, _ = bisect_boundary(crossed, A0, hi)
    p1 = H1.pi_plus(lo)
    # keep -p1 inside [pi_2^+(lo), hat-pi_2^+(hi)]
    p1 = min(max(p1, -H2.pi_plus_hat(hi)), -H2.pi_plus(lo))
    return lo, (p1, -p1)


def _fold(H1_tilde: Hamiltonian1D, H2_tilde: Hamiltonian1D) -> tuple[Hamiltonian1D, Hamiltonian1D]:
    return H1_tilde.reflected(), H2_tilde


def compute_ishii(H1_tilde: Hamiltonian1D, H2_tilde: Hamiltonian1D) -> IshiiReport:
    """Limiters of the maximal and minimal Ishii solutions of the two-domain problem.

    Inputs are the Hamiltonians on either side of the interface in the line
    coordinate; branch 1 is folded with ``H1(p) = H1_tilde(-p)``.
    """
    H1, H2 = _fold(H1_tilde, H2_tilde)
    A0 = max(H1.minimum, H2.minimum)
    pi1, pi2 = H1.minimal_minimizer, H2.minimal_minimizer
    lo, hi = min(-pi1, pi2), max(-pi1, pi2)

    def objective(q):
        return min(H2(q), H1(-q))

    # H2(q) - H1(-q) is monotone on I; the max of the min sits at the crossing.
    increasing = pi2 <= -pi1

    def diff(q):
        d = H2(q) - H1(-q)
        return d if increasing else -d

    candidates = [lo, hi]
    if hi > lo and diff(lo) < 0 < diff(hi):
        a, b, _ = bisect_boundary(lambda q: diff(q) >= 0, lo, hi)
        candidates += [a, b]
    A_star = max(objective(q) for q in candidates)
    A_plus = max(A0, A_star)
    if pi1 + pi2 >= 0:
        A_minus, tag = A0, "pi_sum_nonneg"
    else:
        A_minus, tag = A_plus, "A_I_plus"
    return IshiiReport(A0, A_star, A_plus, A_minus, (lo, hi), tag, (pi1, pi2))


def classify_case(H1_tilde: Hamiltonian1D, H2_tilde: Hamiltonian1D) -> str:
    """Which configuration the Kirchhoff/Ishii comparison falls into.

    ``pi_sum_nonneg`` when the folded minimizers sum to a non-negative
    number; otherwise ``case1`` (H2 above the mirrored H1 on the interval),
    ``case3`` (mirrored H1 above H2) or ``case2`` (the graphs cross).
    """
    H1, H2 = _fold(H1_tilde, H2_tilde)
    pi1, pi2 = H1.minimal_minimizer, H2.minimal_minimizer
    if pi1 + pi2 >= 0:
        return "pi_sum_nonneg"
    if H2(pi2) >= H1(-pi2):
        return "case1"
    if H1(pi1) >= H2(-pi1):
        return "case3"
    return "case2"


def verify_Ae_equals_AIminus(H1_tilde: Hamiltonian1D, H2_tilde: Hamiltonian1D, tol: float = TOL_CERT) -> EqualityReport:
    H1, H2 = _fold(H1_tilde, H2_tilde)
    A_e, _ = compute_Ae(H1, H2)
    ishii = compute_ishii(H1_tilde, H2_tilde)
    return EqualityReport(A_e, ishii.A_I_minus, classify_case(H1_tilde, H2_tilde), abs(A_e - ishii.A_I_minus), tol)


# -- parameter sweeps -----------------------------------------------------

FEATURES: dict[str, Callable[[ParamPoint], float]] = {
    "1": lambda q: 1.0,
    "t": lambda q: q.t,
    "|x'|": lambda q: float(np.linalg.norm(q.x_prime)),
    "|x'|^2": lambda q: float(np.dot(q.x_prime, q.x_prime)),
    "|p'|": lambda q: float(np.linalg.norm(q.p_prime)),
    "|p'|^2": lambda q: float(np.dot(q.p_prime, q.p_prime)),
}

_FAMILY_CLASSES = {
    "quadratic": (Quadratic, ("a", "c", "m")),
    "absolute": (AbsoluteValue, ("a", "c", "m")),
    "trapezoid": (Trapezoid, ("w", "s", "m", "c")),
}


@dataclass(frozen=True)
class ParametricHamiltonian:
    """A builtin family whose coefficients are linear combinations of features.

    ``coefficients`` maps a field name to either a number or a mapping
    ``feature -> weight`` with features from :data:`FEATURES`.
    """

    family: str
    coefficients: Mapping[str, Any]

    def __post_init__(self):
        if self.family not in _FAMILY_CLASSES:
            raise ConfigError(f"parametric family {self.family!r} is not in the closed-form catalog")
        for name, spec in self.coefficients.items():
            if isinstance(spec, Mapping):
                unknown = set(spec) - set(FEATURES)
                if unknown:
                    raise ConfigError(f"coefficient {name}: unknown features {sorted(unknown)}")

    def coefficient(self, name: str, q: ParamPoint, default: float = 0.0) -> float:
        spec = self.coefficients.get(name, default)
        if isinstance(spec, Mapping):
            return float(sum(w * FEATURES[f](q) for f, w in spec.items()))
        return float(spec)

    def at(self, q: ParamPoint) -> Hamiltonian1D:
        cls, names = _FAMILY_CLASSES[self.family]
        return cls(**{n: self.coefficient(n, q) for n in names})


@dataclass
class SweepResult:
    points: list[ParamPoint]
    reports: list[FluxLimiterReport]
    continuity_moduli: list[float]
    coercivity: list[tuple[float, float]]  # (|p'|, min AL over that sphere)

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for q, r in zip(self.points, self.reports):
            row: dict[str, Any] = {"t": q.t}
            for k, v in enumerate(q.x_prime, start=1):
                row[f"x_prime_{k}"] = v
            for k, v in enumerate(q.p_prime, start=1):
                row[f"p_prime_{k}"] = v
            row.update(r.as_row())
            out.append(row)
        return out


def thread_count(default: int | None = None) -> int:
    env = os.environ.get("JUNCTIONHJ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return default or min(8, os.cpu_count() or 1)


def sweep_limiter(
    L: JunctionFunction,
    family: Sequence[ParametricHamiltonian | Hamiltonian1D],
    grid: Sequence[ParamPoint],
    *,
    threads: int | None = None,
) -> SweepResult:
    """Compute ``compute_AL`` over a grid of parameter points, in grid order."""
    grid = list(grid)

    def one(q: ParamPoint) -> FluxLimiterReport:
        hams = [h.at(q) if isinstance(h, ParametricHamiltonian) else h for h in family]
        return compute_AL(L, hams, q, check_assumptions=False)

    if grid and L.enforce_assumptions:
        report = validate_assumptions_L(L, params=grid[0])
        if not report.ok:
            raise AssumptionViolated("junction function fails the sampling validator", report)

    n = thread_count(threads)
    if n > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            reports = list(pool.map(one, grid))
    else:
        reports = [one(q) for q in grid]

    moduli = []
    for a, b, ra, rb in zip(grid, grid[1:], reports, reports[1:]):
        da = np.concatenate([[a.t - b.t], np.subtract(a.x_prime, b.x_prime), np.subtract(a.p_prime, b.p_prime)])
        dist = float(np.linalg.norm(da))
        moduli.append(abs(ra.AL - rb.AL) / dist if dist > 0 else 0.0)

    spheres: dict[float, float] = {}
    for q, r in zip(grid, reports):
        radius = round(float(np.linalg.norm(q.p_prime)), 9)
        spheres[radius] = min(spheres.get(radius, math.inf), r.AL)
    coercivity = sorted(spheres.items())
    return SweepResult(grid, reports, moduli, coercivity)


def sphere_grid(radii: Sequence[float], dim: int, n_directions: int = 16, t: float = 0.0) -> list[ParamPoint]:
    """Points of ``|p'| = r`` for each radius; directions on a circle in the first two axes."""
    pts = []
    for r in radii:
        if r == 0 or dim == 0:
            pts.append(ParamPoint(t, (0.0,) * dim, (0.0,) * dim))
            continue
        if dim == 1:
            dirs = [np.array([1.0]), np.array([-1.0])]
        else:
            angles = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
            dirs = []
            for a in angles:
                d = np.zeros(dim)
                d[0], d[1] = np.cos(a), np.sin(a)
                dirs.append(d)
        for d in dirs:
            pts.append(ParamPoint(t, (0.0,) * dim, tuple(r * d)))
    return pts


def kirchhoff_limiter(hams: Sequence[Hamiltonian1D], beta: Sequence[float]) -> float:
    """Limiter of a Kirchhoff condition; two equal weights use the direct two-branch route."""
    if len(hams) == 2 and beta[0] == beta[1]:
        return compute_Ae(hams[0], hams[1])[0]
    return compute_AL(Kirchhoff(tuple(beta)), hams).AL
