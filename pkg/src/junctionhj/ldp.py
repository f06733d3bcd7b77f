"""Large-deviation objects for a diffusion whose coefficients jump across ``y = 0``.

Side 1 is ``y < 0`` and side 2 is ``y > 0``. Each side carries a diffusion
coefficient ``a`` and a drift ``b``; the side Hamiltonian is
``a p^2 / 2 - b p`` and its Lagrangian ``(q - b)^2 / (2 a)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import GridTooCoarse
from .hamiltonian import Quadratic
from .limiter import compute_ishii
from .pde import fold_line, line_grid, solve_flux_limited, solve_viscous_kirchhoff, unfold

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadraticSideData:
    a: float
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"diffusion coefficient must be positive, got {self.a}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.a)

    def hamiltonian(self) -> Quadratic:
        """``a p^2 / 2 - b p`` as a shifted quadratic."""
        return Quadratic(self.a / 2.0, self.b / self.a, -self.b**2 / (2.0 * self.a))


def lagrangian_side(side: QuadraticSideData, q):
    q = np.asarray(q, dtype=float)
    out = (q - side.b) ** 2 / (2.0 * side.a)
    return float(out) if out.ndim == 0 else out


def _split_cost(s1: QuadraticSideData, s2: QuadraticSideData, q: float, lam: float) -> float:
    """Best cost for a fixed time share ``lam`` spent on side 1.

    With ``u1 = lam q1`` and ``u2 = (1 - lam) q2`` the cost is a sum of
    perspective functions, jointly convex in ``(lam, u1)``; the constraints
    reduce to ``u1 >= max(0, q)``.
    """
    if lam <= 0.0:
        return lagrangian_side(s2, q) if q <= 0 else math.inf
    if lam >= 1.0:
        return lagrangian_side(s1, q) if q >= 0 else math.inf
    w1 = 1.0 / (s1.a * lam)
    w2 = 1.0 / (s2.a * (1.0 - lam))
    u1 = (w1 * lam * s1.b + w2 * (q - (1.0 - lam) * s2.b)) / (w1 + w2)
    u1 = max(u1, 0.0, q)
    u2 = q - u1
    return 0.5 * w1 * (u1 - lam * s1.b) ** 2 + 0.5 * w2 * (u2 - (1.0 - lam) * s2.b) ** 2


def interface_lagrangian(
    s1: QuadraticSideData,
    s2: QuadraticSideData,
    q: float,
    *,
    tol: float = 1e-12,
    diagnostics: bool = False,
) -> float:
    """Cheapest way to move at speed ``q`` along the interface by mixing the two sides.

    Side-1 velocities are restricted to ``q1 >= 0`` and side-2 velocities to
    ``q2 <= 0``. The outer minimization over the time share is convex and is
    done by golden-section search; with ``diagnostics`` the result is checked
    against a dense grid and the smaller value is kept.
    """
    q = float(q)
    f = lambda lam: _split_cost(s1, s2, q, lam)  # noqa: E731
    a, b = 0.0, 1.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = min(fc, fd, f(0.0), f(1.0), f(0.5 * (a + b)))
    if diagnostics:
        grid = np.linspace(0.0, 1.0, 2001)
        best = min(best, min(f(x) for x in grid))
    return best


def interface_lagrangian_table(s1, s2, qs: Sequence[float]) -> np.ndarray:
    return np.array([interface_lagrangian(s1, s2, q) for q in qs])


@dataclass
class PathSample:
    positions: np.ndarray  # values at a uniform partition of [0, 1]

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 1 or len(self.positions) < 2:
            raise ValueError("a path needs at least two nodes")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("path positions must be finite")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.positions))

    @property
    def start(self) -> float:
        return float(self.positions[0])


def rate_function(path: PathSample, s1: QuadraticSideData, s2: QuadraticSideData, interface_band: float = 0.0) -> float:
    """Action of a piecewise-linear path.

    Each segment is charged by the side containing its midpoint; segments
    whose midpoint is within ``interface_band`` of ``0`` pay the interface
    Lagrangian.
    """
    x = path.positions
    ds = 1.0 / (len(x) - 1)
    vel = np.diff(x) / ds
    mid = 0.5 * (x[1:] + x[:-1])
    total = 0.0
    for v, m in zip(vel, mid):
        if abs(m) <= interface_band:
            cost = interface_lagrangian(s1, s2, v)
        elif m < 0:
            cost = lagrangian_side(s1, v)
        else:
            cost = lagrangian_side(s2, v)
        total += ds * cost
    return total


@dataclass
class DPResult:
    y: np.ndarray
    value: np.ndarray
    velocities: np.ndarray
    speed_bound: float

    def at(self, x0):
        return np.interp(x0, self.y, self.value)


def speed_bound(s1, s2, oscillation: float) -> float:
    """Velocities faster than this cannot beat drifting along and paying ``h``.

    A path pays at least ``(q - b)^2 / (2a)`` per unit time, while following
    the drift costs nothing and ends with at most ``osc h`` more terminal
    cost; a factor 2 leaves room for paths that mix sides.
    """
    amax = max(s1.a, s2.a)
    bmax = max(abs(s1.b), abs(s2.b))
    return 2.0 * (bmax + math.sqrt(2.0 * max(oscillation, 0.0) * amax))


def solve_dp(
    h: Callable[[np.ndarray], np.ndarray],
    s1: QuadraticSideData,
    s2: QuadraticSideData,
    *,
    length: float = 2.0,
    dx: float = 0.02,
    n_steps: int = 50,
    n_velocities: int = 41,
    V: float | None = None,
) -> DPResult:
    """Backward dynamic programming for ``inf_phi h(phi(1)) + I(phi)`` on ``[-length, length]``."""
    n_half = int(round(length / dx))
    y = np.arange(-n_half, n_half + 1) * dx
    terminal = np.asarray(h(y), dtype=float)
    if V is None:
        V = speed_bound(s1, s2, float(terminal.max() - terminal.min()))
    qs = np.linspace(-V, V, n_velocities)
    ds = 1.0 / n_steps
    band = dx / 2.0
    L1 = lagrangian_side(s1, qs)
    L2 = lagrangian_side(s2, qs)
    L0 = interface_lagrangian_table(s1, s2, qs)
    costs = []
    for m, q in enumerate(qs):
        mid = y + 0.5 * q * ds
        c = np.where(mid < 0, L1[m], L2[m])
        c = np.where(np.abs(mid) <= band, L0[m], c)
        costs.append(ds * c)
    value = terminal
    for _ in range(n_steps):
        best = np.full_like(y, np.inf)
        for m, q in enumerate(qs):
            cand = costs[m] + np.interp(y + q * ds, y, value)
            np.minimum(best, cand, out=best)
        value = best
    return DPResult(y, value, qs, V)


def variational_value(
    x0,
    h: Callable[[np.ndarray], np.ndarray],
    s1: QuadraticSideData,
    s2: QuadraticSideData,
    *,
    check_refinement: bool = False,
    refinement_tol: float = 0.05,
    **grid,
):
    """Discrete ``inf_phi { h(phi(1)) + I_x0(phi) }`` by dynamic programming.

    This is a brute-force oracle independent of the PDE solvers. With
    ``check_refinement`` the computation is repeated at half the spatial step
    and a :class:`GridTooCoarse` warning is emitted if the values move by
    more than ``refinement_tol``.
    """
    res = solve_dp(h, s1, s2, **grid)
    out = res.at(x0)
    if check_refinement:
        fine = dict(grid)
        fine["dx"] = grid.get("dx", 0.02) / 2.0
        res2 = solve_dp(h, s1, s2, **fine)
        change = float(np.max(np.abs(res2.at(x0) - out)))
        if change > refinement_tol:
            warnings.warn(
                f"halving dx changed the DP value by {change:.3g} > {refinement_tol}", GridTooCoarse, stacklevel=2
            )
    return float(out) if np.ndim(out) == 0 else out


# -- Hopf-Cole pipeline ----------------------------------------------------


@dataclass
class HopfColeResult:
    y: np.ndarray
    v_eps: np.ndarray
    underflow_nodes: int
    dt: float
    n_steps: int


def solve_hopf_cole(
    s1: QuadraticSideData,
    s2: QuadraticSideData,
    h: Callable[[np.ndarray], np.ndarray],
    eps: float,
    dx: float,
    M: int,
    T: float = 1.0,
    cfl: float = 0.9,
) -> HopfColeResult:
    """Solve ``u_t = (eps/2) a u_yy + b u_y`` with ``u(0) = exp(-h/eps)`` and return ``-eps ln u``.

    The interface node enforces equal one-sided derivatives. The drift is
    centred where the cell Peclet number allows it and upwinded elsewhere.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    y = line_grid(dx, M)
    a = np.where(y < 0, s1.a, s2.a)
    b = np.where(y < 0, s1.b, s2.b)
    D = 0.5 * eps * a
    central = np.abs(b) * dx <= 2.0 * D
    u = np.exp(-np.asarray(h(y), dtype=float) / eps)
    floor = 1e-300
    flagged = np.zeros(len(y), dtype=bool)
    flagged |= u < floor
    u = np.maximum(u, floor)
    dt_max = cfl / (2.0 * D.max() / dx**2 + np.abs(b).max() / dx)
    n = max(1, math.ceil(T / dt_max)) if T > 0 else 0
    dt = T / n if n else 0.0
    j0 = M - 1
    Di, bi, ci = D[1:-1], b[1:-1], central[1:-1]
    for _ in range(n):
        lap = (u[2:] - 2 * u[1:-1] + u[:-2]) / dx**2
        fwd = (u[2:] - u[1:-1]) / dx
        bwd = (u[1:-1] - u[:-2]) / dx
        drift = np.where(ci, 0.5 * (fwd + bwd), np.where(bi > 0, fwd, bwd))
        new = u.copy()
        new[1:-1] = u[1:-1] + dt * (Di * lap + bi * drift)
        new[j0] = 0.5 * (new[j0 - 1] + new[j0 + 1])
        # geometric extrapolation keeps -eps ln u linear at the far ends
        for e, i1, i2 in ((0, 1, 2), (-1, -2, -3)):
            new[e] = new[i1] ** 2 / new[i2] if new[i2] > 0 else new[i1]
        flagged |= new < floor
        u = np.maximum(new, floor)
    return HopfColeResult(y, -eps * np.log(u), int(flagged.sum()), dt, n)


@dataclass
class ComparisonReport:
    x: list[float]
    v_eps: list[float]
    v_hj: list[float]
    v_dp: list[float]
    v_fl: list[float]
    sup_diff: float  # |v_eps - v_hj| over the evaluation points
    underflow_nodes: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "x": self.x,
            "v_eps": self.v_eps,
            "v_hj": self.v_hj,
            "v_dp": self.v_dp,
            "v_fl": self.v_fl,
            "sup_diff": self.sup_diff,
            "underflow_nodes": self.underflow_nodes,
            "meta": self.meta,
        }


def flux_limited_value(s1, s2, h, dx: float, M: int, T: float = 1.0):
    """Value of the maximal Ishii solution via the folded junction problem."""
    H1t, H2t = s1.hamiltonian(), s2.hamiltonian()
    A = compute_ishii(H1t, H2t).A_I_minus
    grid, u0 = fold_line(h, dx, M)
    sol = solve_flux_limited((H1t.reflected(), H2t), A, u0, T, grid)
    return line_grid(dx, M), unfold(grid, sol.final), A


def hopf_cole_pipeline(
    s1: QuadraticSideData,
    s2: QuadraticSideData,
    h: Callable[[np.ndarray], np.ndarray],
    eps: float,
    *,
    dx: float = 0.01,
    length: float = 2.0,
    x_eval: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
    dp_grid: dict[str, Any] | None = None,
    T: float = 1.0,
) -> ComparisonReport:
    """Compare ``-eps ln u_eps`` with the viscous HJ solve, the DP value and the flux-limited solve."""
    M = int(round(length / dx)) + 1
    x_eval = np.asarray(x_eval, dtype=float)
    hc = solve_hopf_cole(s1, s2, h, eps, dx, M, T)

    H1t, H2t = s1.hamiltonian(), s2.hamiltonian()
    grid, u0 = fold_line(h, dx, M)
    visc = solve_viscous_kirchhoff(
        (H1t.reflected(), H2t), (1.0, 1.0), (0.5 * eps * s1.a, 0.5 * eps * s2.a), u0, T, grid
    )
    v_hj_line = unfold(grid, visc.final)
    y, v_fl_line, A = flux_limited_value(s1, s2, h, dx, M, T)
    v_dp = np.atleast_1d(variational_value(x_eval, h, s1, s2, **(dp_grid or {"length": length})))

    v_eps = np.interp(x_eval, hc.y, hc.v_eps)
    v_hj = np.interp(x_eval, y, v_hj_line)
    v_fl = np.interp(x_eval, y, v_fl_line)
    return ComparisonReport(
        x=x_eval.tolist(),
        v_eps=v_eps.tolist(),
        v_hj=v_hj.tolist(),
        v_dp=v_dp.tolist(),
        v_fl=v_fl.tolist(),
        sup_diff=float(np.max(np.abs(v_eps - v_hj))),
        underflow_nodes=hc.underflow_nodes,
        meta={"eps": eps, "dx": dx, "length": length, "A_I_minus": A, "hopf_cole_dt": hc.dt},
    )
