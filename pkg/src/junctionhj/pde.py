"""Explicit monotone schemes on a one-dimensional junction.

A junction here is ``N`` half-lines ``{k dx : k = 0..M-1}`` sharing node 0.
Nodal values are stored as one flat vector ``[u_vertex, branch 1 nodes
1..M-1, branch 2 nodes 1..M-1, ...]`` so the vertex value exists once.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import CFLViolation, GridMismatch, NonpositiveViscosity
from .hamiltonian import Hamiltonian1D
from .limiter import compute_A0, kirchhoff_limiter, thread_count

FAR_BCS = ("extrapolation", "frozen")


@dataclass(frozen=True)
class JunctionGrid:
    N: int
    dx: float
    M: int

    def __post_init__(self):
        if self.N < 1 or self.M < 3 or not self.dx > 0:
            raise ValueError("need N >= 1 branches, M >= 3 nodes per branch and dx > 0")

    @property
    def n_dof(self) -> int:
        return 1 + self.N * (self.M - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M) * self.dx

    @property
    def length(self) -> float:
        return (self.M - 1) * self.dx

    def to_branches(self, values) -> np.ndarray:
        """``(N, M)`` view with the vertex value repeated in column 0."""
        v = np.asarray(values, dtype=float)
        if v.shape != (self.n_dof,):
            raise GridMismatch(f"expected {self.n_dof} nodal values, got shape {v.shape}")
        U = np.empty((self.N, self.M))
        U[:, 0] = v[0]
        U[:, 1:] = v[1:].reshape(self.N, self.M - 1)
        return U

    def from_branches(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.shape != (self.N, self.M):
            raise GridMismatch(f"expected shape {(self.N, self.M)}, got {U.shape}")
        return np.concatenate([[U[0, 0]], U[:, 1:].ravel()])

    def sample(self, func: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
        """Nodal values of ``func(branch_index, x)``; the vertex comes from branch 0."""
        U = np.stack([np.broadcast_to(np.asarray(func(i, self.x), dtype=float), (self.M,)) for i in range(self.N)])
        return self.from_branches(U)

    def window_mask(self, exclude: float = 0.1) -> np.ndarray:
        """Flat mask keeping the vertex and the inner ``1 - exclude`` of each branch."""
        keep = self.x <= (1.0 - exclude) * self.length + 1e-12 * self.dx
        return self.from_branches(np.tile(keep, (self.N, 1))).astype(bool)


@dataclass
class GridSolution:
    grid: JunctionGrid
    times: np.ndarray
    values: np.ndarray  # (n_times, n_dof)
    scheme_meta: dict[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def branches(self, k: int = -1) -> np.ndarray:
        return self.grid.to_branches(self.values[k])

    def csv_rows(self):
        """Rows ``(time, branch, node_index, x, value)``; the vertex is branch 0."""
        g = self.grid
        for t, v in zip(self.times, self.values):
            yield (float(t), 0, 0, 0.0, float(v[0]))
            U = g.to_branches(v)
            for i in range(g.N):
                for k in range(1, g.M):
                    yield (float(t), i + 1, k, k * g.dx, float(U[i, k]))


def _as_values(grid: JunctionGrid, u0) -> np.ndarray:
    if callable(u0):
        return grid.sample(u0)
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim == 2:
        return grid.from_branches(u0)
    if u0.shape != (grid.n_dof,):
        raise GridMismatch(f"initial datum has shape {u0.shape}, expected ({grid.n_dof},)")
    return u0.copy()


def _slopes(U: np.ndarray, dx: float) -> np.ndarray:
    return np.diff(U, axis=1) / dx


def _slope_budget(hams, U, dx, levels=(), mirrored=False) -> tuple[float, float]:
    """Slope interval the run may visit, inflated by 50% of its width.

    ``mirrored`` adds the negated data slopes, for vertex conditions that
    balance slopes of opposite sign across branches.
    """
    s = _slopes(U, dx)
    pts = [float(s.min()), float(s.max())]
    if mirrored:
        pts += [-p for p in pts]
    for H in hams:
        pts.append(H.minimal_minimizer)
        for lev in levels:
            if lev >= H.minimum:
                pts += [H.pi_plus_hat(lev), H.level_slope_decreasing(lev)]
    lo, hi = min(pts), max(pts)
    w = max(hi - lo, 1.0)
    return lo - 0.5 * w, hi + 0.5 * w


def _check_budget(U, dx, budget, t):
    s = _slopes(U, dx)
    if s.min() < budget[0] or s.max() > budget[1]:
        raise CFLViolation(
            f"slopes [{s.min():.4g}, {s.max():.4g}] left the Lipschitz budget "
            f"[{budget[0]:.4g}, {budget[1]:.4g}] at t = {t:.4g}"
        )


def _far_boundary(new: np.ndarray, old: np.ndarray, far_bc: str) -> None:
    if far_bc == "extrapolation":
        new[:, -1] = new[:, -2] + (old[:, -1] - old[:, -2])
    elif far_bc == "frozen":
        new[:, -1] = old[:, -1]
    else:
        raise ValueError(f"far_bc must be one of {FAR_BCS}, got {far_bc!r}")


def godunov_flux(H: Hamiltonian1D, p_minus, p_plus):
    """Numerical Hamiltonian ``max(H^+(p_minus), H^-(p_plus))`` for quasi-convex ``H``."""
    return np.maximum(H.upper(p_minus), H.lower(p_plus))


def flux_limited_step(
    hams: Sequence[Hamiltonian1D],
    A: float,
    U: np.ndarray,
    dx: float,
    dt: float,
    far_bc: str = "extrapolation",
) -> np.ndarray:
    """One explicit step on branch-form values ``U`` of shape ``(N, M)``."""
    new = U.copy()
    u_vertex = U[0, 0]
    vertex_flux = A
    for i, H in enumerate(hams):
        d = np.diff(U[i]) / dx
        new[i, 1:-1] = U[i, 1:-1] - dt * godunov_flux(H, d[:-1], d[1:])
        vertex_flux = max(vertex_flux, float(H.lower(d[0])))
    _far_boundary(new, U, far_bc)
    new[:, 0] = u_vertex - dt * vertex_flux
    return new


def _time_steps(T: float, dt_max: float) -> tuple[int, float]:
    if T <= 0:
        return 0, 0.0
    n = max(1, math.ceil(T / dt_max - 1e-12))
    return n, T / n


def _run(step, U, grid, T, dt_max, budget, save_every):
    n, dt = _time_steps(T, dt_max)
    times, snaps = [0.0], [grid.from_branches(U)]
    for k in range(1, n + 1):
        U = step(U, dt)
        _check_budget(U, grid.dx, budget, k * dt)
        if (save_every and k % save_every == 0) or k == n:
            times.append(k * dt if k < n else T)
            snaps.append(grid.from_branches(U))
    return np.array(times), np.array(snaps), n, dt


def solve_flux_limited(
    hams: Sequence[Hamiltonian1D],
    A: float,
    u0,
    T: float,
    grid: JunctionGrid,
    far_bc: str = "extrapolation",
    *,
    cfl: float = 0.9,
    save_every: int | None = None,
) -> GridSolution:
    """Solve ``u_t + H_i(u_x) = 0`` on each branch with the ``A``-flux-limited vertex."""
    hams = tuple(hams)
    if len(hams) != grid.N:
        raise GridMismatch(f"{len(hams)} Hamiltonians for {grid.N} branches")
    A0 = compute_A0(hams)
    if A < A0:
        if A < A0 - 1e-12:
            warnings.warn(f"flux limiter {A} below A0 = {A0}; clamped to A0", RuntimeWarning, stacklevel=2)
        A = A0
    U = grid.to_branches(_as_values(grid, u0))
    budget = _slope_budget(hams, U, grid.dx, levels=(A,))
    lip = max(H.lipschitz(*budget) for H in hams)
    dt_max = cfl * grid.dx / lip if lip > 0 else max(T, 1.0)
    times, values, n, dt = _run(
        lambda V, dt: flux_limited_step(hams, A, V, grid.dx, dt, far_bc), U, grid, T, dt_max, budget, save_every
    )
    meta = {
        "scheme": "flux-limited godunov",
        "A": A,
        "dt": dt,
        "n_steps": n,
        "cfl_number": dt * lip / grid.dx if n else 0.0,
        "lipschitz": lip,
        "slope_budget": budget,
        "far_bc": far_bc,
    }
    return GridSolution(grid, times, values, meta)


def viscous_kirchhoff_step(hams, beta, eps, U, dx, dt, far_bc="extrapolation"):
    new = U.copy()
    for i, H in enumerate(hams):
        u = U[i]
        d = np.diff(u) / dx
        lap = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
        new[i, 1:-1] = u[1:-1] - dt * godunov_flux(H, d[:-1], d[1:]) + dt * eps[i] * lap
    _far_boundary(new, U, far_bc)
    beta = np.asarray(beta, dtype=float)
    new[:, 0] = float(np.dot(beta, new[:, 1]) / beta.sum())
    return new


def solve_viscous_kirchhoff(
    hams: Sequence[Hamiltonian1D],
    beta: Sequence[float],
    eps,
    u0,
    T: float,
    grid: JunctionGrid,
    far_bc: str = "extrapolation",
    *,
    cfl: float = 0.9,
    save_every: int | None = None,
) -> GridSolution:
    """Solve ``u_t + H_i(u_x) = eps_i u_xx`` with ``sum_i beta_i u_x^i = 0`` at the vertex.

    ``eps`` may be a scalar or one value per branch.
    """
    hams = tuple(hams)
    if len(hams) != grid.N or len(beta) != grid.N:
        raise GridMismatch("need one Hamiltonian and one weight per branch")
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (grid.N,)).copy()
    if np.any(eps <= 0):
        raise NonpositiveViscosity(f"viscosity must be positive, got {eps.tolist()}")
    U = grid.to_branches(_as_values(grid, u0))
    budget = _slope_budget(hams, U, grid.dx, mirrored=True)
    lip = max(H.lipschitz(*budget) for H in hams)
    dx = grid.dx
    # monotone when dt (lip/dx + 2 eps/dx^2) <= 1
    dt_max = cfl / (lip / dx + 2.0 * eps.max() / dx**2)
    times, values, n, dt = _run(
        lambda V, dt: viscous_kirchhoff_step(hams, beta, eps, V, dx, dt, far_bc), U, grid, T, dt_max, budget, save_every
    )
    meta = {
        "scheme": "viscous godunov + kirchhoff",
        "beta": list(map(float, beta)),
        "eps": eps.tolist(),
        "dt": dt,
        "n_steps": n,
        "cfl_number": dt * (lip / dx + 2.0 * eps.max() / dx**2) if n else 0.0,
        "lipschitz": lip,
        "slope_budget": budget,
        "far_bc": far_bc,
    }
    return GridSolution(grid, times, values, meta)


# -- line problems folded onto a two-branch junction --------------------


@dataclass(frozen=True)
class FoldedProblem:
    grid: JunctionGrid
    u0: np.ndarray
    hamiltonians: tuple[Hamiltonian1D, Hamiltonian1D]


def line_grid(dx: float, M: int) -> np.ndarray:
    """Symmetric line nodes ``y_j = j dx`` for ``j = -(M-1) .. M-1``."""
    return np.arange(-(M - 1), M) * dx


def fold_line(w0, dx: float, M: int | None = None) -> tuple[JunctionGrid, np.ndarray]:
    """Fold line data onto two branches: branch 1 holds ``y < 0`` reversed, branch 2 ``y > 0``."""
    if callable(w0):
        if M is None:
            raise GridMismatch("M is required when w0 is a function")
        w = np.asarray(w0(line_grid(dx, M)), dtype=float)
    else:
        w = np.asarray(w0, dtype=float)
    if w.ndim != 1 or len(w) % 2 == 0 or len(w) < 5:
        raise GridMismatch("line data must have odd length 2M-1 on a symmetric grid, M >= 3")
    M_ = (len(w) + 1) // 2
    if M is not None and M != M_:
        raise GridMismatch(f"M = {M} does not match {len(w)} line samples")
    grid = JunctionGrid(2, dx, M_)
    U = np.stack([w[M_ - 1 :: -1], w[M_ - 1 :]])
    return grid, grid.from_branches(U)


def unfold(grid: JunctionGrid, values) -> np.ndarray:
    """Inverse of :func:`fold_line`."""
    if grid.N != 2:
        raise GridMismatch("unfolding needs a two-branch junction")
    U = grid.to_branches(values)
    return np.concatenate([U[0, :0:-1], U[1]])


def fold_line_problem(w0, H1_tilde: Hamiltonian1D, H2_tilde: Hamiltonian1D, dx: float, M: int | None = None) -> FoldedProblem:
    grid, u0 = fold_line(w0, dx, M)
    return FoldedProblem(grid, u0, (H1_tilde.reflected(), H2_tilde))


# -- vanishing viscosity sweep ------------------------------------------


def windowed_sup_error(grid: JunctionGrid, a, b, exclude: float = 0.1) -> float:
    mask = grid.window_mask(exclude)
    return float(np.max(np.abs(np.asarray(a)[mask] - np.asarray(b)[mask])))


def vvl_sweep(
    hams: Sequence[Hamiltonian1D],
    beta: Sequence[float],
    eps_list: Sequence[float],
    u0,
    T: float,
    grid: JunctionGrid,
    far_bc: str = "extrapolation",
    *,
    threads: int | None = None,
) -> list[dict[str, float]]:
    """Distance at time ``T`` between viscous Kirchhoff runs and the limiting flux-limited run."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    hams = tuple(hams)
    A_e = kirchhoff_limiter(hams, beta)
    limit = solve_flux_limited(hams, A_e, u0, T, grid, far_bc)

    def one(eps):
        sol = solve_viscous_kirchhoff(hams, beta, eps, u0, T, grid, far_bc)
        return {
            "epsilon": eps,
            "sup_error": windowed_sup_error(grid, sol.final, limit.final),
            "dx": grid.dx,
            "dt": sol.scheme_meta["dt"],
            "A_e": A_e,
        }

    n = thread_count(threads)
    if n > 1 and len(eps_list) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(one, eps_list))
    return [one(e) for e in eps_list]
