"""Coercive quasi-convex Hamiltonians of a scalar normal slope.

Every Hamiltonian decreases (weakly) up to its minimal minimizer and
increases (weakly) after it. The classes below expose that structure:
the monotone parts ``H^-``/``H^+``, the minimal minimizer, and the
generalized inverses of the non-decreasing branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._bisect import bisect_boundary
from .errors import ConfigError, LevelBelowMinimum

TOL_LEVEL = 1e-12
TOL_SLOPE = 1e-10


def plateau_threshold(value: float) -> float:
    """Two levels closer than this are treated as the same level."""
    return 1e-12 * (1.0 + abs(value))


@dataclass(frozen=True)
class ParamPoint:
    """Frozen tangential arguments ``(t, x', p')`` of one limiter computation."""

    t: float = 0.0
    x_prime: tuple[float, ...] = ()
    p_prime: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x_prime", tuple(float(v) for v in self.x_prime))
        object.__setattr__(self, "p_prime", tuple(float(v) for v in self.p_prime))
        if len(self.x_prime) != len(self.p_prime):
            raise ValueError("x_prime and p_prime must have the same dimension")
        vals = (self.t, *self.x_prime, *self.p_prime)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("ParamPoint entries must be finite")

    @property
    def dim(self) -> int:
        return len(self.p_prime)

    def as_dict(self) -> dict[str, Any]:
        return {"t": self.t, "x_prime": list(self.x_prime), "p_prime": list(self.p_prime)}


class Hamiltonian1D:
    """Base class. Subclasses implement ``__call__``, ``minimum`` and
    ``minimal_minimizer``; the rest has generic fallbacks."""

    family: str = ""

    def __call__(self, p):
        raise NotImplementedError

    @property
    def minimum(self) -> float:
        raise NotImplementedError

    @property
    def minimal_minimizer(self) -> float:
        raise NotImplementedError

    @property
    def domain_hint(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def lower(self, p):
        """Non-increasing part ``H^-``."""
        p = np.asarray(p, dtype=float)
        out = np.where(p <= self.minimal_minimizer, self(p), self.minimum)
        return float(out) if out.ndim == 0 else out

    def upper(self, p):
        """Non-decreasing part ``H^+``."""
        p = np.asarray(p, dtype=float)
        out = np.where(p >= self.minimal_minimizer, self(p), self.minimum)
        return float(out) if out.ndim == 0 else out

    def _check_level(self, level: float) -> float:
        m = self.minimum
        if level < m - TOL_LEVEL:
            raise LevelBelowMinimum(f"level {level!r} is below min H = {m!r}")
        return max(level, m)

    def pi_plus(self, level: float) -> float:
        """Smallest slope on the non-decreasing branch where ``H = level``."""
        return pi_plus_bisect(self, level)

    def pi_plus_hat(self, level: float) -> float:
        """Largest slope on the non-decreasing branch where ``H = level``."""
        return pi_plus_bisect(self, level, hat=True)

    def level_slope_decreasing(self, level: float) -> float:
        """Largest slope on the non-increasing branch where ``H = level``."""
        return -self.reflected().pi_plus(level)

    def lipschitz(self, lo: float, hi: float) -> float:
        ps = np.linspace(lo, hi, 2049)
        vals = self(ps)
        return float(np.max(np.abs(np.diff(vals) / np.diff(ps))))

    def reflected(self) -> "Hamiltonian1D":
        """The Hamiltonian ``p -> H(-p)``."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Quadratic(Hamiltonian1D):
    """``a (p - c)^2 + m``."""

    a: float
    c: float = 0.0
    m: float = 0.0
    family = "quadratic"

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return _scalar(self.a * (p - self.c) ** 2 + self.m)

    @property
    def minimum(self) -> float:
        return float(self.m)

    @property
    def minimal_minimizer(self) -> float:
        return float(self.c)

    def pi_plus(self, level: float) -> float:
        level = self._check_level(level)
        return self.c + math.sqrt((level - self.m) / self.a)

    pi_plus_hat = pi_plus

    def level_slope_decreasing(self, level: float) -> float:
        level = self._check_level(level)
        return self.c - math.sqrt((level - self.m) / self.a)

    def lipschitz(self, lo: float, hi: float) -> float:
        return 2.0 * self.a * max(abs(lo - self.c), abs(hi - self.c))

    def reflected(self) -> "Quadratic":
        return Quadratic(self.a, -self.c, self.m)

    def to_dict(self) -> dict[str, Any]:
        return {"family": "quadratic", "a": self.a, "c": self.c, "m": self.m}


@dataclass(frozen=True)
class AbsoluteValue(Hamiltonian1D):
    """``a |p - c| + m``."""

    a: float
    c: float = 0.0
    m: float = 0.0
    family = "absolute"

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return _scalar(self.a * np.abs(p - self.c) + self.m)

    @property
    def minimum(self) -> float:
        return float(self.m)

    @property
    def minimal_minimizer(self) -> float:
        return float(self.c)

    def pi_plus(self, level: float) -> float:
        level = self._check_level(level)
        return self.c + (level - self.m) / self.a

    pi_plus_hat = pi_plus

    def level_slope_decreasing(self, level: float) -> float:
        level = self._check_level(level)
        return self.c - (level - self.m) / self.a

    def lipschitz(self, lo: float, hi: float) -> float:
        return float(self.a)

    def reflected(self) -> "AbsoluteValue":
        return AbsoluteValue(self.a, -self.c, self.m)

    def to_dict(self) -> dict[str, Any]:
        return {"family": "absolute", "a": self.a, "c": self.c, "m": self.m}


@dataclass(frozen=True)
class Trapezoid(Hamiltonian1D):
    """Flat bottom ``m`` on ``[c - w, c + w]`` with linear wings of slope ``s``."""

    w: float
    s: float
    m: float = 0.0
    c: float = 0.0
    family = "trapezoid"

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return _scalar(self.m + self.s * np.maximum(0.0, np.abs(p - self.c) - self.w))

    @property
    def minimum(self) -> float:
        return float(self.m)

    @property
    def minimal_minimizer(self) -> float:
        return float(self.c - self.w)

    def pi_plus(self, level: float) -> float:
        level = self._check_level(level)
        if level - self.m <= plateau_threshold(self.m):
            return self.c - self.w
        return self.c + self.w + (level - self.m) / self.s

    def pi_plus_hat(self, level: float) -> float:
        level = self._check_level(level)
        if level - self.m <= plateau_threshold(self.m):
            return self.c + self.w
        return self.c + self.w + (level - self.m) / self.s

    def level_slope_decreasing(self, level: float) -> float:
        level = self._check_level(level)
        return self.c - self.w - (level - self.m) / self.s

    def lipschitz(self, lo: float, hi: float) -> float:
        return float(self.s)

    def reflected(self) -> "Trapezoid":
        return Trapezoid(self.w, self.s, self.m, -self.c)

    def to_dict(self) -> dict[str, Any]:
        return {"family": "trapezoid", "w": self.w, "s": self.s, "m": self.m, "c": self.c}


@dataclass(frozen=True)
class PiecewiseLinear(Hamiltonian1D):
    """Linear interpolation of ``(slope, value)`` breakpoints.

    Beyond the table the graph continues with the declared wing slopes:
    ``H(p) = v_0 + left_slope * (p_0 - p)`` on the left and
    ``H(p) = v_n + right_slope * (p - p_n)`` on the right, so positive wing
    slopes make ``H`` coercive.
    """

    breakpoints: tuple[tuple[float, float], ...]
    left_slope: float = 1.0
    right_slope: float = 1.0
    family = "piecewise_linear"
    _ps: np.ndarray = field(init=False, repr=False, compare=False)
    _vs: np.ndarray = field(init=False, repr=False, compare=False)
    _kmin: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple((float(p), float(v)) for p, v in self.breakpoints)
        if len(bps) < 1:
            raise ValueError("PiecewiseLinear needs at least one breakpoint")
        ps = np.array([b[0] for b in bps])
        if np.any(np.diff(ps) <= 0):
            raise ValueError("breakpoint slopes must be strictly increasing")
        vs = np.array([b[1] for b in bps])
        if not (np.all(np.isfinite(ps)) and np.all(np.isfinite(vs))):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "_ps", ps)
        object.__setattr__(self, "_vs", vs)
        # first breakpoint achieving the minimum, scanning left to right
        vmin = float(vs.min())
        kmin = int(np.flatnonzero(vs <= vmin + plateau_threshold(vmin))[0])
        object.__setattr__(self, "_kmin", kmin)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        ps, vs = self._ps, self._vs
        out = np.interp(p, ps, vs)
        out = np.where(p < ps[0], vs[0] + self.left_slope * (ps[0] - p), out)
        out = np.where(p > ps[-1], vs[-1] + self.right_slope * (p - ps[-1]), out)
        return _scalar(out)

    @property
    def domain_hint(self) -> tuple[float, float]:
        return (float(self._ps[0]), float(self._ps[-1]))

    @property
    def minimum(self) -> float:
        return float(self._vs[self._kmin])

    @property
    def minimal_minimizer(self) -> float:
        return float(self._ps[self._kmin])

    def _inverse(self, level: float, hat: bool) -> float:
        level = self._check_level(level)
        ps, vs = self._ps, self._vs
        n = len(ps)
        thr = plateau_threshold(level)
        for k in range(self._kmin, n - 1):
            va, vb = vs[k], vs[k + 1]
            # levels within thr of a flat piece snap to its left (or, for hat, right) end
            hit = vb > level + thr if hat else vb >= level - thr
            if hit:
                if vb == va:
                    return float(ps[k])
                t = min(1.0, max(0.0, (level - va) / (vb - va)))
                return float(ps[k] + t * (ps[k + 1] - ps[k]))
        if vs[-1] >= level and not hat:
            return float(ps[-1])
        if self.right_slope <= 0:
            raise LevelBelowMinimum("non-coercive right wing: level never reached")
        return float(ps[-1] + max(0.0, level - vs[-1]) / self.right_slope)

    def pi_plus(self, level: float) -> float:
        return self._inverse(level, hat=False)

    def pi_plus_hat(self, level: float) -> float:
        return self._inverse(level, hat=True)

    def level_slope_decreasing(self, level: float) -> float:
        return -self.reflected().pi_plus(level)

    def lipschitz(self, lo: float, hi: float) -> float:
        ps, vs = self._ps, self._vs
        slopes = [abs(self.left_slope)] if lo < ps[0] else []
        if hi > ps[-1]:
            slopes.append(abs(self.right_slope))
        seg = np.abs(np.diff(vs) / np.diff(ps)) if len(ps) > 1 else np.zeros(0)
        for k, sl in enumerate(seg):
            if ps[k + 1] >= lo and ps[k] <= hi:
                slopes.append(float(sl))
        return max(slopes, default=0.0)

    def reflected(self) -> "PiecewiseLinear":
        bps = tuple((-p, v) for p, v in reversed(self.breakpoints))
        return PiecewiseLinear(bps, self.right_slope, self.left_slope)

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": "piecewise_linear",
            "breakpoints": [list(b) for b in self.breakpoints],
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
        }


def pi_plus_bisect(H: Hamiltonian1D, level: float, hat: bool = False, tol: float = TOL_SLOPE) -> float:
    """Generalized inverse by bisection on ``[pi^0, +inf)``.

    Uses only evaluations of ``H``, so it doubles as an independent check of
    the closed forms.
    """
    level = H._check_level(level)
    p0 = H.minimal_minimizer
    thr = plateau_threshold(level)
    if hat:
        pred = lambda p: H(p) > level + thr  # noqa: E731
    else:
        pred = lambda p: H(p) >= level  # noqa: E731
    if pred(p0):
        return float(p0)
    step = 1.0
    hi = p0 + step
    while not pred(hi):
        step *= 2.0
        hi = p0 + step
        if step > 1e12:
            raise LevelBelowMinimum("level not reached: H is not coercive")
    lo, hi, _ = bisect_boundary(pred, p0, hi, tol=tol)
    return 0.5 * (lo + hi)


# -- functional surface -------------------------------------------------


def evaluate(H: Hamiltonian1D, p):
    return H(p)


def minimal_minimizer(H: Hamiltonian1D) -> float:
    return H.minimal_minimizer


def monotone_part(H: Hamiltonian1D, sign, p):
    """``H^-`` for sign in {-1, '-', 'decreasing'}, ``H^+`` for {+1, '+', 'increasing'}."""
    if sign in (-1, "-", "decreasing", "minus"):
        return H.lower(p)
    if sign in (1, "+", "increasing", "plus"):
        return H.upper(p)
    raise ValueError(f"unknown sign {sign!r}")


def pi_plus(H: Hamiltonian1D, level: float) -> float:
    return H.pi_plus(level)


def pi_plus_hat(H: Hamiltonian1D, level: float) -> float:
    return H.pi_plus_hat(level)


# -- validation ----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    counterexample: Any = None


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict[str, Any]:
        return {
            c.name: {"passed": c.passed, "detail": c.detail, "counterexample": c.counterexample}
            for c in self.checks
        }


def _sample_slopes(H: Hamiltonian1D, n: int = 1000) -> np.ndarray:
    lo, hi = H.domain_hint
    if not math.isfinite(lo):
        c = H.minimal_minimizer
        lo, hi = c - 10.0, c + 10.0
    width = hi - lo if hi > lo else 1.0
    return np.linspace(lo - 0.5 * width, hi + 0.5 * width, n)


def _first_sublevel_violation(ps: np.ndarray, vals: np.ndarray):
    """Index of a sample that rises above its neighbours (interior maximum)."""
    k = int(np.argmin(vals))
    tol = 1e-12 * (1.0 + np.abs(vals))
    left = np.diff(vals[: k + 1])  # must be <= 0
    bad = np.flatnonzero(left > tol[1 : k + 1])
    if bad.size:
        return float(ps[bad[0] + 1])
    right = np.diff(vals[k:])  # must be >= 0
    bad = np.flatnonzero(right < -tol[k + 1 :])
    if bad.size:
        return float(ps[k + bad[0] + 1])
    return None


def validate(H: Hamiltonian1D) -> ValidationReport:
    """Check coercivity, quasi-convexity and continuity of ``H``."""
    checks = []

    if isinstance(H, (Quadratic, AbsoluteValue)):
        ok = H.a > 0
        checks.append(CheckResult("coercive", ok, "" if ok else f"a = {H.a} must be > 0", H.a if not ok else None))
    elif isinstance(H, Trapezoid):
        ok = H.s > 0
        checks.append(CheckResult("coercive", ok, "" if ok else f"s = {H.s} must be > 0", H.s if not ok else None))
    elif isinstance(H, PiecewiseLinear):
        bad = [name for name, s in (("left", H.left_slope), ("right", H.right_slope)) if not s > 0]
        checks.append(
            CheckResult(
                "coercive",
                not bad,
                f"{', '.join(bad)} wing slope not > 0" if bad else "",
                bad or None,
            )
        )
    else:
        lo = H(np.array([-1e6, 1e6]))
        ok = bool(np.all(lo > 1e3))
        checks.append(CheckResult("coercive", ok, "" if ok else "H(+-1e6) not large"))

    shape_ok = True
    if isinstance(H, Trapezoid):
        shape_ok = H.w >= 0
        checks.append(CheckResult("quasi_convex", shape_ok, "" if shape_ok else "w must be >= 0", H.w if not shape_ok else None))
    else:
        if isinstance(H, PiecewiseLinear):
            ps = np.concatenate([[H._ps[0] - 1.0], H._ps, [H._ps[-1] + 1.0]])
            vals = H(ps)
        else:
            ps = _sample_slopes(H)
            vals = H(ps)
        where = _first_sublevel_violation(ps, vals)
        shape_ok = where is None
        checks.append(
            CheckResult(
                "quasi_convex",
                shape_ok,
                "" if shape_ok else f"interior maximum near p = {where}",
                where,
            )
        )

    ps = _sample_slopes(H)
    vals = np.asarray(H(ps))
    finite = bool(np.all(np.isfinite(vals)))
    jumps = np.abs(np.diff(vals))
    lip = H.lipschitz(float(ps[0]), float(ps[-1])) if finite else math.inf
    step = float(ps[1] - ps[0])
    cont = finite and bool(np.all(jumps <= lip * step * (1 + 1e-9) + 1e-12))
    checks.append(CheckResult("continuous", cont, "" if cont else "non-finite value or jump"))
    return ValidationReport(checks)


# -- config records ------------------------------------------------------

_FAMILY_FIELDS = {
    "quadratic": (Quadratic, ("a",), {"c": 0.0, "m": 0.0}),
    "absolute": (AbsoluteValue, ("a",), {"c": 0.0, "m": 0.0}),
    "trapezoid": (Trapezoid, ("w", "s"), {"m": 0.0, "c": 0.0}),
}


def from_dict(record: dict[str, Any], path: str = "hamiltonian") -> Hamiltonian1D:
    """Build a Hamiltonian from a tagged config record."""
    if not isinstance(record, dict) or "family" not in record:
        raise ConfigError(f"{path}: expected an object with a 'family' field")
    fam = str(record["family"]).lower().replace("-", "_")
    if fam in ("abs", "absolute_value"):
        fam = "absolute"
    if fam in ("piecewise_linear", "pwl", "piecewise"):
        if "breakpoints" not in record:
            raise ConfigError(f"{path}.breakpoints: required for piecewise_linear")
        try:
            return PiecewiseLinear(
                tuple(tuple(b) for b in record["breakpoints"]),
                float(record.get("left_slope", 1.0)),
                float(record.get("right_slope", 1.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.breakpoints: {exc}") from exc
    if fam not in _FAMILY_FIELDS:
        raise ConfigError(f"{path}.family: unknown family {record['family']!r}")
    cls, required, defaults = _FAMILY_FIELDS[fam]
    kwargs = {}
    for name in required:
        if name not in record:
            raise ConfigError(f"{path}.{name}: required for family {fam}")
        kwargs[name] = record[name]
    for name, default in defaults.items():
        kwargs[name] = record.get(name, default)
    for name, value in kwargs.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{path}.{name}: expected a number, got {value!r}")
        kwargs[name] = float(value)
    return cls(**kwargs)


def random_hamiltonian(rng: np.random.Generator, families: Sequence[str] | None = None) -> Hamiltonian1D:
    """Draw a valid Hamiltonian from one of the builtin families."""
    families = families or ("quadratic", "absolute", "trapezoid", "piecewise_linear")
    fam = families[int(rng.integers(len(families)))]
    c = float(rng.uniform(-2, 2))
    m = float(rng.uniform(-2, 2))
    if fam == "quadratic":
        return Quadratic(float(rng.uniform(0.2, 3.0)), c, m)
    if fam == "absolute":
        return AbsoluteValue(float(rng.uniform(0.2, 3.0)), c, m)
    if fam == "trapezoid":
        return Trapezoid(float(rng.uniform(0.0, 1.5)), float(rng.uniform(0.2, 3.0)), m, c)
    # decreasing run, optional flat bottom, increasing run
    n_left = int(rng.integers(1, 4))
    n_right = int(rng.integers(1, 4))
    gaps = rng.uniform(0.1, 1.0, n_left + n_right + 1)
    ps = c + np.cumsum(gaps) - gaps[: n_left + 1].sum()
    drops = rng.uniform(0.1, 2.0, n_left)
    rises = rng.uniform(0.1, 2.0, n_right)
    left_vals = m + np.cumsum(drops[::-1])[::-1]
    if rng.random() < 0.3:
        rises[0] = 0.0  # flat bottom
    vals = [*left_vals, m, *(m + np.cumsum(rises))]
    bps = tuple(zip(ps.tolist(), vals))
    return PiecewiseLinear(bps, float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.2, 3.0)))
