"""Junction functions ``L(p0, p1, ..., pN)`` and a sampling validator.

``p0`` stands for the time derivative slot and ``p1..pN`` for the outward
normal slopes on the branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ArityMismatch, ConfigError
from .hamiltonian import CheckResult, Hamiltonian1D, ParamPoint, ValidationReport
from .hamiltonian import from_dict as hamiltonian_from_dict

DIVERGENCE_PROBE = 1e6
DIVERGENCE_LEVEL = 1e3


class JunctionFunction:
    arity: int
    family: str = ""
    # Builtin families must pass the sampling validator before limiter computations.
    enforce_assumptions: bool = True

    def __call__(self, p0: float, p: Sequence[float], params: ParamPoint | None = None) -> float:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.arity,):
            raise ArityMismatch(f"expected {self.arity} branch slopes, got shape {p.shape}")
        return self._eval(float(p0), p, params)

    def evaluate(self, p0, p, params=None) -> float:
        return self(p0, p, params)

    def _eval(self, p0: float, p: np.ndarray, params: ParamPoint | None) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Kirchhoff(JunctionFunction):
    """``-sum_i beta_i p_i``; ``p0`` is ignored."""

    beta: tuple[float, ...]
    family = "kirchhoff"

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @property
    def arity(self) -> int:
        return len(self.beta)

    def _eval(self, p0, p, params):
        return -float(np.dot(self.beta, p))

    def to_dict(self):
        return {"family": "kirchhoff", "beta": list(self.beta)}


@dataclass(frozen=True)
class Neumann(JunctionFunction):
    """``sum_i (g_i - p_i)``: prescribes the total outgoing flux."""

    g: tuple[float, ...] = (0.0,)
    family = "neumann"

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))

    @property
    def arity(self) -> int:
        return len(self.g)

    def _eval(self, p0, p, params):
        return float(np.sum(np.asarray(self.g) - p))

    def to_dict(self):
        return {"family": "neumann", "g": list(self.g)}


@dataclass(frozen=True)
class FluxLimited(JunctionFunction):
    """``-p0 + max(A, max_i H_i^-(p_i))``."""

    A: float
    hamiltonians: tuple[Hamiltonian1D, ...]
    family = "flux_limited"

    def __post_init__(self):
        object.__setattr__(self, "hamiltonians", tuple(self.hamiltonians))

    @property
    def arity(self) -> int:
        return len(self.hamiltonians)

    def flux(self, p: np.ndarray) -> float:
        return max(self.A, max(H.lower(pi) for H, pi in zip(self.hamiltonians, p)))

    def _eval(self, p0, p, params):
        return -p0 + self.flux(p)

    def to_dict(self):
        return {
            "family": "flux_limited",
            "A": self.A,
            "hamiltonians": [H.to_dict() for H in self.hamiltonians],
        }


@dataclass(frozen=True)
class Affine(JunctionFunction):
    """``gamma_0 p0 + sum_i gamma_i p_i + offset``."""

    gamma: tuple[float, ...]
    offset: float = 0.0
    family = "affine"

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if len(self.gamma) < 2:
            raise ValueError("Affine needs gamma_0 and at least one branch coefficient")

    @property
    def arity(self) -> int:
        return len(self.gamma) - 1

    def _eval(self, p0, p, params):
        return self.gamma[0] * p0 + float(np.dot(self.gamma[1:], p)) + self.offset

    def to_dict(self):
        return {"family": "affine", "gamma": list(self.gamma), "offset": self.offset}


@dataclass(frozen=True)
class Tabulated(JunctionFunction):
    """Multilinear interpolation of values on a tensor grid over ``(p0, ..., pN)``.

    Queries outside the grid are clamped to its hull; :meth:`in_hull` tells
    whether a point needed clamping.
    """

    axes: tuple[tuple[float, ...], ...]
    values: np.ndarray = field(compare=False)
    family = "tabulated"
    enforce_assumptions = False

    def __post_init__(self):
        from scipy.interpolate import RegularGridInterpolator

        axes = tuple(tuple(float(v) for v in ax) for ax in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(len(ax) for ax in axes):
            raise ValueError(f"values shape {vals.shape} does not match axes")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_interp", RegularGridInterpolator(axes, vals, method="linear"))

    @property
    def arity(self) -> int:
        return len(self.axes) - 1

    def _clamp(self, point: np.ndarray) -> np.ndarray:
        lo = np.array([ax[0] for ax in self.axes])
        hi = np.array([ax[-1] for ax in self.axes])
        return np.clip(point, lo, hi)

    def in_hull(self, p0: float, p: Sequence[float]) -> bool:
        point = np.concatenate([[p0], np.asarray(p, dtype=float)])
        return bool(np.all(point == self._clamp(point)))

    def _eval(self, p0, p, params):
        point = self._clamp(np.concatenate([[p0], p]))
        return float(self._interp(point[None, :])[0])

    def to_dict(self):
        return {"family": "tabulated", "axes": [list(a) for a in self.axes], "values": self.values.tolist()}


def evaluate_L(L: JunctionFunction, p0: float, p: Sequence[float], params: ParamPoint | None = None) -> float:
    return L(p0, p, params)


def validate_assumptions_L(
    L: JunctionFunction,
    n_samples: int = 64,
    seed: int = 42,
    params: ParamPoint | None = None,
) -> ValidationReport:
    """Falsify the structural assumptions on ``L`` by random sampling.

    A passing report is evidence, not proof. Divergence checks probe at
    ``+-1e6`` and require ``|L| >= 1e3`` with the right sign; the upward check
    pushes all of ``p0..pN`` together (see notes in the README).
    """
    rng = np.random.default_rng(seed)
    n = L.arity
    pts = rng.uniform(-10.0, 10.0, size=(n_samples, n + 1))

    def ev(x):
        return L(x[0], x[1:], params)

    base = np.array([ev(x) for x in pts])
    checks = []

    finite = np.isfinite(base)
    cont_bad = None
    if finite.all():
        for x, v in zip(pts, base):
            dx = rng.normal(size=n + 1) * 1e-7
            if not abs(ev(x + dx) - v) <= 1e-3 * (1 + abs(v)):
                cont_bad = x.tolist()
                break
    else:
        cont_bad = pts[int(np.flatnonzero(~finite)[0])].tolist()
    checks.append(CheckResult("L1", cont_bad is None, "" if cont_bad is None else "discontinuity or non-finite value", cont_bad))

    mono_bad = None
    for x, v in zip(pts, base):
        for i in range(n + 1):
            y = x.copy()
            y[i] += rng.uniform(1e-3, 1.0)
            if ev(y) > v + 1e-12 * (1 + abs(v)):
                mono_bad = {"point": x.tolist(), "coordinate": i}
                break
        if mono_bad:
            break
    checks.append(CheckResult("L2", mono_bad is None, "" if mono_bad is None else "increasing in a coordinate", mono_bad))

    strict_bad = None
    for x, v in zip(pts, base):
        if not v - ev(x + 1e-3) >= 1e-15:
            strict_bad = x.tolist()
            break
    checks.append(CheckResult("L3", strict_bad is None, "" if strict_bad is None else "no strict decrease under a uniform bump", strict_bad))

    down_bad = None
    for x in pts[: max(1, n_samples // 4)]:
        for i in range(1, n + 1):
            y = x.copy()
            y[i] = -DIVERGENCE_PROBE
            if not ev(y) >= DIVERGENCE_LEVEL:
                down_bad = {"point": y.tolist(), "coordinate": i}
                break
        if down_bad:
            break
    checks.append(CheckResult("L4", down_bad is None, "" if down_bad is None else "L does not blow up as a slope -> -inf", down_bad))

    up_bad = None
    for x in pts[: max(1, n_samples // 4)]:
        y = x + DIVERGENCE_PROBE
        if not ev(y) <= -DIVERGENCE_LEVEL:
            up_bad = y.tolist()
            break
    checks.append(CheckResult("L5", up_bad is None, "" if up_bad is None else "L does not go to -inf as all slots -> +inf", up_bad))
    return ValidationReport(checks)


def from_dict(record: dict[str, Any], path: str = "junction") -> JunctionFunction:
    if not isinstance(record, dict) or "family" not in record:
        raise ConfigError(f"{path}: expected an object with a 'family' field")
    fam = str(record["family"]).lower().replace("-", "_")

    def need(name):
        if name not in record:
            raise ConfigError(f"{path}.{name}: required for family {fam}")
        return record[name]

    def numbers(name):
        vals = need(name)
        if not isinstance(vals, list) or not vals or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
        ):
            raise ConfigError(f"{path}.{name}: expected a non-empty list of numbers")
        return tuple(float(v) for v in vals)

    if fam == "kirchhoff":
        return Kirchhoff(numbers("beta"))
    if fam == "neumann":
        return Neumann(numbers("g") if "g" in record else (0.0,))
    if fam == "affine":
        return Affine(numbers("gamma"), float(record.get("offset", 0.0)))
    if fam == "flux_limited":
        hams = need("hamiltonians")
        if not isinstance(hams, list):
            raise ConfigError(f"{path}.hamiltonians: expected a list")
        return FluxLimited(
            float(need("A")),
            tuple(hamiltonian_from_dict(h, f"{path}.hamiltonians[{k}]") for k, h in enumerate(hams)),
        )
    if fam == "tabulated":
        try:
            return Tabulated(tuple(tuple(a) for a in need("axes")), np.asarray(need("values"), dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.family: unknown family {record['family']!r}")
