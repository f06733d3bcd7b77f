"""Command line entry point: ``junctionhj run | self-test | limiter``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, SUITES, run_suite
from .errors import AssumptionViolated, ConfigError, JunctionHJError
from .hamiltonian import ParamPoint, validate
from .hamiltonian import from_dict as hamiltonian_from_dict
from .junction import from_dict as junction_from_dict
from .ldp import QuadraticSideData, hopf_cole_pipeline
from .limiter import TOL_CERT, TOL_ROOT, ParametricHamiltonian, compute_AL, sphere_grid, sweep_limiter
from .pde import FAR_BCS, JunctionGrid, solve_flux_limited, solve_viscous_kirchhoff, vvl_sweep

SCHEMA_VERSION = 1
KINDS = ("limiter", "limiter-sweep", "solve-hj", "solve-viscous", "vvl-sweep", "ldp")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3, 4


class ValidationFailure(JunctionHJError):
    def __init__(self, message: str, report: dict[str, Any]):
        super().__init__(message)
        self.report = report


# -- output helpers ----------------------------------------------------------


def format_cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def dict_rows_csv(rows: list[dict[str, Any]]) -> str:
    header: list[str] = []
    for r in rows:
        header += [k for k in r if k not in header]
    return csv_text(header, ([r.get(k, "") for k in header] for r in rows))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _jsonable(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    return o


def json_text(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, default=_json_default) + "\n"


# -- config parsing ------------------------------------------------------------


def _need(cfg: dict, key: str, path: str = "") -> Any:
    if key not in cfg:
        raise ConfigError(f"{path}{key}: required field is missing")
    return cfg[key]


def _number(cfg: dict, key: str, path: str = "", default: Any = ...) -> float:
    if key not in cfg and default is not ...:
        return default
    v = _need(cfg, key, path)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}{key}: expected a number, got {v!r}")
    return float(v)


def _number_list(cfg: dict, key: str, path: str = "") -> list[float]:
    v = _need(cfg, key, path)
    if not isinstance(v, list) or not v or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{path}{key}: expected a non-empty list of numbers")
    return [float(x) for x in v]


def parse_hamiltonians(cfg: dict) -> list:
    records = _need(cfg, "hamiltonians")
    if not isinstance(records, list) or not records:
        raise ConfigError("hamiltonians: expected a non-empty list")
    hams = [hamiltonian_from_dict(r, f"hamiltonians[{k}]") for k, r in enumerate(records)]
    failures = {}
    for k, H in enumerate(hams):
        rep = validate(H)
        if not rep.ok:
            failures[f"hamiltonians[{k}]"] = rep.as_dict()
    if failures:
        raise ValidationFailure("Hamiltonian assumptions failed", failures)
    return hams


def parse_params(cfg: dict) -> ParamPoint:
    p = cfg.get("params", {})
    if not isinstance(p, dict):
        raise ConfigError("params: expected an object")
    try:
        return ParamPoint(float(p.get("t", 0.0)), tuple(p.get("x_prime", ())), tuple(p.get("p_prime", ())))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc


def parse_grid(cfg: dict, n_branches: int) -> tuple[JunctionGrid, float]:
    g = _need(cfg, "grid")
    if not isinstance(g, dict):
        raise ConfigError("grid: expected an object")
    dx = _number(g, "dx", "grid.")
    M = int(_number(g, "M", "grid."))
    T = _number(g, "T", "grid.")
    if T < 0:
        raise ConfigError("grid.T: must be >= 0")
    try:
        return JunctionGrid(n_branches, dx, M), T
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def parse_initial(cfg: dict, grid: JunctionGrid) -> np.ndarray:
    """Initial datum: explicit ``values`` or per-branch ``slopes`` from a vertex ``offset``."""
    init = _need(cfg, "initial")
    if not isinstance(init, dict):
        raise ConfigError("initial: expected an object")
    if "values" in init:
        vals = _number_list(init, "values", "initial.")
        if len(vals) != grid.n_dof:
            raise ConfigError(f"initial.values: expected {grid.n_dof} numbers, got {len(vals)}")
        return np.array(vals)
    slopes = _number_list(init, "slopes", "initial.")
    if len(slopes) != grid.N:
        raise ConfigError(f"initial.slopes: expected {grid.N} numbers, got {len(slopes)}")
    offset = _number(init, "offset", "initial.", 0.0)
    return grid.sample(lambda i, x: offset + slopes[i] * x)


def parse_far_bc(cfg: dict) -> str:
    bc = cfg.get("far_bc", "extrapolation")
    if bc not in FAR_BCS:
        raise ConfigError(f"far_bc: expected one of {FAR_BCS}, got {bc!r}")
    return bc


def parse_junction(cfg: dict, n_branches: int):
    L = junction_from_dict(_need(cfg, "junction"), "junction")
    if L.arity != n_branches:
        raise ConfigError(f"junction: arity {L.arity} does not match {n_branches} hamiltonians")
    return L


_TERMINALS = {"abs": np.abs, "square": np.square, "zero": np.zeros_like}


def parse_terminal(cfg: dict):
    h = cfg.get("h", "abs")
    if isinstance(h, str):
        if h not in _TERMINALS:
            raise ConfigError(f"h: expected one of {sorted(_TERMINALS)}, got {h!r}")
        return _TERMINALS[h]
    if isinstance(h, dict) and h.get("type") == "constant":
        c = _number(h, "value", "h.")
        return lambda y: np.full_like(np.asarray(y, dtype=float), c)
    raise ConfigError("h: expected a name or {'type': 'constant', 'value': c}")


# -- kinds ---------------------------------------------------------------------


def _limiter_report(cfg: dict):
    hams = parse_hamiltonians(cfg)
    L = parse_junction(cfg, len(hams))
    return compute_AL(L, hams, parse_params(cfg))


def run_limiter(cfg: dict) -> dict[str, str]:
    rep = _limiter_report(cfg)
    return {"limiter.csv": dict_rows_csv([rep.as_row()])}


def run_limiter_sweep(cfg: dict) -> dict[str, str]:
    records = _need(cfg, "family")
    if not isinstance(records, list) or not records:
        raise ConfigError("family: expected a non-empty list")
    family = []
    for k, r in enumerate(records):
        if not isinstance(r, dict) or "family" not in r:
            raise ConfigError(f"family[{k}]: expected an object with 'family'")
        if "coefficients" in r:
            family.append(ParametricHamiltonian(r["family"], r["coefficients"]))
        else:
            family.append(hamiltonian_from_dict(r, f"family[{k}]"))
    L = parse_junction(cfg, len(family))
    radii = _number_list(cfg, "radii")
    dim = int(_number(cfg, "dim", default=2))
    pts = sphere_grid(radii, dim, int(_number(cfg, "n_directions", default=16)))
    res = sweep_limiter(L, family, pts)
    coerc = csv_text(["radius", "min_AL"], res.coercivity)
    return {"sweep.csv": dict_rows_csv(res.rows()), "coercivity.csv": coerc}


def _solution_csv(sol) -> str:
    return csv_text(["time", "branch", "node", "x", "value"], sol.csv_rows())


def run_solve_hj(cfg: dict) -> dict[str, str]:
    hams = parse_hamiltonians(cfg)
    grid, T = parse_grid(cfg, len(hams))
    u0 = parse_initial(cfg, grid)
    if "A" in cfg:
        A = _number(cfg, "A")
    else:
        A = compute_AL(parse_junction(cfg, len(hams)), hams).AL
    sol = solve_flux_limited(hams, A, u0, T, grid, parse_far_bc(cfg), save_every=cfg.get("save_every"))
    return {"solution.csv": _solution_csv(sol), "scheme.json": json_text(sol.scheme_meta)}


def run_solve_viscous(cfg: dict) -> dict[str, str]:
    hams = parse_hamiltonians(cfg)
    grid, T = parse_grid(cfg, len(hams))
    beta = _number_list(cfg, "beta")
    eps = _number(cfg, "epsilon")
    sol = solve_viscous_kirchhoff(
        hams, beta, eps, parse_initial(cfg, grid), T, grid, parse_far_bc(cfg), save_every=cfg.get("save_every")
    )
    return {"solution.csv": _solution_csv(sol), "scheme.json": json_text(sol.scheme_meta)}


def run_vvl_sweep(cfg: dict) -> dict[str, str]:
    hams = parse_hamiltonians(cfg)
    grid, T = parse_grid(cfg, len(hams))
    rows = vvl_sweep(
        hams, _number_list(cfg, "beta"), _number_list(cfg, "epsilons"), parse_initial(cfg, grid), T, grid, parse_far_bc(cfg)
    )
    return {"vvl.csv": dict_rows_csv(rows)}


def run_ldp(cfg: dict) -> dict[str, str]:
    sides = _need(cfg, "sides")
    if not isinstance(sides, list) or len(sides) != 2:
        raise ConfigError("sides: expected two objects with 'a' and 'b'")
    data = []
    for k, s in enumerate(sides):
        a = _number(s, "a", f"sides[{k}].")
        if not a > 0:
            raise ConfigError(f"sides[{k}].a: must be positive")
        data.append(QuadraticSideData(a, _number(s, "b", f"sides[{k}].", 0.0)))
    eps = _number(cfg, "epsilon")
    if not eps > 0:
        raise ConfigError("epsilon: must be positive")
    kwargs = {k: _number(cfg, k) for k in ("dx", "length", "T") if k in cfg}
    if "x_eval" in cfg:
        kwargs["x_eval"] = _number_list(cfg, "x_eval")
    rep = hopf_cole_pipeline(data[0], data[1], parse_terminal(cfg), eps, **kwargs)
    return {"ldp.json": json_text(rep.as_dict())}


RUNNERS = {
    "limiter": run_limiter,
    "limiter-sweep": run_limiter_sweep,
    "solve-hj": run_solve_hj,
    "solve-viscous": run_solve_viscous,
    "vvl-sweep": run_vvl_sweep,
    "ldp": run_ldp,
}


def load_config(text: str) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {cfg.get('schema')!r}")
    if cfg.get("kind") not in KINDS:
        raise ConfigError(f"kind: expected one of {KINDS}, got {cfg.get('kind')!r}")
    return cfg


def _guarded(fn, *args) -> tuple[int, Any]:
    """Run ``fn`` and map failures onto the documented exit codes."""
    try:
        return EXIT_OK, fn(*args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except ValidationFailure as exc:
        print(f"validation failed: {exc}\n{json_text(exc.report)}", file=sys.stderr, end="")
        return EXIT_VALIDATION, None
    except AssumptionViolated as exc:
        report = exc.report.as_dict() if exc.report is not None else {}
        print(f"validation failed: {exc}\n{json_text(report)}", file=sys.stderr, end="")
        return EXIT_VALIDATION, None
    except (JunctionHJError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME, None


def cmd_run(args) -> int:
    path = Path(args.config)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        print(f"config error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, cfg = _guarded(load_config, raw.decode("utf-8", errors="replace"))
    if code:
        return code
    code, outputs = _guarded(RUNNERS[cfg["kind"]], cfg)
    if code:
        return code
    out_dir = Path(args.out) if args.out else path.parent / cfg.get("output_dir", f"{path.stem}_out")
    for name, text in outputs.items():
        write_atomic(out_dir / name, text)
    manifest = {
        "tool": "junctionhj",
        "version": __version__,
        "kind": cfg["kind"],
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": cfg.get("seed", DEFAULT_SEED),
        "tolerances": {"root": TOL_ROOT, "certification": TOL_CERT},
        "outputs": sorted(outputs),
    }
    write_atomic(out_dir / "manifest.json", json_text(manifest))
    print(f"wrote {len(outputs) + 1} files to {out_dir}")
    return EXIT_OK


def cmd_limiter(args) -> int:
    try:
        cfg = json.loads(args.inline)
    except json.JSONDecodeError as exc:
        print(f"config error: --inline is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("config error: --inline must be a JSON object", file=sys.stderr)
        return EXIT_CONFIG
    code, outputs = _guarded(run_limiter, cfg)
    if code:
        return code
    sys.stdout.write(outputs["limiter.csv"])
    return EXIT_OK


def cmd_self_test(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        for r in run_suite(name, args.seed):
            print(r.line())
            for k, v in r.detail.items():
                if k != "cases":
                    print(f"    {k}: {v}")
            ok &= r.ok
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="junctionhj", description=__doc__)
    parser.add_argument("--version", action="version", version=f"junctionhj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config and write CSV/JSON artifacts")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: <config stem>_out next to the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("self-test", help="run an acceptance suite")
    p.add_argument("suite", choices=[*sorted(SUITES), "all"])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_self_test)

    p = sub.add_parser("limiter", help="compute one effective limiter and print a CSV row")
    p.add_argument("--inline", required=True, help="JSON object with 'hamiltonians' and 'junction'")
    p.set_defaults(func=cmd_limiter)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
