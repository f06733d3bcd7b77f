import csv
import json

import pytest

from junctionhj.cli import format_cell, main

QUAD_PAIR = [{"family": "quadratic", "a": 1, "c": -2}, {"family": "quadratic", "a": 1}]


def write_config(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"schema": 1, **cfg}))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_limiter_kind(tmp_path):
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": QUAD_PAIR, "junction": {"family": "kirchhoff", "beta": [1, 1]}})
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    (row,) = read_csv(tmp_path / "out" / "limiter.csv")
    assert float(row["A0"]) == 0.0
    assert float(row["AL"]) == pytest.approx(1.0, abs=1e-10)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["kind"] == "limiter" and len(manifest["config_sha256"]) == 64
    assert "root" in manifest["tolerances"]
    assert not [p for p in (tmp_path / "out").iterdir() if p.name.endswith(".tmp")]


def test_csv_is_reproducible_and_lf(tmp_path):
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": QUAD_PAIR, "junction": {"family": "kirchhoff", "beta": [1, 1]}})
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "limiter.csv").read_bytes()
    assert a == (tmp_path / "b" / "limiter.csv").read_bytes()
    assert b"\r\n" not in a


def test_number_format():
    assert format_cell(0.1) == "1.0000000000000001e-01"
    assert format_cell(3) == "3"


def test_solve_hj_T0_returns_datum(tmp_path):
    cfg = write_config(tmp_path, {
        "kind": "solve-hj", "hamiltonians": QUAD_PAIR[1:] * 2, "A": 0.0,
        "grid": {"dx": 0.1, "M": 5, "T": 0}, "initial": {"slopes": [1, 2], "offset": 0.5},
    })
    assert main(["run", str(cfg)]) == 0
    rows = read_csv(tmp_path / "scenario_out" / "solution.csv")
    assert len(rows) == 9
    for r in rows:
        slope = 2.0 if r["branch"] == "2" else 1.0
        assert float(r["value"]) == pytest.approx(0.5 + slope * float(r["x"]), abs=1e-15)


def test_missing_beta_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": QUAD_PAIR, "junction": {"family": "kirchhoff"}})
    assert main(["run", str(cfg)]) == 2
    assert "junction.beta" in capsys.readouterr().err


def test_bad_schema_and_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema": 2, "kind": "limiter"}))
    assert main(["run", str(path)]) == 2
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2


def test_validation_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": [{"family": "quadratic", "a": -1}], "junction": {"family": "neumann"}})
    assert main(["run", str(cfg)]) == 3
    err = capsys.readouterr().err
    assert "coercive" in err
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": QUAD_PAIR[:1], "junction": {"family": "affine", "gamma": [-1, 1]}})
    assert main(["run", str(cfg)]) == 3
    assert "L2" in capsys.readouterr().err


def test_runtime_error_exits_4(tmp_path, capsys):
    # a bounded table never changes sign, so no bracket exists
    table = {"family": "tabulated", "axes": [[-1, 1], [-1, 1]], "values": [[1, 1], [1, 1]]}
    cfg = write_config(tmp_path, {"kind": "limiter", "hamiltonians": QUAD_PAIR[:1], "junction": table})
    assert main(["run", str(cfg)]) == 4
    assert "runtime error" in capsys.readouterr().err


def test_inline_limiter(capsys):
    inline = json.dumps({"hamiltonians": QUAD_PAIR, "junction": {"family": "kirchhoff", "beta": [1, 1]}})
    assert main(["limiter", "--inline", inline]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("A0,AL")
    assert float(out[1].split(",")[1]) == pytest.approx(1.0, abs=1e-10)


def test_other_kinds(tmp_path):
    grid = {"dx": 0.05, "M": 21, "T": 0.1}
    hams = QUAD_PAIR[1:] * 2
    init = {"slopes": [1, 1]}
    kinds = {
        "limiter-sweep": {
            "family": [{"family": "quadratic", "coefficients": {"a": 1, "m": {"|p'|^2": 1}}}, QUAD_PAIR[1]],
            "junction": {"family": "kirchhoff", "beta": [1, 1]}, "radii": [0, 1, 2], "dim": 2, "n_directions": 4,
        },
        "solve-viscous": {"hamiltonians": hams, "beta": [1, 1], "epsilon": 0.05, "grid": grid, "initial": init},
        "vvl-sweep": {"hamiltonians": hams, "beta": [1, 1], "epsilons": [0.2, 0.1], "grid": grid, "initial": init},
        "ldp": {"sides": [{"a": 1, "b": 1}, {"a": 1, "b": -1}], "h": "abs", "epsilon": 0.1, "dx": 0.02, "x_eval": [0.0, 0.5]},
    }
    expected = {"limiter-sweep": "sweep.csv", "solve-viscous": "solution.csv", "vvl-sweep": "vvl.csv", "ldp": "ldp.json"}
    for kind, body in kinds.items():
        cfg = write_config(tmp_path, {"kind": kind, **body}, f"{kind}.json")
        assert main(["run", str(cfg)]) == 0, kind
        assert (tmp_path / f"{kind}_out" / expected[kind]).exists()
    report = json.loads((tmp_path / "ldp_out" / "ldp.json").read_text())
    assert {"v_eps", "v_hj", "v_dp", "sup_diff"} <= set(report)
    rows = read_csv(tmp_path / "vvl-sweep_out" / "vvl.csv")
    assert [float(r["epsilon"]) for r in rows] == [0.2, 0.1]


def test_self_test_envelopes(capsys):
    assert main(["self-test", "envelopes", "--seed", "42"]) == 0
    assert "[PASS] 1." in capsys.readouterr().out
