import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from touchdown.analysis import analyze
from touchdown.cli import main
from touchdown.config import (
    ConfigError,
    DomainSpec,
    ProfileSpec,
    RunConfig,
    SolverSpec,
    dump_config,
    from_dict,
    load_config,
    save_config,
)
from touchdown.grid import build_grid, interval
from touchdown.profiles import BallSpec, constant, make_m_shaped
from touchdown.report import (
    dumps_report,
    format_float,
    read_profile_csv,
    read_snapshots,
    write_profile_csv,
    write_report,
    write_snapshots,
)
from touchdown.solver import SolverConfig, solve


def write_json(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


# ------------------------------------------------------------------ config

def test_minimal_config_fills_defaults(tmp_path):
    path = write_json(tmp_path, {"domain": {"kind": "interval", "R": 1.0, "m": 100},
                                 "profile": {"family": "constant", "params": {"c": 5.0}},
                                 "solver": {"p": 1.0}})
    cfg = load_config(path)
    assert cfg.solver.eps_stop == 1e-4 and cfg.solver.dt_safety == 0.1 and cfg.solver.fit_window == 40
    assert cfg.solver.t_max is None and cfg.experiment.kind == "none" and cfg.seed == 0
    assert cfg.build_profile().sup == 5.0


def test_eps_stop_rejected_with_constraint(tmp_path):
    path = write_json(tmp_path, {"solver": {"eps_stop": 2}})
    with pytest.raises(ConfigError, match=r"eps_stop ∈ \(0,1\)"):
        load_config(path)


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write_json(tmp_path, {"solvr": {}}))
    with pytest.raises(ConfigError, match="domain.size"):
        load_config(write_json(tmp_path, {"domain": {"size": 3}}))
    with pytest.raises(ConfigError, match="unknown"):
        load_config(write_json(tmp_path, {"profile": {"family": "constant", "params": {"c": 1, "cc": 2}}}))


def test_all_violations_reported(tmp_path):
    path = write_json(tmp_path, {"domain": {"m": 2, "R": -1}, "solver": {"eps_stop": 0, "p": 0}})
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert len(info.value.problems) == 4


def test_parse_error_has_line_number(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "solver": {\n    "p": 2,\n  }\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 4 and "line 4" in str(info.value)


def test_constructor_preconditions_checked(tmp_path):
    path = write_json(tmp_path, {"profile": {"family": "m_shaped", "params": {"f0": 1, "fL": 5, "L": 3}}})
    with pytest.raises(ConfigError, match="L < R"):
        load_config(path)


def test_round_trip(tmp_path):
    cfg = from_dict({"domain": {"kind": "radial_ball", "R": 0.5, "n": 3, "m": 40},
                     "profile": {"family": "two_bump", "params": {"r": 0.25, "eps": 0.1, "A": 40, "eta": 0.05}},
                     "solver": {"p": 1.5, "dt_init": 1e-5, "t_max": 0.2},
                     "analysis": {"floor_ball": {"center": 0.0, "radius": 0.2},
                                  "regions": [{"kind": "collar", "radius": 0.4}], "monitor_J": True},
                     "experiment": {"kind": "sweep", "q": "inf", "sizes": [0.3, 0.1]},
                     "output": {"report": "r.json"}, "seed": 7})
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert dump_config(load_config(path)) == path.read_text(encoding="utf-8")


@settings(max_examples=30, deadline=None)
@given(R=st.floats(0.1, 10), m=st.integers(3, 500), p=st.floats(0.1, 5), c=st.floats(0, 100),
       eps=st.floats(1e-6, 0.5), seed=st.integers(0, 2**31))
def test_round_trip_property(R, m, p, c, eps, seed):
    cfg = RunConfig(domain=DomainSpec("interval", R, 1, m), profile=ProfileSpec("constant", {"c": c}),
                    solver=SolverSpec(p=p, eps_stop=eps), seed=seed)
    assert from_dict(json.loads(dump_config(cfg))) == cfg


# ------------------------------------------------------------------ report

def test_format_float_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 2.0**60, -7.25e-9):
        assert float(format_float(x)) == x
    assert format_float(math.inf) == '"inf"'


@pytest.fixture(scope="module")
def small_run():
    g = build_grid(interval(1.0), 60)
    return solve(g, constant(g, 10.0), SolverConfig())


def test_report_byte_identical(tmp_path, small_run):
    rep = analyze(small_run, floor_ball=BallSpec(0.0, 0.9))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_report(rep, a)
    write_report(analyze(small_run, floor_ball=BallSpec(0.0, 0.9)), b)
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text(encoding="utf-8"))
    for key in ("T_lower", "T_upper", "T_est", "touchdown_set", "gamma_emp"):
        assert key in data
    assert list(data)[:3] == ["kind", "terminated", "t_end"]
    assert data["T_est"] == rep.T_est


def test_snapshot_csv(tmp_path, small_run):
    path = tmp_path / "s.csv"
    write_snapshots(small_run, path)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode("utf-8").split("\n")[:-1]
    assert lines[0] == "t,x,u"
    assert len(lines) - 1 == len(small_run.snap_t) * small_run.grid.size
    rows = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
    assert rows == sorted(rows, key=lambda r: (r[0], r[1]))
    t, x, u = read_snapshots(path)
    np.testing.assert_array_equal(t, small_run.snap_t)
    np.testing.assert_array_equal(u, small_run.snap_u)


def test_profile_csv_round_trip(tmp_path):
    g = build_grid(interval(1.0), 50)
    f = make_m_shaped(g, 0.5, 7.0, 0.4)
    path = tmp_path / "f.csv"
    write_profile_csv(f, path)
    np.testing.assert_array_equal(read_profile_csv(g, path).values, f.values)


# --------------------------------------------------------------------- cli

def test_bounds_output(capsys):
    assert main(["bounds", "--p", "2", "--n", "1", "--mu", "10", "--r", "0.9"]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert float(out["T_lower"]) == pytest.approx(1 / 30, rel=1e-6)
    assert float(out["T_upper"]) == pytest.approx(1 / (3 * (10 - 0.365541 / 0.81)), rel=1e-6)
    assert float(out["mu0"]) == pytest.approx(0.365541, abs=5e-7)
    assert all(len(v.replace("0.", "").lstrip("0")) == 7 for v in out.values())


def test_bounds_inapplicable(capsys):
    assert main(["bounds", "--p", "2", "--n", "1", "--mu", "0.1", "--r", "0.9"]) == 0
    assert "T_upper=inapplicable" in capsys.readouterr().out


def test_simulate_zero_profile(tmp_path):
    report = tmp_path / "r.json"
    code = main(["simulate", "--family", "constant", "--param", "c=0", "--t-max", "1", "--m", "40",
                 "--report", str(report), "--snapshots", str(tmp_path / "s.csv")])
    assert code == 0
    assert json.loads(report.read_text())["terminated"] == "t_max_reached"


def test_simulate_m2_is_validation_error():
    assert main(["simulate", "--m", "2"]) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    assert main([]) == 1


def test_bad_config_path_is_validation_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_unwritable_report_is_io_error(tmp_path):
    assert main(["simulate", "--m", "40", "--report", str(tmp_path / "no" / "r.json")]) == 3


def test_simulate_from_config(tmp_path):
    cfg = write_json(tmp_path, {"domain": {"kind": "radial_ball", "R": 1.0, "n": 1, "m": 200},
                                "profile": {"family": "two_bump",
                                            "params": {"r": 0.5, "eps": 0.2, "A": 40, "eta": 0.05}},
                                "analysis": {"regions": [{"kind": "ball", "radius": 0.3},
                                                         {"kind": "collar", "radius": 0.8}]},
                                "output": {"report": str(tmp_path / "r.json")}})
    assert main(["simulate", "--config", str(cfg)]) == 0
    data = json.loads((tmp_path / "r.json").read_text())
    kinds = [c["kind"] for c in data["certificates"]]
    assert kinds == ["type_I", "no_touchdown_ball", "no_touchdown_boundary_collar"]


def test_sweep_and_bisect_commands(tmp_path):
    assert main(["sweep", "--m", "100", "--sizes", "0.2", "0.1", "--report", str(tmp_path / "s.json")]) == 0
    rows = json.loads((tmp_path / "s.json").read_text())["rows"]
    assert [r["size"] for r in rows] == [0.1, 0.2]
    assert main(["bisect", "--m", "200", "--tol-h", "2", "--no-confirm",
                 "--report", str(tmp_path / "b.json")]) == 0
    assert json.loads((tmp_path / "b.json").read_text())["bracket"] <= 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "touchdown.cli", "bounds", "--p", "1", "--n", "3",
                           "--mu", "5", "--r", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0 and "mu0=" in proc.stdout
