import json
import os
import subprocess
import sys

import numpy as np
import pytest

from poisson_reduce.cli import main
from poisson_reduce.config import RunConfig, loads
from poisson_reduce.errors import ConfigError, SchemaError
from poisson_reduce.plot import read_csv, render_svg

HEAVY = {
    "version": 1,
    "inertia": [2.0, 1.5, 1.0],
    "potential": {"kind": "linear", "c": [0.0, 0.0, 1.0]},
    "initial": {"kind": "full", "q": [[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [-0.8, 0.0, 0.6]],
                "omega": [0.3, 0.5, 2.0]},
    "integrator": {"step": 0.01, "t_end": 2.0},
    "outputs": {"trajectory_csv": "out.csv", "report_json": "report.json"},
}

REDUCED = {
    "version": 1,
    "inertia": [2.0, 1.5, 1.0],
    "potential": {"kind": "linear", "c": [0.0, 0.0, 1.0]},
    "initial": {"kind": "reduced", "nu": [0.6, 0.0, 0.8], "nudot": [0.0, 2.0, 0.0], "k": 0.5},
    "integrator": {"step": 0.002, "t_end": 2.0},
    "outputs": {"trajectory_csv": "red.csv", "report_json": "red.json", "plot_svg": "red.svg"},
    "curvature": True,
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def with_(base, **changes):
    cfg = json.loads(json.dumps(base))
    for key, value in changes.items():
        node = cfg
        *path, last = key.split("__")
        for part in path:
            node = node[part]
        node[last] = value
    return cfg


def test_config_round_trip(tmp_path):
    for base in (HEAVY, REDUCED):
        cfg = loads(json.dumps(base))
        again = loads(cfg.dumps())
        assert again == cfg
        assert again.dumps() == cfg.dumps()


@pytest.mark.parametrize("change, field", [
    ({"inertia": [1.0, 0.0, 3.0]}, "inertia"),
    ({"inertia": [1.0, "a", 1.0]}, "inertia[1]"),
    ({"integrator__step": -1.0}, "integrator"),
    ({"integrator__wobble": 1}, "integrator"),
    ({"potential__kind": "cubic"}, "potential.kind"),
    ({"initial__k": 1.0}, "initial.k"),
    ({"curvature": True}, "curvature"),
    ({"version": 2}, "version"),
    ({"extra": 1}, "config"),
])
def test_malformed_config_names_the_field(tmp_path, capsys, change, field):
    code = main(["simulate-full", write(tmp_path, with_(HEAVY, **change))])
    assert code == 1
    err = capsys.readouterr().err
    assert field in err
    assert not (tmp_path / "out.csv").exists()


def test_reduced_config_requires_k():
    cfg = with_(REDUCED)
    del cfg["initial"]["k"]
    with pytest.raises(ConfigError, match="initial.k"):
        RunConfig.from_dict(cfg)


def test_json_syntax_error_has_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"version": 1,\n  "inertia": [1, 2 3]}')
    assert main(["simulate-full", str(p)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate-full", str(tmp_path / "nope.json")]) == 1


def test_wrong_initial_kind_for_subcommand(tmp_path):
    assert main(["simulate-reduced", write(tmp_path, HEAVY)]) == 1


def test_simulate_full_outputs(tmp_path, capsys):
    assert main(["simulate-full", write(tmp_path, HEAVY)]) == 0
    data = read_csv(tmp_path / "out.csv")
    assert len(data["t"]) == 201
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["samples"] == 201
    assert report["max_rel_energy_drift"] <= 1e-7
    assert json.loads(capsys.readouterr().out) == report


def test_free_top_report(tmp_path):
    cfg = with_(HEAVY, potential={"kind": "zero"}, integrator={"step": 0.001, "t_end": 10.0})
    cfg["initial"]["omega"] = [0.2, 1.0, 0.4]
    assert main(["simulate-full", "--quiet", write(tmp_path, cfg)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["max_rel_energy_drift"] <= 1e-8
    assert report["max_momentum_drift"] <= 1e-8


def test_output_is_bitwise_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert main(["simulate-reduced", "--quiet", write(a, REDUCED)]) == 0
    assert main(["simulate-reduced", "--quiet", write(b, REDUCED)]) == 0
    for name in ("red.csv", "red.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_reduced_run_with_curvature(tmp_path):
    assert main(["simulate-reduced", "--quiet", write(tmp_path, REDUCED)]) == 0
    report = json.loads((tmp_path / "red.json").read_text())
    assert report["min_kg"] > 0
    data = read_csv(tmp_path / "red.csv")
    assert np.isnan(data["kg"][:2]).all() and np.isfinite(data["kg"][2:-2]).all()
    assert set(data["chart_id"]) <= {"north", "south"}


def test_reduced_great_circle_closes_and_plots_closed_path(tmp_path):
    T = 2 * np.pi
    cfg = with_(REDUCED, inertia=[1.0, 1.0, 1.0], potential={"kind": "zero"}, curvature=False,
                integrator={"step": T / 4000, "t_end": T})
    cfg["initial"].update(nu=[1.0, 0.0, 0.0], nudot=[0.0, 0.6, 0.8], k=0.0)
    assert main(["simulate-reduced", "--quiet", write(tmp_path, cfg)]) == 0
    assert json.loads((tmp_path / "red.json").read_text())["closure_error"] <= 1e-6
    svg = (tmp_path / "red.svg").read_text()
    assert svg.count("<path") == 1 and ' Z"' in svg


def test_turning_region_exits_3_without_outputs(tmp_path, capsys):
    cfg = with_(REDUCED)
    cfg["initial"]["nudot"] = [0.0, 0.0, 0.0]
    assert main(["simulate-reduced", write(tmp_path, cfg)]) == 3
    assert "turning region" in capsys.readouterr().err
    assert not any((tmp_path / n).exists() for n in ("red.csv", "red.json", "red.svg"))


def test_blown_invariant_exits_2(tmp_path):
    cfg = with_(HEAVY, integrator={"step": 0.3, "t_end": 3.0})
    cfg["initial"]["omega"] = [10.0, 20.0, 30.0]
    assert main(["simulate-full", "--quiet", write(tmp_path, cfg)]) == 2
    assert not (tmp_path / "out.csv").exists()


def test_jobs_fan_out(tmp_path):
    paths = []
    for i in range(3):
        d = tmp_path / f"r{i}"
        d.mkdir()
        paths.append(write(d, HEAVY))
    assert main(["--jobs", "2", "simulate-full", "--quiet", *paths]) == 0
    first = (tmp_path / "r0" / "out.csv").read_bytes()
    assert all((tmp_path / f"r{i}" / "out.csv").read_bytes() == first for i in range(3))


def test_jobs_must_be_positive(capsys):
    assert main(["verify", "--jobs", "0"]) == 1


def test_verify_selected_checks(capsys):
    assert main(["verify", "--checks", "projection,free_top,larmor"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and [c["id"] for c in report["checks"]] == ["projection", "free_top", "larmor"]


def test_verify_unknown_check():
    assert main(["verify", "--checks", "bogus"]) == 1


def test_verify_detects_injected_fault(tmp_path, capsys):
    cfg = with_(REDUCED, curvature_scale=1.01)
    assert main(["verify", write(tmp_path, cfg), "--checks", "projection"]) == 4
    out = capsys.readouterr()
    assert "projection" in out.err
    assert json.loads(out.out)["failed"] == ["projection"]


def test_verify_skips_positivity_for_degenerate_inertia(tmp_path, capsys):
    cfg = with_(REDUCED, inertia=[1.0, 1.0, 2.0])
    assert main(["verify", write(tmp_path, cfg), "--checks", "positivity,curvature_law"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert {c["status"] for c in report["checks"]} == {"skip"}


def test_plot_rejects_bad_csv(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["plot", str(empty), str(tmp_path / "x.svg")]) == 1
    assert "empty" in capsys.readouterr().err
    assert not (tmp_path / "x.svg").exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("t,a1,a2,a3\n0,1,0\n")
    with pytest.raises(SchemaError, match="line 2"):
        read_csv(bad)
    bad.write_text("t,a1,a2\n0,1,0\n")
    with pytest.raises(SchemaError, match="a3"):
        read_csv(bad)


def test_plot_is_deterministic(tmp_path):
    assert main(["simulate-full", "--quiet", write(tmp_path, HEAVY)]) == 0
    csv = str(tmp_path / "out.csv")
    assert main(["plot", csv, str(tmp_path / "1.svg")]) == 0
    assert main(["plot", csv, str(tmp_path / "2.svg")]) == 0
    one = (tmp_path / "1.svg").read_bytes()
    assert one == (tmp_path / "2.svg").read_bytes()
    assert one.count(b"<path") == 1 and one.count(b"<polyline") == 2
    assert render_svg(read_csv(csv)).encode() == one


def test_log_level_from_environment(tmp_path):
    env = dict(os.environ, POISSON_REDUCE_LOG="debug")
    cfg = with_(REDUCED, curvature=False, integrator={"step": 0.002, "t_end": 3.0})
    proc = subprocess.run([sys.executable, "-m", "poisson_reduce", "simulate-reduced",
                           write(tmp_path, cfg)], env=env, capture_output=True, text=True)
    assert proc.returncode == 0
    assert "chart switch" in proc.stderr
