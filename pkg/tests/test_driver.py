import math
from dataclasses import replace

import numpy as np
import pytest

import ieqfem.stepping as stepping
from ieqfem import cli
from ieqfem.config import parse_config
from ieqfem.driver import (
    build_problem, format_bench, four_circles, random_field, run_bench, run_mms, run_simulation, sine_ramp,
    step_square, three_circles,
)
from ieqfem.errors import LinearSolverError
from ieqfem.output import read_csv

BASE = """
[problem]
equation = "{eq}"
eps = {eps}

[mesh]
domain = [-1.0, 1.0, -1.0, 1.0]
nx = {n}

[time]
dt = {dt}
t_end = {t_end}
scheme = "{scheme}"
method = {method}

[initial]
{initial}
"""


def make_cfg(eq="ch", eps=0.1, n=6, dt=1e-3, t_end=1e-2, scheme="bdf1", method=2, initial='builtin = "random"', **out):
    cfg = parse_config(BASE.format(eq=eq, eps=eps, n=n, dt=dt, t_end=t_end, scheme=scheme, method=method, initial=initial))
    return replace(cfg, output=replace(cfg.output, **out))


def test_builtins():
    assert step_square(0.0, 0.1) == 0.71 and step_square(0.3, 0.0) == 0.69
    assert sine_ramp(-0.5, 0.0) == 1.0 and sine_ramp(0.5, 0.3) == -1.0
    assert sine_ramp(0.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    x1 = math.sqrt(2) / 20
    assert sine_ramp(x1 / 2, 0.0) == pytest.approx(-math.sin(math.pi / 4))
    fc = four_circles(0.01)
    assert fc(0.3, 0.0) < 0 < fc(0.0, 0.0)
    tc = three_circles(0.05)
    # positive in the middle disc away from the two large ones, negative elsewhere
    assert tc(0.5, 0.0) > 0.9 and tc(0.0, 2.0) < -0.99 and tc(1.5, 0.0) < -0.99
    r = random_field(1000, 4, amplitude=0.1, offset=0.2)
    assert r.min() >= 0.1 and r.max() < 0.3
    np.testing.assert_array_equal(r, random_field(1000, 4, amplitude=0.1, offset=0.2))


@pytest.mark.parametrize("method", [1, 2, 3])
@pytest.mark.parametrize("eq", ["ch", "ac"])
def test_constant_data(eq, method, tmp_path):
    cfg = make_cfg(eq=eq, method=method, initial="value = 1.0", csv=str(tmp_path / "t.csv"))
    run_simulation(cfg)
    rows = read_csv(tmp_path / "t.csv")
    assert len(rows) == 11
    e = [r["energy"] for r in rows]
    m = [r["mass"] for r in rows]
    assert max(e) - min(e) <= 1e-14 and max(m) - min(m) <= 1e-12


def test_random_run_bit_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    init = 'builtin = "random"\nseed = 42\namplitude = 0.1'
    run_simulation(make_cfg(initial=init, csv=str(a)))
    run_simulation(make_cfg(initial=init, csv=str(b)))
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    run_simulation(make_cfg(initial=init.replace("42", "43"), csv=str(c)))
    assert a.read_bytes() != c.read_bytes()


def test_four_circle_coarsening(tmp_path):
    cfg = make_cfg(eps=0.01, n=32, dt=1e-7, t_end=2e-6, initial='builtin = "four_circles"', csv=str(tmp_path / "t.csv"))
    res = run_simulation(cfg)
    e = [r.energy for r in res.rows]
    m = [r.mass for r in res.rows]
    assert all(b <= a for a, b in zip(e, e[1:]))
    assert max(m) - min(m) <= 1e-8 * (1 + abs(m[0]))


def test_artifacts(tmp_path):
    cfg = make_cfg(
        n=4, t_end=4e-3, scheme="bdf2", csv=str(tmp_path / "t.csv"), vtk_prefix=str(tmp_path / "s"), vtk_every=2,
        manifest=str(tmp_path / "m.json"), wall_clock=True,
    )
    res = run_simulation(cfg)
    assert sorted(p.name for p in tmp_path.glob("s_*.vtk")) == ["s_000000.vtk", "s_000002.vtk", "s_000004.vtk"]
    rows = read_csv(tmp_path / "t.csv")
    assert rows[-1]["energy_bdf2"] is not None and rows[-1]["wall_ms"] > 0
    assert rows[2]["condition_margin"] is not None
    assert res.state.step == 4


def test_initial_projection_choice():
    cfg = make_cfg(eq="ac", eps=0.02, n=10, initial='builtin = "sine_ramp"')
    projected = build_problem(cfg).u0
    cfg2 = replace(cfg, initial=replace(cfg.initial, project=False))
    interp = build_problem(cfg2).u0
    assert interp.max() == pytest.approx(1.0)
    assert projected.max() > 1.0


def test_expression_initial():
    cfg = make_cfg(initial='expression = "0.1*cos(pi*x)"\nproject = false')
    pb = build_problem(cfg)
    np.testing.assert_allclose(pb.u0, 0.1 * np.cos(np.pi * pb.disc.space.dof_coords[:, 0]), atol=1e-15)


def test_bench_small():
    rows = run_bench(make_cfg(n=4, t_end=3e-3), methods=(1, 2, 3))
    assert [r.method for r in rows] == [1, 2, 3] and all(r.steps == 3 for r in rows)
    assert "method" in format_bench(rows)


def test_mms_table_spatial():
    t = run_mms("ac", "bdf1", 2, "spatial", levels=2, dts=[1e-4], t_end=1e-3)
    assert len(t.errors) == 2 and len(t.rates) == 1 and t.rates[0] > 1.5
    assert "rate" in t.format()
    with pytest.raises(ValueError):
        run_mms("ac", mode="sideways")


def write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return str(p)


def test_cli_run_and_codes(tmp_path, capsys, monkeypatch):
    good = write(tmp_path, BASE.format(eq="ac", eps=0.1, n=4, dt=1e-3, t_end=3e-3, scheme="cn", method=3, initial=""))
    assert cli.main(["run", good, "--strict"]) == 0
    assert "3 steps" in capsys.readouterr().out
    bad = tmp_path / "bad.toml"
    bad.write_text("[mesh]\nnx = 0\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "mesh.nx" in capsys.readouterr().err
    monkeypatch.setattr(stepping, "IDENTITY_TOL", -1.0)
    assert cli.main(["run", good, "--strict"]) == 4
    assert cli.main(["run", good]) == 0
    monkeypatch.undo()

    def boom(*a, **k):
        raise LinearSolverError("singular")

    monkeypatch.setattr(cli, "run_simulation", boom)
    assert cli.main(["run", good]) == 3


def test_cli_bench_and_mms(tmp_path, capsys):
    cfg = write(tmp_path, BASE.format(eq="ch", eps=0.1, n=4, dt=1e-3, t_end=2e-3, scheme="bdf1", method=2, initial=""))
    assert cli.main(["bench", cfg, "--methods", "1,3"]) == 0
    assert cli.main(["bench", cfg, "--methods", "1,7"]) == 2
    assert cli.main(["mms", "ch", "--scheme", "cn"]) == 2
    assert cli.main(["mms", "ac", "--levels", "1"]) == 2


def test_cli_threads_env(tmp_path, monkeypatch, capsys):
    cfg = write(tmp_path, BASE.format(eq="ac", eps=0.1, n=4, dt=1e-3, t_end=2e-3, scheme="bdf1", method=2, initial=""))
    monkeypatch.setenv("THREADS", "2")
    assert cli.main(["run", cfg]) == 0
    monkeypatch.setenv("THREADS", "zero")
    assert cli.main(["run", cfg]) == 2
    monkeypatch.delenv("THREADS")
    cli.main(["run", cfg])
