import math

import numpy as np
import pytest

from kdvstab.grid import Grid, l2_norm
from kdvstab.kdv import (
    InstabilityError,
    KdVStepper,
    SolverConfig,
    TimeSeries,
    hamiltonian,
    mass,
    run,
    step,
)
from kdvstab.soliton import SolitonParams, eval_soliton


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(scheme="euler")


def test_stability_check_rejects_huge_dt():
    g = Grid(4096, 200.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=1.0).check(g)


def test_time_series_monotone():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.0]), {})


def test_zero_stays_zero():
    g = Grid(256, 50.0)
    u = step(np.zeros(256), g, SolverConfig(dt=1e-3))
    assert np.all(u == 0.0)


def test_linear_airy_mode_exact():
    g = Grid(128, 2 * math.pi)
    u0 = 1e-3 * np.cos(3 * g.x)
    cfg = SolverConfig(dt=1e-3, t_end=0.1, nonlinear=False)
    u, _ = run(u0, g, cfg)
    # u_t + u_xxx = 0: cos(3x) -> cos(3x + 27 t)
    assert np.max(np.abs(u - 1e-3 * np.cos(3 * g.x + 27 * 0.1))) < 1e-14


@pytest.mark.parametrize("scheme", ["ifrk4", "etdrk4"])
def test_soliton_short_run(scheme):
    g = Grid(1024, 80.0)
    c = 1.0
    u0 = eval_soliton(SolitonParams(c), g.x)
    cfg = SolverConfig(dt=2e-3, t_end=1.0, scheme=scheme)
    u, ts = run(u0, g, cfg, every=50)
    exact = eval_soliton(SolitonParams(c, x0=c * 1.0), g.x)
    assert l2_norm(u - exact, g) < 1e-8
    m = ts.values["mass"]
    assert np.max(np.abs(m - m[0])) / m[0] < 1e-12


@pytest.mark.parametrize("scheme", ["ifrk4", "etdrk4"])
def test_fourth_order_in_time(scheme):
    # self-convergence cancels the spatial / box-truncation floor
    g = Grid(256, 40.0)
    u0 = eval_soliton(SolitonParams(2.0), g.x)
    sols = []
    for dt in (0.008, 0.004, 0.002):
        u, _ = run(u0, g, SolverConfig(dt=dt, t_end=1.0, dealias_enabled=False, scheme=scheme), every=10000)
        sols.append(u)
    e1 = l2_norm(sols[0] - sols[1], g)
    e2 = l2_norm(sols[1] - sols[2], g)
    assert math.log2(e1 / e2) > 3.5


def test_blowup_guard_raises_with_partial_series():
    g = Grid(512, 40.0)
    u0 = eval_soliton(SolitonParams(1.0), g.x)
    cfg = SolverConfig(dt=0.5, t_end=50.0)
    st = KdVStepper(g, cfg, check=False)
    with pytest.raises(InstabilityError) as ei:
        uh = st.fft.rfft(u0)
        for i in range(100):
            uh = st.advance(uh)
            st.guard(uh, (i + 1) * cfg.dt)
    assert ei.value.t is not None


def test_hamiltonian_of_zero():
    g = Grid(64, 10.0)
    assert hamiltonian(np.zeros(64), g) == 0.0
    assert mass(np.zeros(64), g) == 0.0
