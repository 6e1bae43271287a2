import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvstab.grid import Grid, cumulative_integral, derivative, inner, l2_norm
from kdvstab.kdv import hamiltonian, mass
from kdvstab.soliton import (
    SolitonParams,
    eval_soliton,
    soliton_antiderivative_dc,
    soliton_dc,
    soliton_dy,
    soliton_hamiltonian,
    soliton_mass,
)

G = Grid(4096, 200.0)


def test_peak_value():
    assert eval_soliton(SolitonParams(1.0), 0.0) == pytest.approx(1.5)
    assert eval_soliton(SolitonParams(2.0, x0=3.0), 3.0) == pytest.approx(3.0)


def test_rejects_nonpositive_speed():
    with pytest.raises(ValueError):
        SolitonParams(0.0)
    with pytest.raises(ValueError):
        SolitonParams(-1.0)


def test_no_overflow_far_out():
    with np.errstate(over="raise", invalid="raise"):
        v = eval_soliton(SolitonParams(4.0), np.array([-1e4, 1e4]))
    assert np.all(v == 0.0) or np.all(v < 1e-300)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_traveling_wave_ode(c):
    # psi'' = c psi - psi^2 after one integration of -c psi' + psi''' + (psi^2)' = 0
    p = SolitonParams(c)
    psi = eval_soliton(p, G.x)
    res = derivative(psi, G, 2) - c * psi + psi**2
    assert np.max(np.abs(res)) < 1e-10


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_mass_and_hamiltonian_closed_forms(c):
    psi = eval_soliton(SolitonParams(c), G.x)
    assert mass(psi, G) == pytest.approx(soliton_mass(c), rel=1e-12)
    assert hamiltonian(psi, G) == pytest.approx(soliton_hamiltonian(c), rel=1e-10)


def test_dy_matches_spectral_derivative():
    p = SolitonParams(1.3, x0=2.0)
    assert np.max(np.abs(soliton_dy(p, G.x) - derivative(eval_soliton(p, G.x), G))) < 1e-11


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 4.0))
def test_dc_matches_finite_difference(c):
    h = 1e-5 * c
    y = np.linspace(-20, 20, 101)
    fd = (eval_soliton(SolitonParams(c + h), y) - eval_soliton(SolitonParams(c - h), y)) / (2 * h)
    assert np.max(np.abs(fd - soliton_dc(SolitonParams(c), y))) < 1e-7 * max(1.0, c)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_antiderivative_against_quadrature(c):
    p = SolitonParams(c)
    F = soliton_antiderivative_dc(p, G.x)
    Q = cumulative_integral(soliton_dc(p, G.x), G)
    assert np.max(np.abs(F - Q)) < 1e-12


def test_antiderivative_relative_accuracy_in_left_tail():
    # the tail is multiplied by e^{-ay} later; relative accuracy matters there
    p = SolitonParams(1.0)
    y = np.array([-60.0, -80.0])
    z = y / 2
    ref = 3.0 * np.exp(2 * z) + 0.75 * y * 4 * np.exp(2 * z)  # leading asymptotics
    assert np.allclose(soliton_antiderivative_dc(p, y), ref, rtol=1e-12)


def test_mass_derivative_identity():
    # d/dc int psi^2 = 2 <psi, d_c psi> = 9 c^{1/2}
    c = 1.7
    p = SolitonParams(c)
    assert 2 * inner(eval_soliton(p, G.x), soliton_dc(p, G.x), G) == pytest.approx(9 * math.sqrt(c), rel=1e-12)
