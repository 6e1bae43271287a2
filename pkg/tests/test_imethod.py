import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvstab.grid import Grid, h1_norm, inner, sobolev_norm
from kdvstab.imethod import (
    IMultiplier,
    ISchedule,
    InvalidScheduleError,
    apply_I,
    commutator,
    m_eval,
    product_rule_check,
    schedule_N,
    schedule_N_clamped,
    alternative_exponent_coeff,
)

from conftest import bump


def test_low_frequency_identity():
    im = IMultiplier(8.0, 0.9)
    assert m_eval(im, 4.0) == 1.0
    assert m_eval(im, 0.0) == 1.0


def test_high_frequency_power_law():
    im = IMultiplier(5.0, 7 / 8)
    assert m_eval(im, 100.0) == pytest.approx(20 ** (-1 / 8), rel=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        IMultiplier(0.5, 0.9)
    with pytest.raises(ValueError):
        IMultiplier(2.0, 0.7)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 500.0), st.floats(0.76, 0.99))
def test_even_monotone_bounded(N, s):
    im = IMultiplier(N, s)
    xi = np.linspace(0, 200 * N, 20001)
    m = im(xi)
    assert np.all(np.diff(m) <= 1e-15)
    assert np.all((m > 0) & (m <= 1))
    assert np.array_equal(im(-xi), m)


def test_bridge_is_c1():
    im = IMultiplier(3.0, 0.8)
    for edge in (3.0, 30.0):
        h = 1e-7 * edge
        left = (im(edge) - im(edge - h)) / h
        right = (im(edge + h) - im(edge)) / h
        assert abs(left - right) < 1e-5 / edge


def test_band_limited_unchanged():
    g = Grid(256, 2 * math.pi)
    f = np.cos(3 * g.x) + 0.2 * np.sin(5 * g.x)
    assert np.allclose(apply_I(IMultiplier(10.0), f, g), f, atol=1e-14)


def test_identity_above_nyquist(rng):
    g = Grid(128, 10.0)
    f = rng.standard_normal(128)
    assert np.allclose(apply_I(IMultiplier(10 * g.nyquist + 1), f, g), f, atol=1e-13)


def test_self_adjoint(rng):
    g = Grid(256, 30.0)
    f, h = rng.standard_normal((2, 256))
    im = IMultiplier(2.0, 0.85)
    assert inner(apply_I(im, f, g), h, g) == pytest.approx(inner(f, apply_I(im, h, g), g), abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.0, 30.0), st.floats(0.76, 0.99))
def test_h1_bound(seed, N, s):
    # m <= (<xi>/N)^{s-1} up to two derived factors: the bridge sits above the
    # power law by at most 10^{(1-s) 4/27}, and <xi> != |xi| near N
    g = Grid(512, 40.0)
    f = np.random.default_rng(seed).standard_normal(512)
    slack = 10 ** ((1 - s) * 4 / 27) * (1 + 1 / N**2) ** ((1 - s) / 2)
    assert h1_norm(apply_I(IMultiplier(N, s), f, g), g) <= N ** (1 - s) * sobolev_norm(f, g, s) * slack * (1 + 1e-10)


def test_commutator_vanishes_on_low_modes():
    g = Grid(256, 2 * math.pi)
    u = np.cos(2 * g.x)
    v = np.sin(3 * g.x)
    assert np.max(np.abs(commutator(IMultiplier(12.0), u, v, g))) < 1e-12
    assert np.max(np.abs(commutator(IMultiplier(2.0), u, np.zeros(256), g))) == 0.0


def _commutator_oracle(im, u, v, g):
    n = g.num_points
    uh, vh = np.fft.fft(u) / n, np.fft.fft(v) / n
    ks = [k for k in range(-n // 2 + 1, n // 2)]
    prod = {}
    for k1 in ks:
        for k2 in ks:
            k = k1 + k2
            if abs(k) < n // 2:
                prod[k] = prod.get(k, 0) + uh[k1] * vh[k2]
    xi = lambda k: 2 * math.pi * k / g.box_length
    out = np.zeros(n, dtype=complex)
    for k in ks:
        Iuv = float(im(xi(k))) * prod.get(k, 0)
        IuIv = sum(
            float(im(xi(k1))) * uh[k1] * float(im(xi(k - k1))) * vh[k - k1]
            for k1 in ks
            if abs(k - k1) < n // 2
        )
        out += (Iuv - IuIv) * np.exp(2j * math.pi * k * np.arange(n) / n)
    return out.real


def test_commutator_against_convolution_oracle(rng):
    g = Grid(64, 8.0)
    u, v = rng.standard_normal((2, 64))
    im = IMultiplier(3.0, 0.8)
    assert np.max(np.abs(commutator(im, u, v, g) - _commutator_oracle(im, u, v, g))) < 1e-10


def test_commutator_decreases_with_N():
    g = Grid(2048, 40.0)
    u = np.exp(-(g.x**2) * 16)
    v = np.exp(-((g.x - 0.3) ** 2) * 9)
    vals = [np.linalg.norm(commutator(IMultiplier(N, 0.9), u, v, g)) for N in (4, 8, 16, 32, 64)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_schedule_basics():
    sch = ISchedule(0.9, 0.01, 7 / 8)
    assert schedule_N(sch, 0) == 1.0
    assert schedule_N(sch, 1) == pytest.approx(0.9 ** (-1 / (7 / 4 - 7 / 8) + 0.01), rel=1e-15)
    Ns = [schedule_N(sch, n) for n in range(21)]
    assert all(b > a for a, b in zip(Ns, Ns[1:]))


def test_schedule_rejects_nonnegative_coefficient():
    with pytest.raises(InvalidScheduleError):
        ISchedule(0.9, 0.01, 0.9, exponent_coeff=alternative_exponent_coeff(0.9))
    with pytest.raises(InvalidScheduleError):
        ISchedule(1.2)


def test_schedule_clamp():
    sch = ISchedule(0.5, 0.01, 0.9, nyquist=10.0)
    N, clamped = schedule_N_clamped(sch, 50)
    assert clamped and N == 10.0
    assert schedule_N_clamped(sch, 0) == (1.0, False)


def test_product_rule_trivial_and_gaussian():
    g = Grid(1024, 60.0)
    im = IMultiplier(4.0, 0.9)
    z = np.zeros(1024)
    f = np.exp(-(g.x**2) * 4)
    r0 = product_rule_check(im, 0.5, z, f, g)
    assert r0.lhs == 0.0 and r0.satisfied
    r = product_rule_check(im, 0.5, f, f, g)
    assert r.satisfied and 0 < r.ratio < 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_product_rule_random(seed):
    # widths >= 1 keep the bumps resolved; unresolved fields produce spurious violations
    r = np.random.default_rng(seed)
    g = Grid(2048, 60.0)
    fs = [
        bump(g.x, r.uniform(-15, 15), r.uniform(1, 5)) * np.cos(r.uniform(0, 6) * g.x + r.uniform(0, 6))
        for _ in range(2)
    ]
    im = IMultiplier(r.uniform(1, 40), r.uniform(0.76, 0.99))
    assert product_rule_check(im, r.uniform(0, 0.57), fs[0], fs[1], g).satisfied
