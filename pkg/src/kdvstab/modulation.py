"""Modulated soliton perturbation: F~, G~, the 2x2 modulation system, coupled evolution.

Conventions
-----------
The co-moving coordinate is ``y = x - X(t) - gamma_sign * gamma(t)`` with
``X = int_0^t c``.  ``u(x, t) = psi_{c(t)}(y) + v(y, t)`` exactly, for any
choice of modulation rates.  With ``gamma_sign = -1`` (default) the
perturbation equation carries ``(c - c0 - gamma_dot)`` and
``-(c_dot d_c + gamma_dot d_y) psi_c``; ``gamma_sign = +1`` flips every
gamma-dot term together.

``v`` is the single evolved field; ``v_tilde = I_N v`` and
``w_tilde = omega_{a,R} I_N v`` are derived from it.  The projections use the
biorthogonal pair calibrated at ``c0`` and held fixed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .grid import Grid, RealFFT, h1_norm, inner, l2_norm
from .imethod import IMultiplier
from .kdv import InstabilityError, BLOWUP_THRESHOLD
from .soliton import SolitonParams, eval_soliton, soliton_dc, soliton_dy
from .spectral_ops import SpectralPair, calibrate_thetas, check_admissible
from .weighted import OverflowRiskError, OVERFLOW_GUARD

log = logging.getLogger(__name__)


class SingularModulationError(np.linalg.LinAlgError):
    pass


def sponge_profile(grid: Grid, width: float, strength: float) -> np.ndarray:
    """Smooth damping rate concentrated on the periodic seam y = +-L/2."""
    if width <= 0 or strength <= 0:
        return np.zeros(grid.num_points)
    d = 0.5 * grid.box_length - np.abs(grid.x)
    t = np.clip(1.0 - d / width, 0.0, 1.0)
    return strength * t * t * (3.0 - 2.0 * t)


def weight_taper(y, R: float, width: float) -> np.ndarray:
    """C^infinity cutoff: 1 for y <= R, 0 for y >= R + width (sharp if width = 0).

    A jump in the weight makes I_N(omega eta_k) ring across the whole box;
    the smooth taper keeps the test functions local.
    """
    y = np.asarray(y, dtype=float)
    if not math.isfinite(R):
        return np.ones_like(y)
    if width <= 0:
        return np.where(y < R, 1.0, 0.0)
    x = np.clip((y - R) / width, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f0 = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        f1 = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    return f0 / (f0 + f1)


@dataclass
class ModulationContext:
    grid: Grid
    a: float
    c0: float
    s: float = 0.9
    R: float = 20.0
    gamma_sign: int = -1
    commutator_coeff: float = 2.0
    sponge_width: float = 30.0
    sponge_strength: float = 20.0
    taper_width: float = 5.0
    pair: Optional[SpectralPair] = None

    def __post_init__(self):
        check_admissible(self.a, self.c0)
        if self.gamma_sign not in (-1, 1):
            raise ValueError("gamma_sign must be +1 or -1")
        g = self.grid
        y = g.x
        if self.pair is None:
            self.pair = calibrate_thetas(g, self.a, self.c0)
        with np.errstate(over="ignore"):
            w = np.exp(self.a * y)
        self.weight = w * weight_taper(y, self.R, self.taper_width)
        if not np.all(np.isfinite(self.weight)) or self.weight.max() > OVERFLOW_GUARD:
            raise OverflowRiskError("weight overflows on this grid; lower R")
        self.sponge = sponge_profile(g, self.sponge_width, self.sponge_strength)
        self._fft = RealFFT(g.num_points)
        self._kk = 2 * np.pi * np.fft.rfftfreq(g.num_points, d=g.spacing)
        self._ik = 1j * g.rwavenumbers
        self._use_pair(self.pair)

    def _use_pair(self, pair: SpectralPair) -> None:
        g = self.grid
        self.pair = pair
        self.eta = (pair.eta1, pair.eta2)
        self.eta_dy = pair.eta_dy()
        self.eta_h1 = tuple(
            math.sqrt(l2_norm(e, g) ** 2 + l2_norm(d, g) ** 2) for e, d in zip(self.eta, self.eta_dy)
        )
        self.zeta = (pair.zeta1, pair.zeta2)
        self._h_cache: dict = {}

    def recalibrate(self, c: float) -> None:
        """Swap in the biorthogonal pair calibrated at speed ``c`` (frame speed stays c0)."""
        if c != self.pair.c:
            self._use_pair(calibrate_thetas(self.grid, self.a, c))

    # -- helpers -----------------------------------------------------------
    def multiplier(self, N: float) -> IMultiplier:
        return IMultiplier(N, self.s)

    def m_symbol(self, N: float) -> np.ndarray:
        return self.multiplier(N)(self._kk)

    def I(self, f: np.ndarray, N: float) -> np.ndarray:
        return self._fft.irfft(self.m_symbol(N) * self._fft.rfft(f))

    def dy(self, f: np.ndarray) -> np.ndarray:
        return self._fft.irfft(self._ik * self._fft.rfft(f))

    def test_functions(self, N: float) -> tuple[np.ndarray, np.ndarray]:
        """rfft of I_N(omega eta_k): <w~, eta_k> = <v, I_N(omega eta_k)>."""
        key = float(N)
        if key not in self._h_cache:
            m = self.m_symbol(N)
            self._h_cache = {key: tuple(m * self._fft.rfft(self.weight * e) for e in self.eta)}
        return self._h_cache[key]

    def spectral_inner(self, fh: np.ndarray, gh: np.ndarray) -> float:
        """sum_j f_j g_j dx from rfft coefficients."""
        n = self.grid.num_points
        prod = (fh * np.conj(gh)).real
        total = prod[0] + prod[-1] + 2.0 * prod[1:-1].sum()
        return float(total * self.grid.spacing / n)

    def soliton(self, c: float):
        # a nonpositive speed inside an RK stage means the step has blown up
        if not (np.isfinite(c) and c > 0):
            raise InstabilityError(f"soliton speed left (0, inf): c = {c:.6g}")
        p = SolitonParams(c)
        y = self.grid.x
        return eval_soliton(p, y), soliton_dy(p, y), soliton_dc(p, y)


@dataclass
class PerturbationState:
    v: np.ndarray = field(repr=False)
    c: float
    gamma: float
    c0: float
    t: float = 0.0
    N: float = 1.0
    center: float = 0.0  # int_0^t c
    v_tilde: Optional[np.ndarray] = field(default=None, repr=False)
    w_tilde: Optional[np.ndarray] = field(default=None, repr=False)

    def frame_position(self, gamma_sign: int) -> float:
        return self.center + gamma_sign * self.gamma


def make_state(ctx: ModulationContext, v, c=None, gamma=0.0, t=0.0, N=1.0, center=0.0) -> PerturbationState:
    st = PerturbationState(np.asarray(v, dtype=float), ctx.c0 if c is None else float(c), float(gamma), ctx.c0, t, N, center)
    return reconstitute(ctx, st)


def reconstitute(ctx: ModulationContext, st: PerturbationState) -> PerturbationState:
    st.v_tilde = ctx.I(st.v, st.N)
    st.w_tilde = ctx.weight * st.v_tilde
    return st


@dataclass(frozen=True)
class ModulationRates:
    c_dot: float
    gamma_dot: float
    g_norm: float = 0.0
    bound: float = 0.0
    inv_norm: float = 0.0

    @property
    def magnitude(self) -> float:
        return abs(self.c_dot) + abs(self.gamma_dot)

    @property
    def bound_ok(self) -> bool:
        return self.magnitude <= self.bound * (1 + 1e-6)


ZERO_RATES = ModulationRates(0.0, 0.0)


def _comm_part(ctx, st, psi, psi_y):
    """Unweighted pieces shared by F~ and G~: (d v~, -I d(v^2) - k d(I(psi v) - psi I v))."""
    v, vt = st.v, st.v_tilde
    dvt = ctx.dy(vt)
    k = ctx.commutator_coeff
    m = ctx.m_symbol(st.N)
    spec = ctx._ik * m * ctx._fft.rfft(v * v + k * psi * v)
    # d(psi I v) = psi_y v~ + psi d v~
    rest = -ctx._fft.irfft(spec) + k * (psi_y * vt + psi * dvt)
    return dvt, rest


def gtilde(ctx: ModulationContext, st: PerturbationState) -> np.ndarray:
    """G~ = (c - c0)(d - a) w~ - e^{ay} I d(v^2) - k e^{ay} d(I(psi v) - psi I v).

    The weight is applied last; (d - a)(e^{ay} f) = e^{ay} d f avoids
    differentiating it.  ``k = ctx.commutator_coeff``.
    """
    psi, psi_y, _ = ctx.soliton(st.c)
    dvt, rest = _comm_part(ctx, st, psi, psi_y)
    return ctx.weight * ((st.c - st.c0) * dvt + rest)


def ftilde(ctx: ModulationContext, st: PerturbationState, rates: ModulationRates) -> np.ndarray:
    """F~ = (c - c0 + s g')(d - a) w~ - e^{ay} I d(v^2) - e^{ay}(c' d_c - s g' d_y) I psi_c - k e^{ay} d(comm)."""
    sg = ctx.gamma_sign
    psi, psi_y, psi_c = ctx.soliton(st.c)
    dvt, rest = _comm_part(ctx, st, psi, psi_y)
    sol = ctx.I(rates.c_dot * psi_c - sg * rates.gamma_dot * psi_y, st.N)
    return ctx.weight * ((st.c - st.c0 + sg * rates.gamma_dot) * dvt + rest - sol)


def modulation_matrix(ctx: ModulationContext, st: PerturbationState) -> np.ndarray:
    """The displayed 2x2 matrix acting on (gamma_dot, c_dot).

    Column 1 is multiplied by ``-gamma_sign`` (identity for the default sign).
    """
    g = ctx.grid
    _, py, pc = ctx.soliton(st.c)
    _, py0, pc0 = ctx.soliton(st.c0)
    w = ctx.weight
    wt = st.w_tilde
    e1, e2 = ctx.eta
    d1, d2 = ctx.eta_dy
    dpy = w * (py - py0)
    dpc = w * (pc - pc0)
    A = np.array(
        [
            [1 + inner(dpy, e1, g) - inner(wt, d1, g), inner(dpc, e1, g)],
            [inner(dpy, e2, g) - inner(wt, d2, g), 1 + inner(dpc, e2, g)],
        ]
    )
    A[:, 0] *= -ctx.gamma_sign
    return A


def _solve(A: np.ndarray, rhs: np.ndarray):
    det = np.linalg.det(A)
    if not np.isfinite(det) or abs(det) < 1e-8:
        raise SingularModulationError(f"modulation matrix is singular (det = {det:.3g})")
    x = np.linalg.solve(A, rhs)
    return x, float(np.linalg.norm(np.linalg.inv(A), 2))


def solve_modulation(ctx: ModulationContext, st: PerturbationState, form: str = "displayed") -> ModulationRates:
    """Rates (c_dot, gamma_dot) from the 2x2 system.

    ``form='displayed'`` uses the displayed matrix and right-hand side
    <G~, eta_j>.  ``form='consistent'`` solves d/dt <w~, eta_j> = 0 for the
    discrete evolution used by :func:`evolve_coupled`; the two agree to
    leading order in ``|c - c0|``, ``||w~||`` and ``N^{-1}``.
    """
    G = gtilde(ctx, st)
    gn = l2_norm(G, ctx.grid)
    bound = 2.0 * max(ctx.eta_h1) * gn
    if form == "displayed":
        A = modulation_matrix(ctx, st)
        rhs = np.array([inner(G, e, ctx.grid) for e in ctx.eta])
    elif form == "consistent":
        A, rhs = _consistent_system(ctx, st)
    else:
        raise ValueError(f"unknown modulation form {form!r}")
    (gd, cd), inv = _solve(A, rhs)
    return ModulationRates(float(cd), float(gd), gn, bound, inv)


# --- coupled evolution --------------------------------------------------------


class _Stepper:
    """Integrating-factor RK4 for (v, c, gamma, X) with the modulation rates
    re-solved at every stage."""

    def __init__(self, ctx: ModulationContext, dt: float, form: str = "consistent"):
        self.ctx, self.dt, self.form = ctx, dt, form
        g = ctx.grid
        k = g.rwavenumbers
        lin = 1j * k**3 + 1j * ctx.c0 * k
        self.E = np.exp(lin * dt)
        self.E2 = np.exp(lin * dt / 2)
        self.lin = lin
        self.mask = g.rdealias_mask.astype(float)

    def parts(self, vh, c, N):
        """v_t = base + gamma_dot * dir_g + c_dot * dir_c (spectral, dealiased)."""
        ctx = self.ctx
        f = ctx._fft
        ik = ctx._ik
        v = f.irfft(vh)
        psi, psi_y, psi_c = ctx.soliton(c)
        P = f.rfft(2.0 * psi * v + v * v)
        S = f.rfft(ctx.sponge * v)
        nl = self.mask * (ik * ((c - ctx.c0) * vh - P) - S)
        dir_g = self.mask * ctx.gamma_sign * (ik * vh + f.rfft(psi_y))
        dir_c = -self.mask * f.rfft(psi_c)
        return nl, dir_g, dir_c

    def rates(self, vh, c, gamma, N, t):
        ctx = self.ctx
        nl, dir_g, dir_c = self.parts(vh, c, N)
        if self.form == "consistent":
            h = ctx.test_functions(N)
            base = self.lin * vh + nl
            A = np.array([[-ctx.spectral_inner(dir_g, hk), -ctx.spectral_inner(dir_c, hk)] for hk in h])
            rhs = np.array([ctx.spectral_inner(base, hk) for hk in h])
            (gd, cd), _ = _solve(A, rhs)
        else:
            st = make_state(ctx, ctx._fft.irfft(vh), c, gamma, t, N)
            r = solve_modulation(ctx, st, self.form)
            gd, cd = r.gamma_dot, r.c_dot
        return nl + gd * dir_g + cd * dir_c, cd, gd

    def step(self, vh, c, gamma, X, N, t):
        dt, E, E2 = self.dt, self.E, self.E2
        k1, c1, g1 = self.rates(vh, c, gamma, N, t)
        k2, c2, g2 = self.rates(E2 * (vh + dt / 2 * k1), c + dt / 2 * c1, gamma + dt / 2 * g1, N, t + dt / 2)
        cc = c + dt / 2 * c2
        k3, c3, g3 = self.rates(E2 * vh + dt / 2 * k2, cc, gamma + dt / 2 * g2, N, t + dt / 2)
        k4, c4, g4 = self.rates(E * vh + dt * E2 * k3, c + dt * c3, gamma + dt * g3, N, t + dt)
        vh_new = E * vh + dt / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        c_new = c + dt / 6 * (c1 + 2 * c2 + 2 * c3 + c4)
        g_new = gamma + dt / 6 * (g1 + 2 * g2 + 2 * g3 + g4)
        # dX/dt = c along the stage values of c
        X_new = X + dt / 6 * (c + 2 * (c + dt / 2 * c1) + 2 * cc + (c + dt * c3))
        return vh_new, c_new, g_new, X_new


def _consistent_system(ctx: ModulationContext, st: PerturbationState):
    stp = _Stepper(ctx, 1.0, "consistent")
    vh = ctx._fft.rfft(st.v)
    nl, dir_g, dir_c = stp.parts(vh, st.c, st.N)
    h = ctx.test_functions(st.N)
    base = stp.lin * vh + nl
    A = np.array([[-ctx.spectral_inner(dir_g, hk), -ctx.spectral_inner(dir_c, hk)] for hk in h])
    rhs = np.array([ctx.spectral_inner(base, hk) for hk in h])
    return A, rhs


def projection_coefficients(ctx: ModulationContext, st: PerturbationState) -> np.ndarray:
    return np.array([inner(st.w_tilde, e, ctx.grid) for e in ctx.eta])


def projection_residual(ctx: ModulationContext, st: PerturbationState) -> tuple[float, float]:
    """(||P w~||, ||w~||)."""
    a1, a2 = projection_coefficients(ctx, st)
    g = ctx.grid
    return l2_norm(a1 * ctx.zeta[0] + a2 * ctx.zeta[1], g), l2_norm(st.w_tilde, g)


def reparametrize(ctx: ModulationContext, st: PerturbationState, d_gamma: float, d_c: float) -> PerturbationState:
    """Same u, new (c, gamma): v'(y') = psi_c(y' + s dg) + v(y' + s dg) - psi_{c+dc}(y')."""
    g = ctx.grid
    shift = ctx.gamma_sign * d_gamma
    c_new = st.c + d_c
    if c_new <= 0:
        raise SingularModulationError("reparametrisation drove c nonpositive")
    vh = ctx._fft.rfft(st.v)
    v_shift = ctx._fft.irfft(vh * np.exp(1j * g.rwavenumbers * shift))
    y = g.x
    v_new = eval_soliton(SolitonParams(st.c), y + shift) + v_shift - eval_soliton(SolitonParams(c_new), y)
    out = replace(st, v=v_new, c=c_new, gamma=st.gamma + d_gamma)
    return reconstitute(ctx, out)


def enforce_orthogonality(
    ctx: ModulationContext, st: PerturbationState, tol: float = 1e-12, max_iter: int = 6
) -> tuple[PerturbationState, float]:
    """Newton on (gamma, c) so that P w~ = 0 while u is unchanged.

    Returns the corrected state and the relative P component removed.
    """
    pn, wn = projection_residual(ctx, st)
    removed = pn / wn if wn > 0 else 0.0
    for _ in range(max_iter):
        alpha = projection_coefficients(ctx, st)
        pn, wn = projection_residual(ctx, st)
        if wn == 0 or pn <= tol * wn:
            break
        A = modulation_matrix_exact(ctx, st)
        d_gamma, d_c = np.linalg.solve(A, alpha)
        st = reparametrize(ctx, st, d_gamma, d_c)
    return st, removed


def modulation_matrix_exact(ctx: ModulationContext, st: PerturbationState) -> np.ndarray:
    """d<w~, eta_k>/d(gamma, c) with u held fixed, negated."""
    _, py, pc = ctx.soliton(st.c)
    f = ctx._fft
    h = ctx.test_functions(st.N)
    dg = ctx.gamma_sign * (f.rfft(py) + ctx._ik * f.rfft(st.v))
    dc = -f.rfft(pc)
    return np.array([[-ctx.spectral_inner(dg, hk), -ctx.spectral_inner(dc, hk)] for hk in h])


def evolve_coupled(
    ctx: ModulationContext,
    st: PerturbationState,
    dt: float,
    nsteps: int = 1,
    form: str = "consistent",
    stepper: Optional[_Stepper] = None,
) -> tuple[PerturbationState, float]:
    """Advance ``nsteps`` steps of size ``dt`` and restore P w~ = 0.

    Returns the new state and the largest relative P component removed by
    the projection-drift correction.
    """
    stp = stepper or _Stepper(ctx, dt, form)
    f = ctx._fft
    vh = f.rfft(st.v)
    c, gamma, X, t0 = st.c, st.gamma, st.center, st.t
    worst = 0.0
    for i in range(nsteps):
        vh, c, gamma, X = stp.step(vh, c, gamma, X, st.N, t0 + i * dt)
        t = t0 + (i + 1) * dt
        peak = np.max(np.abs(vh)) / ctx.grid.num_points
        if not np.isfinite(peak) or peak > BLOWUP_THRESHOLD or not np.isfinite(c):
            raise InstabilityError("coupled evolution blew up", t)
        if c <= 0:
            raise InstabilityError("soliton speed became nonpositive", t)
        new = reconstitute(ctx, replace(st, v=f.irfft(vh), c=c, gamma=gamma, center=X, t=t))
        new, removed = enforce_orthogonality(ctx, new)
        worst = max(worst, removed)
        vh, c, gamma = f.rfft(new.v), new.c, new.gamma
        st = new
    return st, worst


def state_norms(ctx: ModulationContext, st: PerturbationState) -> dict:
    g = ctx.grid
    from .weighted import WeightParams, weighted_h1_norm

    wp = WeightParams(ctx.a, ctx.R, ctx.c0)
    pn, wn = projection_residual(ctx, st)
    return {
        "w_h1": weighted_h1_norm(wp, st.v_tilde, g),
        "v_h1": h1_norm(st.v_tilde, g),
        "P_resid": pn / wn if wn > 0 else 0.0,
    }
