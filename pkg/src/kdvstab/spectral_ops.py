"""The conjugated linearisation A_a = e^{ay} d_y(-d_y^2 + c - 2 psi_c) e^{-ay}.

Dense assembly for spectrum studies, matrix-free application for time
stepping, the biorthogonal system (zeta_1, zeta_2, eta_1, eta_2), the
projections P and Q, and the semigroups W1 (Airy) and W2 (damped Airy).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.fft as sfft

from .grid import Grid, apply_real_multiplier, derivative, inner, l2_norm
from .soliton import SolitonParams, eval_soliton, soliton_antiderivative_dc, soliton_dc, soliton_dy
from .weighted import InadmissibleWeightError, max_weight_rate


class IllConditionedError(np.linalg.LinAlgError):
    pass


class EigensolverError(np.linalg.LinAlgError):
    pass


def check_admissible(a: float, c: float) -> None:
    if not (c > 0 and 0 < a < max_weight_rate(c)):
        raise InadmissibleWeightError(
            f"(a, c) = ({a}, {c}) inadmissible: need 0 < a < sqrt(c0/3) = {max_weight_rate(max(c, 0)):.6g}"
        )


def constant_symbol(grid: Grid, a: float, c: float) -> np.ndarray:
    """Fourier symbol of -[d^3 - 3a d^2 + (3a^2 - c) d + a(c - a^2)] in FFT order.

    Odd powers use Nyquist-zeroed wavenumbers so the symbol is Hermitian.
    """
    k, ko = grid.wavenumbers, grid.wavenumbers_odd
    return -((1j * ko) ** 3 - 3 * a * (1j * k) ** 2 + (3 * a * a - c) * (1j * ko) + a * (c - a * a))


def _dense_multiplier(grid: Grid, sym: np.ndarray) -> np.ndarray:
    eye = np.eye(grid.num_points)
    return sfft.ifft(sym[:, None] * sfft.fft(eye, axis=0), axis=0).real


@dataclass
class LinearizedOperator:
    a: float
    c: float
    grid: Grid
    matrix: np.ndarray = field(repr=False)


def build_operator(grid: Grid, a: float, c: float, check: bool = True) -> LinearizedOperator:
    """Dense A_a in expanded form (constant-coefficient part plus -2(d - a)(psi_c .))."""
    if check:
        check_admissible(a, c)
    psi = eval_soliton(SolitonParams(c), grid.x)
    lin = _dense_multiplier(grid, constant_symbol(grid, a, c))
    D = _dense_multiplier(grid, 1j * grid.wavenumbers_odd)
    D -= a * np.eye(grid.num_points)
    return LinearizedOperator(a, c, grid, lin - 2.0 * D * psi[None, :])


def apply_operator(grid: Grid, a: float, c: float, w: np.ndarray, psi: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix-free A_a w; ``psi`` overrides the soliton profile in the coupling."""
    if psi is None:
        psi = eval_soliton(SolitonParams(c), grid.x)
    sym = constant_symbol(grid, a, c)[: grid.num_points // 2 + 1]
    pw = psi * w
    return apply_real_multiplier(w, sym, grid) - 2.0 * (derivative(pw, grid) - a * pw)


def apply_factored(grid: Grid, a: float, c: float, w: np.ndarray) -> np.ndarray:
    """e^{ay} d(-d^2 + c - 2 psi_c)(e^{-ay} w), for compactly supported w."""
    y = grid.x
    psi = eval_soliton(SolitonParams(c), y)
    f = np.exp(-a * y) * w
    g = -derivative(f, grid, 2) + c * f - 2 * psi * f
    return np.exp(a * y) * derivative(g, grid)


# --- biorthogonal system ----------------------------------------------------


@dataclass
class SpectralPair:
    a: float
    c: float
    grid: Grid
    zeta1: np.ndarray = field(repr=False)
    zeta2: np.ndarray = field(repr=False)
    eta1: np.ndarray = field(repr=False)
    eta2: np.ndarray = field(repr=False)
    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0
    gram_condition: float = 1.0

    def gram(self) -> np.ndarray:
        """G[j, k] = <zeta_j, eta_k>."""
        Z = (self.zeta1, self.zeta2)
        E = (self.eta1, self.eta2)
        return np.array([[inner(z, e, self.grid) for e in E] for z in Z])

    def eta_dy(self) -> tuple[np.ndarray, np.ndarray]:
        """Analytic d/dy of eta_1, eta_2 (no spectral differentiation of e^{-ay})."""
        p = SolitonParams(self.c)
        y = self.grid.x
        em = np.exp(-self.a * y)
        d1 = -self.a * self.eta1 + em * (self.theta1 * soliton_dc(p, y) + self.theta2 * soliton_dy(p, y))
        d2 = -self.a * self.eta2 + em * self.theta3 * soliton_dy(p, y)
        return d1, d2


def eta_candidates(grid: Grid, a: float, c: float) -> tuple[np.ndarray, np.ndarray]:
    """(e^{-ay} d_y^{-1} d_c psi_c, e^{-ay} psi_c)."""
    p = SolitonParams(c)
    y = grid.x
    em = np.exp(-a * y)
    # closed-form antiderivative: quadrature round-off would be amplified by e^{-ay}
    return em * soliton_antiderivative_dc(p, y), em * eval_soliton(p, y)


def calibrate_thetas(grid: Grid, a: float, c: float, cond_limit: float = 1e10) -> SpectralPair:
    """Solve the four biorthogonality conditions for (theta_1, theta_2, theta_3)."""
    check_admissible(a, c)
    p = SolitonParams(c)
    y = grid.x
    ep = np.exp(a * y)
    z1 = ep * soliton_dy(p, y)
    z2 = ep * soliton_dc(p, y)
    phi1, phi2 = eta_candidates(grid, a, c)
    ip = lambda f, g: inner(f, g, grid)  # noqa: E731
    # unknowns (theta1, theta2, theta3); rows <z1,eta1>, <z2,eta1>, <z1,eta2>, <z2,eta2>
    G = np.array(
        [
            [ip(z1, phi1), ip(z1, phi2), 0.0],
            [ip(z2, phi1), ip(z2, phi2), 0.0],
            [0.0, 0.0, ip(z1, phi2)],
            [0.0, 0.0, ip(z2, phi2)],
        ]
    )
    rhs = np.array([1.0, 0.0, 0.0, 1.0])
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(f"biorthogonality system condition number {cond:.3g} exceeds {cond_limit:g}")
    th, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    t1, t2, t3 = (float(v) for v in th)
    return SpectralPair(a, c, grid, z1, z2, t1 * phi1 + t2 * phi2, t3 * phi2, t1, t2, t3, float(cond))


@dataclass
class Projector:
    pair: SpectralPair

    def coefficients(self, w: np.ndarray) -> np.ndarray:
        g = self.pair.grid
        return np.array([inner(w, self.pair.eta1, g), inner(w, self.pair.eta2, g)])

    def P(self, w: np.ndarray) -> np.ndarray:
        a1, a2 = self.coefficients(w)
        return a1 * self.pair.zeta1 + a2 * self.pair.zeta2

    def Q(self, w: np.ndarray) -> np.ndarray:
        return w - self.P(w)

    def matrix(self) -> np.ndarray:
        pr = self.pair
        Z = np.stack([pr.zeta1, pr.zeta2], axis=1)
        H = np.stack([pr.eta1, pr.eta2], axis=1)
        return Z @ H.T * pr.grid.spacing


def project_P(pr: Projector, w: np.ndarray) -> np.ndarray:
    return pr.P(w)


def project_Q(pr: Projector, w: np.ndarray) -> np.ndarray:
    return pr.Q(w)


# --- spectrum ---------------------------------------------------------------


def spectral_bound(a: float, c: float) -> float:
    """b = -a (c - a^2)."""
    return -a * (c - a * a)


def continuous_spectrum_curve(a: float, c: float, tau):
    check_admissible(a, c)
    tau = np.asarray(tau, dtype=float)
    return 1j * tau**3 - 3 * a * tau**2 + (c - 3 * a * a) * 1j * tau - a * (c - a * a)


@dataclass
class SpectrumReport:
    a: float
    c: float
    num_points: int
    eigenvalues: np.ndarray = field(repr=False)
    kernel: np.ndarray
    max_real_rest: float
    bound: float
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    def gap_ok(self, tol: float = 0.05) -> bool:
        return self.max_real_rest <= self.bound + tol

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# a={self.a!r} c={self.c!r} b={self.bound!r} num_points={self.num_points}\n")
        buf.write("re,im\n")
        for lam in self.eigenvalues:
            buf.write(f"{lam.real!r},{lam.imag!r}\n")
        return buf.getvalue()


def discrete_spectrum(op: LinearizedOperator, vectors: bool = False) -> SpectrumReport:
    try:
        if vectors:
            lam, V = sla.eig(op.matrix)
        else:
            lam, V = sla.eigvals(op.matrix), None
    except (np.linalg.LinAlgError, ValueError) as err:
        cond = np.linalg.cond(op.matrix)
        raise EigensolverError(f"eigensolve failed ({err}); matrix condition number {cond:.3g}") from err
    order = np.argsort(np.abs(lam))
    kernel = lam[order[:2]]
    rest = lam[order[2:]]
    return SpectrumReport(
        op.a,
        op.c,
        op.grid.num_points,
        lam,
        kernel,
        float(rest.real.max()),
        spectral_bound(op.a, op.c),
        V,
    )


def kernel_residuals(grid: Grid, a: float, c: float) -> tuple[float, float, float]:
    """(||A zeta1||/||zeta1||, min_beta ||A zeta2 - beta zeta1||/||zeta2||, beta)."""
    p = SolitonParams(c)
    y = grid.x
    z1 = np.exp(a * y) * soliton_dy(p, y)
    z2 = np.exp(a * y) * soliton_dc(p, y)
    Az1 = apply_operator(grid, a, c, z1)
    Az2 = apply_operator(grid, a, c, z2)
    beta = float(np.dot(Az2, z1) / np.dot(z1, z1))
    return (
        l2_norm(Az1, grid) / l2_norm(z1, grid),
        l2_norm(Az2 - beta * z1, grid) / l2_norm(z2, grid),
        beta,
    )


# --- semigroups -------------------------------------------------------------


def damping_symbol(xi, a: float, c0: float, form: str = "default") -> np.ndarray:
    """p_a(xi) = 3a xi^2 + a(c0 - a^2); ``form='printed'`` uses a(c0^2 - a)."""
    xi = np.asarray(xi, dtype=float)
    if form == "default":
        return 3 * a * xi**2 + a * (c0 - a * a)
    if form == "printed":
        return 3 * a * xi**2 + a * (c0 * c0 - a)
    raise ValueError(f"unknown damping form {form!r}")


def semigroup_W1(t: float, f: np.ndarray, grid: Grid) -> np.ndarray:
    """Airy flow of u_t + u_xxx = 0 (phase e^{i xi^3 t} in this transform convention)."""
    k = grid.rwavenumbers
    return apply_real_multiplier(f, np.exp(1j * k**3 * t), grid)


def semigroup_W2(t: float, f: np.ndarray, grid: Grid, a: float, c0: float, form: str = "default") -> np.ndarray:
    k = grid.rwavenumbers
    kk = 2 * np.pi * np.fft.rfftfreq(grid.num_points, d=grid.spacing)
    sym = np.exp(1j * k**3 * t - damping_symbol(kk, a, c0, form) * abs(t))
    return apply_real_multiplier(f, sym, grid)


def semigroup_decay_rate(
    grid: Grid, a: float, c: float, w0: np.ndarray, times: np.ndarray, op: Optional[LinearizedOperator] = None
) -> tuple[float, np.ndarray]:
    """Fitted exponential rate of ||Q e^{A t} Q w0|| via the dense matrix exponential."""
    op = op or build_operator(grid, a, c)
    Pm = Projector(calibrate_thetas(grid, a, c)).matrix()
    Qm = np.eye(grid.num_points) - Pm
    lam, V = sla.eig(op.matrix)
    coeffs = np.linalg.solve(V, Qm @ w0)
    norms = []
    for t in times:
        wt = (V @ (np.exp(lam * t) * coeffs)).real
        norms.append(l2_norm(Qm @ wt, grid))
    norms = np.array(norms)
    slope = float(np.polyfit(times, np.log(norms), 1)[0])
    return slope, norms
