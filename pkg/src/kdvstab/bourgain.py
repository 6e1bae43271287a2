"""Dyadic X^{s,b,1} norms on sampled spacetime data, time cutoffs, linear-estimate probes.

Lattice conventions: on a window of length T_w sampled at n_t points and a
periodic box of length L, the 2-D coefficients are c = fft2(f)/(n_t n_x) and
the continuum transform is approximated by T_w L c.  With the measure
dtau dxi/(2pi)^2 a block norm is sqrt(T_w L sum_block |c|^2), consistent
with Parseval.  Transform kernel e^{-i(tau t + xi x)}, so the Airy flow sits
on tau = xi^3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Grid, sobolev_norm
from .spectral_ops import damping_symbol


@dataclass
class SpacetimeField:
    t_grid: np.ndarray
    grid: Grid
    values: np.ndarray  # (n_t, n_x)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.values.shape != (self.t_grid.size, self.grid.num_points):
            raise ValueError(f"values shape {self.values.shape} != ({self.t_grid.size}, {self.grid.num_points})")
        if self.t_grid.size < 2:
            raise ValueError("need at least two time samples")
        d = np.diff(self.t_grid)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise ValueError("time samples must be uniform")

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def window(self) -> float:
        return self.dt * self.t_grid.size

    def taus(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.t_grid.size, d=self.dt)

    def __add__(self, other: "SpacetimeField") -> "SpacetimeField":
        return SpacetimeField(self.t_grid, self.grid, self.values + other.values)

    def scaled(self, k: float) -> "SpacetimeField":
        return SpacetimeField(self.t_grid, self.grid, k * self.values)


def window_times(delta: float = 1.0, num_times: int = 256) -> np.ndarray:
    """Uniform samples of [-2 delta, 2 delta)."""
    return np.linspace(-2 * delta, 2 * delta, num_times, endpoint=False)


def japanese(x):
    return np.sqrt(1.0 + np.abs(x) ** 2)


def dyadic_index(x) -> np.ndarray:
    """j with 2^j <= <x> <= 2^{j+1}; a tie at 2^{j+1} goes to block j."""
    jb = japanese(x)
    j = np.ceil(np.log2(jb)).astype(int) - 1
    # guard the tie rule against log2 round-off
    j = np.where(2.0 ** (j + 1) < jb, j + 1, j)
    j = np.where((2.0**j > jb) & (j > 0), j - 1, j)
    return np.maximum(j, 0)


@dataclass(frozen=True)
class DyadicDecomposition:
    j: np.ndarray  # block index per lattice point, by <xi>
    k: np.ndarray  # block index per lattice point, by <tau - xi^3>

    @property
    def j_max(self) -> int:
        return int(self.j.max())

    @property
    def k_max(self) -> int:
        return int(self.k.max())

    @classmethod
    def for_field(cls, f: SpacetimeField) -> "DyadicDecomposition":
        tau = f.taus()[:, None]
        xi = f.grid.wavenumbers[None, :]
        jj = np.broadcast_to(dyadic_index(xi), (tau.size, xi.size))
        kk = dyadic_index(tau - xi**3)
        return cls(jj, kk)


def spacetime_coefficients(f: SpacetimeField) -> np.ndarray:
    nt, nx = f.values.shape
    return np.fft.fft2(f.values) / (nt * nx)


def block_norms(f: SpacetimeField) -> np.ndarray:
    """||f^ restricted to A_j cap B_k||_{L^2}, indexed [j, k]."""
    c = spacetime_coefficients(f)
    d = DyadicDecomposition.for_field(f)
    out = np.zeros((d.j_max + 1, d.k_max + 1))
    np.add.at(out, (d.j.ravel(), d.k.ravel()), np.abs(c.ravel()) ** 2)
    return np.sqrt(f.window * f.grid.box_length * out)


def xsb1_norm(f: SpacetimeField, s: float, b: float) -> float:
    """(sum_j 2^{2sj} (sum_k 2^{bk} ||f^ 1_{A_j cap B_k}||)^2)^{1/2}."""
    B = block_norms(f)
    j = np.arange(B.shape[0])
    k = np.arange(B.shape[1])
    inner_sum = B @ (2.0 ** (b * k))
    return float(np.sqrt(np.sum(2.0 ** (2 * s * j) * inner_sum**2)))


def ys_norm(f: SpacetimeField, s: float) -> float:
    """Y^s = X^{s,-1/2,1}."""
    return xsb1_norm(f, s, -0.5)


def xsb1_norm_bruteforce(f: SpacetimeField, s: float, b: float) -> float:
    """Reference double sum: explicit DFT matrices and plain loops."""
    vals = np.asarray(f.values, dtype=complex)
    nt, nx = vals.shape
    Ft = np.exp(-2j * np.pi * np.outer(np.arange(nt), np.arange(nt)) / nt)
    Fx = np.exp(-2j * np.pi * np.outer(np.arange(nx), np.arange(nx)) / nx)
    c = Ft @ vals @ Fx.T / (nt * nx)
    dt = f.dt
    L = f.grid.box_length

    def freq(m, n, length):
        m = m if m < (n + 1) // 2 else m - n
        return 2 * math.pi * m / length

    def block(x):
        jb = math.sqrt(1 + x * x)
        j = 0
        while 2.0 ** (j + 1) < jb:
            j += 1
        return j

    blocks: dict = {}
    for p in range(nt):
        tau = freq(p, nt, nt * dt)
        for q in range(nx):
            xi = freq(q, nx, L)
            key = (block(xi), block(tau - xi**3))
            blocks[key] = blocks.get(key, 0.0) + abs(c[p, q]) ** 2
    per_j: dict = {}
    for (j, k), e in blocks.items():
        per_j[j] = per_j.get(j, 0.0) + 2.0 ** (b * k) * math.sqrt(nt * dt * L * e)
    return math.sqrt(sum(2.0 ** (2 * s * j) * v * v for j, v in per_j.items()))


# --- time cutoffs ---------------------------------------------------------------


def _smooth_step(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def time_cutoff(t) -> np.ndarray:
    """C^infinity rho with rho = 1 on [-1, 1] and supp rho in [-2, 2]."""
    at = np.abs(np.asarray(t, dtype=float))
    up = _smooth_step(2.0 - at)
    return up / (up + _smooth_step(at - 1.0))


def apply_time_cutoff(f: SpacetimeField, delta: float) -> SpacetimeField:
    if delta <= 0:
        raise ValueError("delta must be positive")
    rho = time_cutoff(f.t_grid / delta)
    return SpacetimeField(f.t_grid, f.grid, rho[:, None] * f.values)


# --- embedding and probes -------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingRecord:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("nan")


def embedding_check(f: SpacetimeField, s: float) -> EmbeddingRecord:
    """sup_t ||f(t)||_{H^s} against ||f||_{X^{s,1/2,1}}."""
    lhs = max(sobolev_norm(row, f.grid, s) for row in f.values)
    return EmbeddingRecord(float(lhs), xsb1_norm(f, s, 0.5))


def random_bandlimited(grid: Grid, band: float, rng: np.random.Generator) -> np.ndarray:
    """Real random field with |xi| <= band and smooth spectral envelope."""
    k = grid.rwavenumbers
    amp = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    amp *= np.abs(k) <= band
    amp[0] = amp[0].real
    return np.fft.irfft(amp, n=grid.num_points)


def evolve_linear(grid: Grid, f0: np.ndarray, t: np.ndarray, symbol: Callable) -> np.ndarray:
    """Rows W(t_i) f0 for a Fourier multiplier semigroup with symbol(t, k)."""
    fh = np.fft.rfft(f0)
    return np.array([np.fft.irfft(symbol(ti) * fh, n=grid.num_points) for ti in t])


def duhamel(grid: Grid, F: np.ndarray, t: np.ndarray, symbol: Callable) -> np.ndarray:
    """chi_{t>0}(t) int_0^t W(t - t') F(t') dt' by the trapezoid rule on the sample grid."""
    Fh = np.fft.rfft(F, axis=1)
    out = np.zeros_like(F)
    dt = t[1] - t[0]
    i0 = int(np.searchsorted(t, 0.0))
    for i in range(i0 + 1, t.size):
        ts = t[i0 : i + 1]
        wts = np.full(ts.size, dt)
        wts[0] = wts[-1] = dt / 2
        acc = np.zeros(Fh.shape[1], dtype=complex)
        for w_, tj, row in zip(wts, ts, Fh[i0 : i + 1]):
            acc += w_ * symbol(t[i] - tj) * row
        out[i] = np.fft.irfft(acc, n=grid.num_points)
    return out


def _symbol(kind: str, grid: Grid, a: float, c0: float):
    k = grid.rwavenumbers
    if kind.startswith("W1"):
        return lambda t: np.exp(1j * k**3 * t)
    p = damping_symbol(2 * np.pi * np.fft.rfftfreq(grid.num_points, d=grid.spacing), a, c0)
    return lambda t: np.exp(1j * k**3 * t - p * abs(t))


PROBE_KINDS = ("W1-hom", "W1-inhom", "W2-hom", "W2-inhom")


def linear_estimate_probe(
    kind: str,
    trials: int = 50,
    band: float = 2.0,
    s: float = 1.0,
    a: float = 0.5,
    c0: float = 1.0,
    grid: Optional[Grid] = None,
    num_times: int = 256,
    seed: int = 0,
) -> dict:
    """Observed ratios lhs/rhs for one of the four linear estimates.

    hom:   ||rho(t) W(t) f||_{X^{s,1/2,1}} / ||f||_{H^s}
    inhom: ||chi_+ rho(t) int_0^t W(t-t') F||_{X^{s,1/2,1}} / ||F||_{X^{s,-1/2,1}}
    with F = rho(t) g(t, x) for a random band-limited g.  The window is
    [-2, 2] (delta = 1); band-limiting keeps xi^3 below the tau Nyquist.
    """
    if kind not in PROBE_KINDS:
        raise ValueError(f"unknown probe kind {kind!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = grid or Grid(128, 16 * math.pi)
    t = window_times(1.0, num_times)
    tau_max = math.pi / (t[1] - t[0])
    if band**3 > 0.5 * tau_max:
        raise ValueError("band too wide for the time sampling (tau aliasing)")
    rng = np.random.default_rng(seed)
    sym = _symbol(kind, grid, a, c0)
    rho = time_cutoff(t)[:, None]
    rows = []
    for trial in range(trials):
        if kind.endswith("hom") and not kind.endswith("inhom"):
            f0 = random_bandlimited(grid, band, rng)
            rhs = sobolev_norm(f0, grid, s)
            u = rho * evolve_linear(grid, f0, t, sym)
        else:
            g = np.array([random_bandlimited(grid, band, rng) for _ in range(8)])
            # smooth temporal profile from a few random modes
            phases = rng.uniform(0, 2 * np.pi, (8, 1))
            freqs = rng.uniform(-3, 3, (8, 1))
            F = rho * np.einsum("mt,mx->tx", np.cos(freqs * t[None, :] + phases), g)
            rhs = ys_norm(SpacetimeField(t, grid, F), s)
            u = rho * duhamel(grid, F, t, sym)
        if rhs == 0:
            continue
        lhs = xsb1_norm(SpacetimeField(t, grid, u), s, 0.5)
        rows.append((kind, trial, lhs, rhs, lhs / rhs))
    ratios = np.array([r[4] for r in rows])
    return {
        "kind": kind,
        "band": band,
        "rows": rows,
        "max_ratio": float(ratios.max()) if rows else float("nan"),
        "mean_ratio": float(ratios.mean()) if rows else float("nan"),
    }


def probe_report(rows) -> str:
    lines = ["kind,trial,lhs,rhs,ratio"]
    lines += [f"{k},{i},{l!r},{r!r},{q!r}" for k, i, l, r, q in rows]
    return "\n".join(lines) + "\n"
