"""Periodic spectral grid: transforms, multipliers, derivatives and Sobolev norms.

Fields are plain ``numpy`` arrays of length ``grid.num_points``.  Spectral
coefficients use the normalisation

    fhat[k] = (1/n) * sum_j f(x_j) exp(-i xi_k x_j),

so a unit-amplitude ``cos`` has coefficients 1/2 at ``k = +-1`` and the
continuum L2 norm is ``sqrt(L * sum |fhat|^2)``.  Coefficient arrays are kept
in FFT order (``numpy.fft.fftfreq``), not shifted.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

Multiplier = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

try:  # optional: planned FFTW transforms for the time-stepping loops
    import pyfftw
except ImportError:  # pragma: no cover
    pyfftw = None


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)``."""

    num_points: int = 4096
    box_length: float = 200.0

    def __post_init__(self):
        if not is_power_of_two(int(self.num_points)):
            raise ValueError(f"num_points must be a power of two, got {self.num_points}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    @property
    def spacing(self) -> float:
        return self.box_length / self.num_points

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.box_length + self.spacing * np.arange(self.num_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """xi_k = 2 pi k / L in FFT order; contains the single Nyquist mode -n/2."""
        return 2 * np.pi * np.fft.fftfreq(self.num_points, d=self.spacing)

    @cached_property
    def wavenumbers_odd(self) -> np.ndarray:
        """Wavenumbers with the Nyquist entry zeroed, for odd-order symbols on real fields."""
        k = self.wavenumbers.copy()
        k[self.num_points // 2] = 0.0
        return k

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Wavenumbers matching ``rfft`` output, Nyquist zeroed."""
        k = 2 * np.pi * np.fft.rfftfreq(self.num_points, d=self.spacing)
        k[-1] = 0.0
        return k

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask (FFT order) keeping |k| <= n/3."""
        idx = np.fft.fftfreq(self.num_points, d=1.0 / self.num_points)
        return np.abs(idx) <= self.num_points / 3

    @cached_property
    def rdealias_mask(self) -> np.ndarray:
        idx = np.arange(self.num_points // 2 + 1)
        return idx <= self.num_points / 3

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.num_points * factor, self.box_length)


class RealFFT:
    """Unnormalised real FFT pair of fixed length (rfft / irfft semantics).

    Uses planned FFTW transforms when ``pyfftw`` is installed, otherwise
    ``scipy.fft``.  Outputs are fresh arrays, safe to keep.
    """

    def __init__(self, n: int):
        self.n = n
        self._fftw = pyfftw is not None
        if self._fftw:
            self._r = pyfftw.empty_aligned(n, "float64")
            self._c = pyfftw.empty_aligned(n // 2 + 1, "complex128")
            flags = ("FFTW_MEASURE", "FFTW_DESTROY_INPUT")
            self._fwd = pyfftw.FFTW(self._r, self._c, flags=flags)
            self._bwd = pyfftw.FFTW(self._c, self._r, direction="FFTW_BACKWARD", flags=flags)

    def rfft(self, u: np.ndarray) -> np.ndarray:
        if not self._fftw:
            return sfft.rfft(u)
        self._r[:] = u
        self._fwd.execute()
        return self._c.copy()

    def irfft(self, uh: np.ndarray) -> np.ndarray:
        if not self._fftw:
            return sfft.irfft(uh, n=self.n)
        self._c[:] = uh
        self._bwd.execute()
        return self._r / self.n


def forward_transform(f: np.ndarray) -> np.ndarray:
    n = f.shape[-1]
    return sfft.fft(f, axis=-1) / n


def inverse_transform(fhat: np.ndarray, real: bool = True) -> np.ndarray:
    n = fhat.shape[-1]
    out = sfft.ifft(fhat * n, axis=-1)
    return out.real if real else out


def _symbol(grid: Grid, m: Multiplier) -> np.ndarray:
    if callable(m):
        return np.asarray(m(grid.wavenumbers))
    return np.asarray(m)


def apply_multiplier(fhat: np.ndarray, m: Multiplier, grid: Grid) -> np.ndarray:
    """Pointwise ``m(xi_k) * fhat[k]``."""
    return _symbol(grid, m) * fhat


def apply_real_multiplier(f: np.ndarray, m: Multiplier, grid: Grid) -> np.ndarray:
    """Multiplier applied to a real field, returning a real field.

    ``m`` must be even in xi (or the caller accepts the real part).
    """
    if callable(m):
        sym = np.asarray(m(2 * np.pi * np.fft.rfftfreq(grid.num_points, d=grid.spacing)))
    else:
        sym = np.asarray(m)
        if sym.shape[-1] == grid.num_points:
            sym = sym[..., : grid.num_points // 2 + 1]
    return sfft.irfft(sym * sfft.rfft(f), n=grid.num_points)


def derivative(f: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Spectral derivative of a real periodic field."""
    k = grid.rwavenumbers if order % 2 else 2 * np.pi * np.fft.rfftfreq(grid.num_points, d=grid.spacing)
    return sfft.irfft((1j * k) ** order * sfft.rfft(f), n=grid.num_points)


def cumulative_integral(f: np.ndarray, grid: Grid) -> np.ndarray:
    """int_{x_0}^{x} f, from the left grid edge, exact for the trigonometric interpolant.

    The mean of ``f`` contributes a linear ramp; the oscillatory part is
    integrated by dividing by ``i xi``.  Intended for fields that are
    negligible at both edges.
    """
    fh = sfft.rfft(f)
    mean = fh[0].real / grid.num_points
    k = grid.rwavenumbers
    gh = np.zeros_like(fh)
    nz = k != 0
    gh[nz] = fh[nz] / (1j * k[nz])
    g = sfft.irfft(gh, n=grid.num_points)
    out = g + mean * (grid.x - grid.x[0])
    return out - out[0]


def dealias(fhat: np.ndarray, grid: Grid) -> np.ndarray:
    """2/3 rule: zero every coefficient with |k| > n/3."""
    return np.where(grid.dealias_mask, fhat, 0.0)


def inner(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """Rectangle-rule L2 pairing, spectrally accurate for periodic integrands."""
    return float(np.dot(f, g) * grid.spacing)


def l2_norm(f: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.dot(f, f) * grid.spacing))


def sobolev_norm(f: np.ndarray, grid: Grid, s: float) -> float:
    """H^s norm with weight (1 + xi^2)^s, consistent with ``l2_norm`` at s = 0."""
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"sobolev index {s} outside supported range [-2, 2]")
    fh = forward_transform(f)
    w = (1.0 + grid.wavenumbers**2) ** s
    return float(np.sqrt(grid.box_length * np.sum(w * np.abs(fh) ** 2)))


def h1_norm(f: np.ndarray, grid: Grid) -> float:
    return sobolev_norm(f, grid, 1.0)


def padded_product(u: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    """Alias-free product via 3/2 zero padding, truncated back to the grid modes."""
    n = grid.num_points
    m = 3 * n // 2
    uh = sfft.rfft(u)
    vh = sfft.rfft(v)
    uh[-1] = 0.0
    vh[-1] = 0.0
    up = sfft.irfft(uh, n=m) * (m / n)
    vp = sfft.irfft(vh, n=m) * (m / n)
    wh = sfft.rfft(up * vp)[: n // 2 + 1] * (n / m)
    wh[-1] = 0.0
    return sfft.irfft(wh, n=n)
