"""Smoothing multiplier m_N, the operator I_N, its schedule N(n) and commutators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import Grid, apply_real_multiplier, derivative, h1_norm, l2_norm, padded_product


@dataclass(frozen=True)
class IMultiplier:
    """m_N(xi): 1 below N, (|xi|/N)^{s-1} above 10N, monotone C^1 bridge between.

    On the bridge, with t = log10(|xi|/N), log10 m = (s - 1)(2t^2 - t^3); the
    cubic has zero slope at t = 0 and unit slope at t = 1, matching both
    outer laws to first order.
    """

    N: float
    s: float = 0.9

    def __post_init__(self):
        if not self.N >= 1:
            raise ValueError(f"cutoff N must be >= 1, got {self.N}")
        if not 0.75 < self.s < 1:
            raise ValueError(f"regularity s must lie in (3/4, 1), got {self.s}")

    def __call__(self, xi) -> np.ndarray:
        a = np.abs(np.asarray(xi, dtype=float))
        t = np.log10(np.maximum(a, self.N) / self.N)
        bridge = np.where(t < 1.0, 2 * t**2 - t**3, t)
        return 10.0 ** ((self.s - 1.0) * bridge)


def m_eval(im: IMultiplier, xi):
    return im(xi)


def apply_I(im: IMultiplier, f: np.ndarray, grid: Grid) -> np.ndarray:
    return apply_real_multiplier(f, im, grid)


def commutator(im: IMultiplier, u: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    """I(uv) - (Iu)(Iv) with both products formed alias-free."""
    return apply_I(im, padded_product(u, v, grid), grid) - padded_product(
        apply_I(im, u, grid), apply_I(im, v, grid), grid
    )


class InvalidScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ISchedule:
    """N(n) = kappa^(coef * n) with coef = -1/(7/4 - s) + eta1 unless overridden."""

    kappa: float = 0.9
    eta1: float = 0.01
    s: float = 0.9
    exponent_coeff: Optional[float] = None
    nyquist: Optional[float] = None  # clamp value, if any

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise InvalidScheduleError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.coeff >= 0:
            raise InvalidScheduleError(
                f"schedule exponent coefficient {self.coeff:.4g} is nonnegative; N(n) would not grow"
            )

    @property
    def coeff(self) -> float:
        if self.exponent_coeff is not None:
            return float(self.exponent_coeff)
        return -1.0 / (1.75 - self.s) + self.eta1


def alternative_exponent_coeff(s: float, eps: float = 0.0) -> float:
    """The alternative exponent -1/(3/4 - s + eps); positive for s > 3/4 + eps."""
    return -1.0 / (0.75 - s + eps)


def schedule_N(sch: ISchedule, n: int) -> float:
    if n < 0:
        raise ValueError("step index must be nonnegative")
    return float(sch.kappa ** (sch.coeff * n))


def schedule_N_clamped(sch: ISchedule, n: int) -> tuple[float, bool]:
    N = schedule_N(sch, n)
    if sch.nyquist is not None and N > sch.nyquist:
        return float(sch.nyquist), True
    return N, False


@dataclass(frozen=True)
class ProductRuleRecord:
    lhs: float
    rhs: float

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def product_rule_check(
    im: IMultiplier, a: float, f1: np.ndarray, f2: np.ndarray, grid: Grid
) -> ProductRuleRecord:
    """Both sides of the weighted I-product rule for ``d/dy (f1 f2)``."""
    w = np.exp(a * grid.x)
    lhs = l2_norm(w * apply_I(im, derivative(padded_product(f1, f2, grid), grid), grid), grid)
    If1, If2 = apply_I(im, f1, grid), apply_I(im, f2, grid)
    rhs = 2 * h1_norm(If1, grid) * l2_norm(w * derivative(If2, grid), grid) + 2 * h1_norm(
        If2, grid
    ) * l2_norm(w * derivative(If1, grid), grid)
    return ProductRuleRecord(lhs, rhs)
