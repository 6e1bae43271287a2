"""Exponential weights e^{ay}, truncated weights omega_{a,R} and weighted H^1 norms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import Grid, derivative, l2_norm
from .kdv import TimeSeries

OVERFLOW_GUARD = 1e300


class OverflowRiskError(ArithmeticError):
    pass


class InadmissibleWeightError(ValueError):
    pass


def max_weight_rate(c: float) -> float:
    return math.sqrt(c / 3.0)


@dataclass(frozen=True)
class WeightParams:
    """Weight rate ``a`` with 0 <= a < sqrt(c_ref/3); ``R`` truncates the weight."""

    a: float
    R: float = math.inf
    c_ref: float = 1.0

    def __post_init__(self):
        bound = max_weight_rate(self.c_ref)
        if not 0 <= self.a < bound:
            raise InadmissibleWeightError(
                f"weight rate a = {self.a} must satisfy 0 <= a < sqrt(c0/3) = {bound:.6g}"
            )
        if not self.R > 0:
            raise ValueError("truncation radius must be positive")


def weight(p: WeightParams, grid: Grid) -> np.ndarray:
    """Samples of omega_{a,R}: e^{ay} for y < R, zero beyond."""
    y = grid.x
    with np.errstate(over="ignore"):
        w = np.exp(p.a * y)
    if math.isfinite(p.R):
        w = np.where(y < p.R, w, 0.0)
    return w


def _guarded(wf: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(wf)) if wf.size else 0.0
    if not np.isfinite(peak) or peak > OVERFLOW_GUARD:
        raise OverflowRiskError(f"weighted field magnitude {peak:.3g} exceeds guard {OVERFLOW_GUARD:g}")
    return wf


def apply_weight(p: WeightParams, f: np.ndarray, grid: Grid) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        return _guarded(weight(p, grid) * f)


def weighted_h1_norm(p: WeightParams, f: np.ndarray, grid: Grid) -> float:
    """||omega f||_{H^1} through ||omega f||^2 + ||omega (a f + f_y)||^2.

    Only ``f`` is differentiated; the (non-periodic) weight never is.
    """
    w = weight(p, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        wf = _guarded(w * f)
        wd = _guarded(w * (p.a * f + derivative(f, grid)))
    return math.sqrt(l2_norm(wf, grid) ** 2 + l2_norm(wd, grid) ** 2)


def truncation_convergence_check(
    p: WeightParams, f: np.ndarray, grid: Grid, R_list: Iterable[float]
) -> TimeSeries:
    """||omega_{a,R} f||_{H^1} for increasing R, with the untruncated value as ``limit``."""
    R = np.asarray(sorted(R_list), dtype=float)
    vals = np.array([weighted_h1_norm(WeightParams(p.a, r, p.c_ref), f, grid) for r in R])
    limit = weighted_h1_norm(WeightParams(p.a, math.inf, p.c_ref), f, grid)
    return TimeSeries(R, {"norm": vals, "gap": limit - vals})
