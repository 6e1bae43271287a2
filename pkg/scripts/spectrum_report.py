#!/usr/bin/env python
"""Discrete spectrum of the weighted linearization for a few (a, c) pairs."""
import argparse
import time

from kdvstab.grid import Grid
from kdvstab.spectral_ops import build_operator, discrete_spectrum, kernel_residuals

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--points", type=int, nargs="+", default=[512, 1024])
ap.add_argument("--box", type=float, default=128.0)
args = ap.parse_args()

print("a,c,num_points,kernel_abs_max,max_re_rest,b,gap_ok,beta,seconds")
for n in args.points:
    g = Grid(n, args.box)
    for a, c in [(0.3, 1.0), (0.5, 1.0), (0.5, 2.0)]:
        t0 = time.perf_counter()
        rep = discrete_spectrum(build_operator(g, a, c))
        el = time.perf_counter() - t0
        beta = kernel_residuals(g, a, c)[2]
        print(f"{a},{c},{n},{abs(rep.kernel).max():.2e},{rep.max_real_rest:.5f},{rep.bound:.5f},{rep.gap_ok()},{beta:.6f},{el:.2f}")
