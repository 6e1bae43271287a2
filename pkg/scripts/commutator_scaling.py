#!/usr/bin/env python
"""Weighted commutator norm against N for smooth and rough profile pairs."""
import argparse

from kdvstab.experiments import RunConfig, commutator_scaling_experiment
from kdvstab.grid import Grid

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--s", type=float, nargs="+", default=[7 / 8, 0.9, 0.95])
ap.add_argument("--points", type=int, default=8192)
args = ap.parse_args()

cfg = RunConfig()
for kind in ("sech", "rough"):
    for s in args.s:
        r = commutator_scaling_experiment(cfg, s=s, grid=Grid(args.points, 40.0), kind=kind)
        norms = " ".join(f"{v:.3e}" for v in r["norm"])
        print(f"{kind:5s} s={s:.4f} slope={r['slope']:+.4f} predicted<={r['predicted']:+.4f} norms: {norms}")
