#!/usr/bin/env python
"""Observed constants for the four linear estimates, at two bandwidths."""
import argparse

from kdvstab.bourgain import PROBE_KINDS, linear_estimate_probe

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=20)
ap.add_argument("--band", type=float, default=2.0)
args = ap.parse_args()

for kind in PROBE_KINDS:
    for band in (args.band, 2 * args.band):
        r = linear_estimate_probe(kind, args.trials, band=band)
        print(f"{kind:9s} band={band:<4g} max={r['max_ratio']:.4f} mean={r['mean_ratio']:.4f}")
