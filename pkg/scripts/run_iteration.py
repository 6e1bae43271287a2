#!/usr/bin/env python
"""Single iteration-scheme run with a per-step summary printed to stdout."""
import argparse
import sys

from kdvstab.experiments import RunAborted, load_config, run_iteration_scheme

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--config", default="default")
ap.add_argument("--seed", type=int, default=None)
ap.add_argument("--out", default="runs/iterate")
args = ap.parse_args()

cfg = load_config(args.config, seed=args.seed)
try:
    rec = run_iteration_scheme(cfg, args.out)
except RunAborted as exc:
    print(f"aborted: {exc}; partial record in {args.out}", file=sys.stderr)
    sys.exit(2)
for r in rec.steps:
    t, N, K, vh1, c, g, cd, gd, pr, ok = r
    print(f"t={t:5.1f} N={N:7.3f} K={K:.3e} c-c0={c - cfg.c0:+.2e} c_dot={cd:+.2e} gamma_dot={gd:+.2e} ok={ok}")
m = rec.manifest
print(f"decay_rate={m['fit.decay_rate']:.4f} (b = {cfg.b}), envelope_slope={m['fit.envelope_slope']:.4f}")
