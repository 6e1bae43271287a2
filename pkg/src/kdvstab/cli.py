"""Command-line entry point: ``kdvstab <subcommand> [--config PATH] [--out DIR] [--seed N]``.

Exit status 0 on success, 1 on validation errors, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .grid import Grid, h1_norm, l2_norm

log = logging.getLogger("kdvstab")

SUBCOMMANDS = (
    "simulate",
    "spectrum",
    "modulate",
    "iterate",
    "norms",
    "commutator-scaling",
    "hamiltonian-increment",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kdvstab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", default="default", help="YAML file with RunConfig keys, or 'default'")
    p.add_argument("--out", default=None, help="output directory (default runs/<command>)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _manifest(out: Path, items: dict):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "manifest", "w") as fh:
        for k in sorted(items):
            fh.write(f"{k} = {json.dumps(items[k], sort_keys=True, default=float)}\n")


def _table(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _simulate(cfg, out: Path):
    from .kdv import InstabilityError, SolverConfig, run
    from .soliton import SolitonParams, eval_soliton

    g = cfg.grid
    scfg = SolverConfig(dt=cfg.sim_dt, t_end=cfg.sim_t_end)
    u0 = eval_soliton(SolitonParams(cfg.c0), g.x)
    t0 = time.perf_counter()
    try:
        u, ts = run(u0, g, scfg)
    except InstabilityError as exc:
        part = getattr(exc, "partial", None)
        if part is not None:
            _table(out / "series.csv", ["t", *part.values], zip(part.times, *part.values.values()))
        _manifest(out, {"status": f"failed: {exc}"})
        raise
    exact = eval_soliton(SolitonParams(cfg.c0, x0=cfg.c0 * cfg.sim_t_end), g.x)
    keys = list(ts.values)
    out.mkdir(parents=True, exist_ok=True)
    _table(out / "series.csv", ["t", *keys], zip(ts.times, *(ts.values[k] for k in keys)))
    m, H = ts.values["mass"], ts.values["hamiltonian"]
    _manifest(
        out,
        {
            "status": "ok",
            "shape_error": l2_norm(u - exact, g),
            "mass_drift": float(np.max(np.abs(m - m[0])) / abs(m[0])),
            "hamiltonian_drift": float(np.max(np.abs(H - H[0])) / abs(H[0])),
            "runtime_s": time.perf_counter() - t0,
        },
    )


def _spectrum(cfg, out: Path):
    from .spectral_ops import build_operator, discrete_spectrum

    g = Grid(cfg.spectrum_points, cfg.spectrum_box)
    rep = discrete_spectrum(build_operator(g, cfg.a, cfg.c0))
    out.mkdir(parents=True, exist_ok=True)
    (out / "spectrum.txt").write_text(rep.to_text())
    _manifest(out, {"status": "ok", "b": -cfg.a * (cfg.c0 - cfg.a**2), "gap_ok": rep.gap_ok(0.05)})


def _norms(cfg, out: Path):
    from .bourgain import PROBE_KINDS, linear_estimate_probe, probe_report

    rows, summary = [], {}
    for kind in PROBE_KINDS:
        for band in (cfg.probe_band, 2 * cfg.probe_band):
            r = linear_estimate_probe(kind, cfg.probe_trials, band=band, a=cfg.a, c0=cfg.c0, seed=cfg.seed)
            rows += [(f"{kind}@{band:g}", *row[1:]) for row in r["rows"]]
            summary[f"{kind}.band{band:g}.max_ratio"] = r["max_ratio"]
    out.mkdir(parents=True, exist_ok=True)
    (out / "probes.csv").write_text(probe_report(rows))
    _manifest(out, {"status": "ok", **summary})


def _commutator(cfg, out: Path):
    from .experiments import commutator_scaling_experiment

    res = commutator_scaling_experiment(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _table(out / "commutator.csv", ["N", "norm"], zip(res["N"], res["norm"]))
    _manifest(out, {"status": "ok", **{k: v for k, v in res.items() if k not in ("N", "norm")}})


def _hamiltonian(cfg, out: Path):
    from .experiments import hamiltonian_increment_experiment

    res = hamiltonian_increment_experiment(cfg)
    out.mkdir(parents=True, exist_ok=True)
    rows = res["rows"]
    _table(out / "hamiltonian.csv", ["N", "increment", "reference", "ratio"], [[r[k] for k in ("N", "increment", "reference", "ratio")] for r in rows])
    _manifest(out, {"status": "ok", "decreasing": res["decreasing"], "step": res["step"]})


def cli_dispatch(argv=None) -> int:
    from .experiments import RunAborted, load_config, run_iteration_scheme, run_modulation
    from .kdv import InstabilityError
    from .weighted import OverflowRiskError

    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out or f"runs/{args.command}")
    try:
        cfg = load_config(args.config, seed=args.seed).validate()
        if args.command == "simulate":
            _simulate(cfg, out)
        elif args.command == "spectrum":
            _spectrum(cfg, out)
        elif args.command == "modulate":
            run_modulation(cfg, out)
        elif args.command == "iterate":
            run_iteration_scheme(cfg, out)
        elif args.command == "norms":
            _norms(cfg, out)
        elif args.command == "commutator-scaling":
            _commutator(cfg, out)
        else:
            _hamiltonian(cfg, out)
    except (ValueError, TypeError, FileNotFoundError) as exc:
        print(f"kdvstab: invalid input: {exc}", file=sys.stderr)
        return 1
    except (RunAborted, InstabilityError, OverflowRiskError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"kdvstab: numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"kdvstab: {args.command} -> {out}")
    return 0


def main():
    sys.exit(cli_dispatch())
