#!/usr/bin/env python
"""Increment of H(psi + I_N v) over one short KdV step, against N^{-1}||I_N v||^2."""
from kdvstab.experiments import RunConfig, hamiltonian_increment_experiment

for s in (0.9, 0.95):
    res = hamiltonian_increment_experiment(RunConfig(s=s), N_list=(4, 8, 16, 32, 64))
    print(f"s = {s}, decreasing = {res['decreasing']}")
    for r in res["rows"]:
        print(f"  N={r['N']:3d}  dH={r['increment']:+.3e}  ref={r['reference']:.3e}  ratio={r['ratio']:+.3f}")
