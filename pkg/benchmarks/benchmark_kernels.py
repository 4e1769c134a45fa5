#!/usr/bin/env python3
"""Compare the compiled chain kernel against the pure-numpy backend.

Runs the same perturbed-chain workload on both backends, checks that the
outputs agree, and reports steps/second.  Usage::

    python benchmarks/benchmark_kernels.py [--chains 4096] [--steps 2000]
"""

import argparse
import time

import numpy as np

from plmc.potentials import make_abs_quadratic, make_quadratic_target
from plmc.samplers import SamplerConfig, available_backends, run_ensemble


def time_backend(pot, cfg, backend: str):
    t0 = time.perf_counter()
    samples = run_ensemble(pot, cfg, backend=backend)
    return samples, time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chains", type=int, default=4096)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {backends}")
    workloads = [
        ("nonsmooth 1-D (|x| + x^2/2)", make_abs_quadratic(),
         SamplerConfig(variant="PLMC", eta=0.002, mu=0.02, K=args.steps,
                       seed=args.seed, n_chains=args.chains)),
        ("gaussian 2-D", make_quadratic_target(2),
         SamplerConfig(variant="PLMC", eta=0.005, mu=0.05, K=args.steps,
                       seed=args.seed, n_chains=args.chains)),
    ]
    for label, pot, cfg in workloads:
        total_steps = cfg.K * cfg.n_chains
        results = {}
        for backend in backends:
            samples, wall = time_backend(pot, cfg, backend)
            results[backend] = samples
            print(f"{label:30s} {backend:9s} {wall:7.2f}s  "
                  f"{total_steps / wall / 1e6:8.1f} Msteps/s")
        if len(results) == 2:
            agree = (results["compiled"].points == results["python"].points).all()
            print(f"{label:30s} outputs bitwise identical: {agree}")


if __name__ == "__main__":
    main()
