"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Stochastic checks use fixed seeds and the 4-standard-error slack
convention, so outcomes are reproducible.
"""

import copy
import math
import time

import numpy as np
import pytest

from plmc import bounds, harness, metrics, smoothing
from plmc.potentials import (
    CompositePotential,
    IsotropicQuadratic,
    QuadraticRegularizer,
    make_abs_quadratic,
    make_power_quadratic,
    make_quadratic_target,
)

from conftest import seeded
import oracles


def report(criterion: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} — {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def criterion1_config() -> dict:
    return {
        "schema_version": 1,
        "potential": {"kind": "zero", "dim": 2,
                      "regularizer": {"lambda": 1.0, "center": [0.0, 0.0]}},
        "sampler": {"variant": "PLMC", "eta": 0.005, "mu": 0.05, "K": 4000},
        "init": {"kind": "gaussian_at_min"},
        "ensemble": {"n_chains": 4096, "seed": 20250809},
        "metrics": [{"kind": "sliced_w2_gaussian", "n_projections": 64,
                     "reference_n": 4096, "baseline": True}],
    }


def criterion2_config(K: int = 20000, n_chains: int = 100_000,
                      seed: int = 20250809) -> dict:
    return {
        "schema_version": 1,
        "potential": {"kind": "abs", "dim": 1, "gamma": 1.0,
                      "regularizer": {"lambda": 1.0, "center": [0.0]}},
        "sampler": {"variant": "PLMC", "eta": 0.002, "mu": 0.02, "K": K},
        "init": {"kind": "gaussian_at_min"},
        "ensemble": {"n_chains": n_chains, "seed": seed},
        "metrics": [{"kind": "tv_quadrature", "n_bins": 100,
                     "span": [-10.0, 10.0], "n_cells": 4000}],
    }


def test_criterion_1_gaussian_sanity(monkeypatch):
    """Smooth limit: perturbed chain on the 2-D standard Gaussian."""
    monkeypatch.setenv("SAMPLE_THREADS", "1")
    rep = harness.run_experiment(criterion1_config(), write=False)
    rec = rep.metrics[0]
    ok = rec["value"] <= 2.0 * rec["baseline"] and rep.wall_clock_s <= 60.0
    report(1, ok, f"sliced-W2 {rec['value']:.4f} vs 2x baseline "
                  f"{2 * rec['baseline']:.4f}, wall {rep.wall_clock_s:.1f}s <= 60s")


def test_criterion_2_nonsmooth_1d_target(monkeypatch):
    """|x| + x^2/2 target: histogram TV against the quadrature truth."""
    monkeypatch.setenv("SAMPLE_THREADS", "1")
    rep = harness.run_experiment(criterion2_config(), write=False)
    tv = rep.metrics[0]["value"]
    ok = tv <= 0.05 and rep.wall_clock_s <= 300.0
    report(2, ok, f"tv={tv:.4f} <= 0.05 with 1e5 chains, "
                  f"wall {rep.wall_clock_s:.0f}s <= 300s")


def _grid_potential(alpha: float, d: int) -> CompositePotential:
    if alpha == 0.0:
        return make_abs_quadratic(d)
    if alpha == 1.0:
        return CompositePotential(IsotropicQuadratic(d, 1.0),
                                  QuadraticRegularizer(d, 1.0))
    return make_power_quadratic(d, 1.0, alpha)


def test_criterion_3_variance_bound_grid():
    """Normalized estimator variance never exceeds its closed-form bound."""
    worst = ""
    ok = True
    key = 0
    for alpha in (0.0, 0.5, 1.0):
        for mu in (0.01, 0.1):
            for d in (1, 10):
                pot = _grid_potential(alpha, d)
                x = np.full(d, 0.5 / math.sqrt(d))
                key += 1
                est, se = smoothing.variance_estimate(
                    pot, x, mu, 10_000, seeded(3000 + key),
                    return_stderr=True)
                bound = bounds.grad_variance_bound(
                    pot.holder_L, alpha, pot.smooth_m, mu, d)
                if est > bound + 4 * se:
                    ok = False
                    worst = f"alpha={alpha} mu={mu} d={d}: {est:.4g} > {bound:.4g}"
    report(3, ok, worst or "estimate <= bound + 4se at all 12 grid points")


def test_criterion_4_smoothing_gap_bound():
    """Pointwise smoothing gap on |x| + x^2/2 within its closed-form bound."""
    pot = make_abs_quadratic()
    ok = True
    detail = []
    for i, x0 in enumerate((0.0, 1.0, -2.0)):
        for j, mu in enumerate((0.1, 0.5)):
            est, se = smoothing.smoothed_value_mc(
                pot, np.array([x0]), mu, 100_000, seeded(4000 + 10 * i + j))
            gap = est - pot.value(np.array([x0]))
            bound = bounds.smoothing_gap_bound(2.0, 0.0, mu, 1) \
                + 1.0 * mu * mu / 2.0
            if not (-4 * se <= gap <= bound + 4 * se):
                ok = False
                detail.append(f"x={x0} mu={mu}: gap={gap:.4g} bound={bound:.4g}")
    report(4, ok, "; ".join(detail) or
           "0 - 4se <= gap <= bound + 4se at all 6 points")


def test_criterion_5_closed_form_oracle():
    """Monte-Carlo smoothing matches the closed forms at 12 points each."""
    abs_pot = make_abs_quadratic()          # |x| + x^2/2
    quad_pot = make_quadratic_target(1)     # x^2/2
    xs = (-2.0, -0.5, 0.0, 0.7, 1.3, 2.5)
    mus = (0.1, 0.6)
    ok = True
    for i, x0 in enumerate(xs):
        for j, mu in enumerate(mus):
            x = np.array([x0])
            est, se = smoothing.smoothed_value_mc(
                abs_pot, x, mu, 100_000, seeded(5000 + 10 * i + j))
            closed = smoothing.smoothed_value_closed("abs1d", {}, x0, mu) \
                + smoothing.smoothed_value_closed("quadratic", {"a": 1.0},
                                                  x, mu)
            ok &= abs(est - closed) <= 4 * se
            est, se = smoothing.smoothed_value_mc(
                quad_pot, x, mu, 100_000, seeded(5500 + 10 * i + j))
            closed = smoothing.smoothed_value_closed("quadratic", {"a": 1.0},
                                                     x, mu)
            ok &= abs(est - closed) <= 4 * se
    report(5, ok, "MC within 4 stderr of closed forms at 12 + 12 points")


def test_criterion_6_shift_variance_separation():
    """Shifted minus plain estimator variance matches the hand derivation."""
    pot = make_quadratic_target(5)
    mu, eta, d = 0.1, 0.01, 5
    x = np.full(d, 0.2)
    plain = smoothing.variance_estimate(pot, x, mu, 10_000, seeded(6001))
    shifted = smoothing.variance_estimate(pot, x, mu, 10_000, seeded(6002),
                                          shifted_eta=eta)
    # per coordinate: Var((1 - 1/eta) mu z) - Var(mu z)
    hand = mu**2 * ((1.0 - 1.0 / eta) ** 2 - 1.0)
    diff = shifted - plain
    ok = abs(diff - hand) <= 0.2 * hand
    report(6, ok, f"variance gap {diff:.2f} within 20% of hand value {hand:.2f}")


def test_criterion_7_planner_exactness():
    """Planners match 60-digit re-evaluations and their preconditions."""
    rel = 1e-9
    ok = True
    msgs = []

    def close(a, b):
        b = float(b)
        return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)

    for p in (dict(eps=0.5, d=2, L=1.0, alpha=0.0, m=1.0, lam=1.0, w2_init=2.0),
              dict(eps=0.3, d=5, L=2.0, alpha=0.5, m=2.0, lam=0.7, w2_init=3.0),
              dict(eps=0.9, d=1, L=1.0, alpha=1.0, m=1.5, lam=1.0, w2_init=1.5)):
        consts = bounds.ProblemConstants(d=p["d"], L=p["L"], alpha=p["alpha"],
                                         m=p["m"], lam=p["lam"],
                                         w2_init=p["w2_init"])
        rep = bounds.plan_w2(p["eps"], consts)
        mu, eta, k_raw = oracles.plan_w2(**p)
        good = close(rep.mu, mu) and close(rep.eta, eta) \
            and close(rep.intermediates["K_raw"], k_raw) \
            and rep.eta < 2.0 / (rep.intermediates["M_mu"] + p["m"] + p["lam"])
        ok &= good
        if not good:
            msgs.append(f"plan_w2{tuple(p.values())}")

    for p in (dict(eps=0.5, d=1, L=2.0, alpha=0.0, m=1.0, lam=1.0,
                   x_star_norm=0.0, w2_init=2.0),
              dict(eps=1.0, d=1, L=1.0, alpha=1.0, m=1.0, lam=1.0,
                   x_star_norm=0.0, w2_init=1.0),
              dict(eps=0.25, d=3, L=1.5, alpha=0.5, m=2.0, lam=0.5,
                   x_star_norm=1.0, w2_init=4.0)):
        consts = bounds.ProblemConstants(d=p["d"], L=p["L"], alpha=p["alpha"],
                                         m=p["m"], lam=p["lam"],
                                         x_star_norm=p["x_star_norm"],
                                         w2_init=p["w2_init"])
        rep = bounds.plan_tv(p["eps"], consts)
        mu, eps_bar, eta, k_raw = oracles.plan_tv(**p)
        good = close(rep.mu, mu) and close(rep.eps_bar, eps_bar) \
            and close(rep.eta, eta) \
            and close(rep.intermediates["K_raw"], k_raw) \
            and rep.eta < 2.0 / (rep.intermediates["M_mu"] + p["m"] + p["lam"])
        ok &= good
        if not good:
            msgs.append(f"plan_tv{tuple(p.values())}")

    for args in ((0.1, 4.0, 0.0), (0.1, 4.0, math.sqrt(2.0)), (0.05, 9.0, 1.0)):
        good = close(bounds.plan_regularized(*args),
                     oracles.plan_regularized(*args))
        ok &= good
        if not good:
            msgs.append(f"plan_regularized{args}")

    for p in (dict(eps=0.5, d=2, L=1.0, alpha=0.5, m=1.0, lam=1.0, w2_init=2.0),
              dict(eps=0.2, d=1, L=2.0, alpha=1.0, m=1.5, lam=0.8, w2_init=3.0),
              dict(eps=0.7, d=4, L=1.0, alpha=0.25, m=1.0, lam=1.0, w2_init=2.0)):
        consts = bounds.ProblemConstants(d=p["d"], L=p["L"], alpha=p["alpha"],
                                         m=p["m"], lam=p["lam"],
                                         w2_init=p["w2_init"])
        rep = bounds.plan_det_w2(p["eps"], consts)
        delta, eta, k_raw = oracles.plan_det_w2(**p)
        good = close(rep.delta, delta) and close(rep.eta, eta) \
            and close(rep.intermediates["K_raw"], k_raw) \
            and rep.eta <= 1.0 / (2.0 * p["lam"]) \
            and rep.eta <= p["lam"] / (36.0 * (rep.intermediates["M"] + p["m"]))
        ok &= good
        if not good:
            msgs.append(f"plan_det_w2{tuple(p.values())}")

    for p in (dict(eps=0.5, beta_floor=1.0, d=2, L=1.0, alpha=0.5, m=1.0,
                   lam=1.0),
              dict(eps=0.3, beta_floor=2.0, d=1, L=2.0, alpha=1.0, m=1.5,
                   lam=0.8),
              dict(eps=0.8, beta_floor=1.5, d=3, L=1.0, alpha=0.75, m=1.2,
                   lam=0.6)):
        consts = bounds.ProblemConstants(d=p["d"], L=p["L"], alpha=p["alpha"],
                                         m=p["m"], lam=p["lam"], w2_init=1.0)
        rep = bounds.plan_det_tv(p["eps"], p["beta_floor"], consts)
        delta, eta, k_raw = oracles.plan_det_tv(**p)
        good = close(rep.delta, delta) and close(rep.eta, eta) \
            and close(rep.intermediates["K_raw"], k_raw) \
            and rep.eta <= 1.0 and rep.K >= p["beta_floor"]
        ok &= good
        if not good:
            msgs.append(f"plan_det_tv{tuple(p.values())}")

    report(7, ok, "; ".join(msgs) or
           "all 5 planners match the independent re-evaluation at 3 points "
           "each (rel 1e-9) and satisfy their step-size preconditions")


def test_criterion_8_metric_oracles():
    """Exact transport solver against enumeration and sorting."""
    gen = seeded(8001)
    ok = True
    for _ in range(50):
        n = int(gen.integers(1, 7))
        d = int(gen.integers(1, 4))
        a = gen.standard_normal((n, d))
        b = gen.standard_normal((n, d))
        if abs(metrics.w2_exact(a, b) - oracles.w2_bruteforce(a, b)) > 1e-12:
            ok = False
    for _ in range(100):
        n = int(gen.integers(1, 65))
        a = gen.standard_normal((n, 1))
        b = gen.standard_normal((n, 1))
        if abs(metrics.w2_exact(a, b) - metrics.w2_1d(a, b)) > 1e-10:
            ok = False
    a = gen.standard_normal((200, 1))
    ok &= metrics.tv_histogram(a, a.copy(), 20) == 0.0
    ok &= metrics.tv_histogram(a, a + 100.0, 20) == 1.0
    report(8, ok, "assignment == brute force (50x n<=6), == sorting "
                  "(100x 1-D n<=64), tv self=0 and disjoint=1")


def test_criterion_9_mixing_monotonicity(monkeypatch):
    """Histogram TV is nonincreasing in chain length, up to 10% noise."""
    monkeypatch.setenv("SAMPLE_THREADS", "1")
    cfg = criterion2_config(n_chains=40_000, seed=7)
    rows = harness.sweep(cfg, "K", [200, 2000, 20000])
    tvs = [row["tv_quadrature"] for row in rows]
    ok = all(tvs[i + 1] <= 1.1 * tvs[i] for i in range(len(tvs) - 1))
    report(9, ok, f"TV column {['%.4f' % t for t in tvs]} nonincreasing "
                  "within the 10% allowance")


def test_criterion_10_determinism(monkeypatch, tmp_path):
    """Identical bytes across reruns and across worker counts."""
    cfg = criterion1_config()
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        monkeypatch.setenv("SAMPLE_THREADS", threads)
        out = tmp_path / name
        harness.run_experiment(copy.deepcopy(cfg), out_dir=out)
        outs.append((out / "samples.csv").read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    report(10, ok, "samples.csv byte-identical across two runs and "
                   "SAMPLE_THREADS in {1, 8}")
