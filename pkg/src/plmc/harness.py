"""Experiment harness: JSON configs in, CSV samples and JSON reports out.

A config fully determines every output byte except wall-clock fields: chains,
metric reference draws, and projection directions all derive from the single
config seed through disjoint named streams, and numbers are written in
shortest round-trip form.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds, metrics
from .potentials import (
    CompositePotential,
    ContractViolation,
    IsotropicQuadratic,
    PowerPenalty,
    QuadraticRegularizer,
    ZeroPotential,
    load_matrix_csv,
    make_bridge_posterior,
)
from .provenance import config_hash
from .samplers import (
    InitStrategy,
    SamplerConfig,
    approximate_minimizer,
    default_backend,
    make_init,
    run_ensemble,
)

SCHEMA_VERSION = 1
PLAN_MODES = ("w2", "tv", "det-w2", "det-tv", "regularized")
METRIC_KINDS = ("sliced_w2_gaussian", "tv_quadrature", "moment4")
SWEEP_AXES = ("K", "eta", "mu", "alpha", "n_chains")
POTENTIAL_KINDS = ("zero", "quadratic", "abs", "power", "bridge")


class ConfigError(ValueError):
    """Config validation failed; ``diagnostics`` lists every violation."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass
class RunReport:
    """Everything one experiment produced, minus the raw samples."""

    schema_version: int
    config_hash: str
    seed: int
    variant: str
    eta: float
    mu: float
    K: int
    n_chains: int
    dim: int
    backend: str
    plan: Optional[dict]
    metrics: list[dict]
    grad_calls_total: int
    wall_clock_s: float
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def build_potential(spec: dict) -> CompositePotential:
    """Construct the composite potential described by a config block."""
    kind = spec.get("kind")
    if kind not in POTENTIAL_KINDS:
        raise ContractViolation(f"unknown potential kind {kind!r}")
    reg_spec = spec.get("regularizer")
    if not isinstance(reg_spec, dict) or "lambda" not in reg_spec:
        raise ContractViolation("potential needs a regularizer with 'lambda'")
    lam = float(reg_spec["lambda"])

    if kind == "bridge":
        A = np.asarray(spec["A"], dtype=np.float64) if "A" in spec \
            else load_matrix_csv(spec["A_csv"])
        b = np.asarray(spec["b"], dtype=np.float64).ravel() if "b" in spec \
            else load_matrix_csv(spec["b_csv"]).ravel()
        dim = A.shape[1]
        reg = QuadraticRegularizer(dim, lam, reg_spec.get("center"))
        return make_bridge_posterior(A, b, float(spec.get("gamma", 1.0)),
                                     float(spec.get("alpha", 0.0)), reg)

    dim = int(spec["dim"])
    reg = QuadraticRegularizer(dim, lam, reg_spec.get("center"))
    if kind == "zero":
        return CompositePotential(ZeroPotential(dim), reg,
                                  minimizer_hint=reg.center)
    if kind == "quadratic":
        base = IsotropicQuadratic(dim, float(spec.get("a", 0.0)),
                                  spec.get("center"))
        hint = None
        if base.a == 0.0:
            hint = reg.center
        elif np.array_equal(base.center, reg.center):
            hint = reg.center
        return CompositePotential(base, reg, minimizer_hint=hint)
    gamma = float(spec.get("gamma", 1.0))
    alpha = 0.0 if kind == "abs" else float(spec.get("alpha", 0.0))
    return CompositePotential(PowerPenalty(dim, gamma, alpha), reg)


def parse_init(spec: Optional[dict]) -> InitStrategy:
    if spec is None:
        return InitStrategy()
    center = spec.get("center")
    return InitStrategy(kind=spec.get("kind", "gaussian_at_min"),
                        center=None if center is None else np.asarray(center, float),
                        scale=spec.get("scale"))


def validate(cfg: dict) -> list[str]:
    """All violated invariants, without running anything."""
    diags: list[str] = []
    if cfg.get("schema_version") != SCHEMA_VERSION:
        diags.append(f"schema_version: expected {SCHEMA_VERSION}")

    pot_spec = cfg.get("potential")
    pot = None
    if not isinstance(pot_spec, dict):
        diags.append("potential: missing section")
    else:
        try:
            pot = build_potential(pot_spec)
        except (ContractViolation, KeyError, ValueError, OSError) as exc:
            diags.append(f"potential: {exc}")
        reg_spec = pot_spec.get("regularizer", {})
        if isinstance(reg_spec, dict) and "m" in reg_spec and "lambda" in reg_spec:
            if float(reg_spec["lambda"]) > float(reg_spec["m"]):
                diags.append("potential.regularizer: strong convexity exceeds "
                             "smoothness (lambda > m)")

    sampler = cfg.get("sampler")
    planner_mode = None
    if not isinstance(sampler, dict):
        diags.append("sampler: missing section")
    else:
        if sampler.get("variant") not in ("LMC", "PLMC", "SLMC"):
            diags.append("sampler.variant: must be LMC, PLMC, or SLMC")
        explicit = "eta" in sampler or "K" in sampler or "mu" in sampler
        planned = "planner" in sampler
        if explicit == planned:
            diags.append("sampler: exactly one of explicit parameters "
                         "or planner must be given")
        if explicit:
            if float(sampler.get("eta", 0.0)) <= 0.0:
                diags.append("sampler.eta: must be > 0")
            if int(sampler.get("K", 0)) < 0:
                diags.append("sampler.K: must be >= 0")
            if float(sampler.get("mu", 0.0)) < 0.0:
                diags.append("sampler.mu: must be >= 0")
        if planned:
            planner = sampler["planner"]
            planner_mode = planner.get("mode")
            if planner_mode not in PLAN_MODES:
                diags.append(f"sampler.planner.mode: must be one of {PLAN_MODES}")
            if not 0.0 < float(planner.get("eps", 0.0)):
                diags.append("sampler.planner.eps: must be > 0")
            if planner_mode in ("det-w2", "det-tv") and pot is not None \
                    and pot.holder_alpha == 0.0:
                diags.append("sampler.planner: deterministic planner is "
                             "undefined at alpha=0 (the smooth approximation "
                             "carries a constant gradient bias)")
            if planner_mode == "regularized" \
                    and cfg.get("constants", {}).get("m4") is None:
                diags.append("constants.m4: required by the regularized planner")

    ensemble = cfg.get("ensemble")
    if not isinstance(ensemble, dict) or "seed" not in ensemble:
        diags.append("ensemble.seed: mandatory")
    else:
        if not isinstance(ensemble["seed"], int) or ensemble["seed"] < 0:
            diags.append("ensemble.seed: must be a nonnegative integer")
        if int(ensemble.get("n_chains", 1)) < 1:
            diags.append("ensemble.n_chains: must be >= 1")

    init = cfg.get("init")
    if init is not None and init.get("kind") not in ("gaussian_at_min", "point",
                                                     "custom"):
        diags.append("init.kind: must be gaussian_at_min, point, or custom")

    for j, mspec in enumerate(cfg.get("metrics", [])):
        kind = mspec.get("kind")
        if kind not in METRIC_KINDS:
            diags.append(f"metrics[{j}].kind: unknown kind {kind!r}")
        elif kind == "tv_quadrature" and pot is not None and pot.dim != 1:
            diags.append(f"metrics[{j}]: tv_quadrature needs a 1-D potential")
    return diags


def _resolve_constants(cfg: dict, pot: CompositePotential,
                       init_center: np.ndarray) -> bounds.ProblemConstants:
    """Problem constants from the config, with surrogates where unknown.

    The initial-distance estimate, when not supplied, is the conservative
    ``||init_center - x_hat|| + sqrt(d / lam)`` built from the stationary
    second-moment bound.
    """
    overrides = cfg.get("constants", {})
    x_hat, _ = approximate_minimizer(pot)
    x_star_norm = overrides.get("x_star_norm")
    if x_star_norm is None:
        x_star_norm = float(np.linalg.norm(x_hat))
    w2_init = overrides.get("w2_init")
    if w2_init is None:
        w2_init = float(np.linalg.norm(init_center - x_hat)
                        + math.sqrt(pot.dim / pot.strong_lambda))
    return bounds.ProblemConstants.from_potential(
        pot, x_star_norm=float(x_star_norm), w2_init=float(w2_init),
        m4=overrides.get("m4"))


def resolve_plan(cfg: dict, pot: CompositePotential,
                 mode: Optional[str] = None, eps: Optional[float] = None
                 ) -> tuple[bounds.PlanReport, CompositePotential]:
    """Evaluate the configured planner; the regularized mode swaps in the
    planned regularization strength and returns the rebuilt potential."""
    planner = cfg["sampler"].get("planner", {})
    mode = mode or planner.get("mode")
    eps = float(eps if eps is not None else planner.get("eps"))
    init_strategy = parse_init(cfg.get("init"))
    init_center = make_init(pot, init_strategy, mu=0.0).center
    consts = _resolve_constants(cfg, pot, init_center)

    if mode == "w2":
        return bounds.plan_w2(eps, consts), pot
    if mode == "tv":
        return bounds.plan_tv(eps, consts), pot
    if mode == "det-w2":
        return bounds.plan_det_w2(eps, consts), pot
    if mode == "det-tv":
        beta_floor = float(planner.get("beta_floor", 1.0))
        return bounds.plan_det_tv(eps, beta_floor, consts), pot
    if mode == "regularized":
        if consts.m4 is None:
            raise ContractViolation("regularized planner needs constants.m4")
        dist = float(cfg.get("constants", {}).get("dist_xprime_xstar", 0.0))
        lam_reg = bounds.plan_regularized(eps, consts.m4, dist)
        new_cfg = copy.deepcopy(cfg["potential"])
        new_cfg["regularizer"]["lambda"] = lam_reg
        new_pot = build_potential(new_cfg)
        new_center = make_init(new_pot, init_strategy, mu=0.0).center
        new_consts = _resolve_constants(cfg, new_pot, new_center)
        report = bounds.plan_tv(eps / 2.0, new_consts)
        report.lambda_reg = lam_reg
        return report, new_pot
    raise ContractViolation(f"unknown planner mode {mode!r}")


def _metric_rng(seed: int, metric_index: int, sub: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(1, metric_index, sub))
    return np.random.Generator(np.random.Philox(ss))


def _eval_metric(mspec: dict, samples: metrics.SampleSet,
                 pot: CompositePotential, seed: int, j: int) -> dict:
    kind = mspec["kind"]
    if kind == "sliced_w2_gaussian":
        d = samples.dim
        n = int(mspec.get("reference_n", samples.n))
        mean = np.asarray(mspec.get("mean", np.zeros(d)), dtype=np.float64)
        scale = float(mspec.get("scale", 1.0))
        n_proj = int(mspec.get("n_projections", 64))
        ref = mean + math.sqrt(scale) * _metric_rng(seed, j, 0).standard_normal((n, d))
        value = metrics.w2_sliced(samples, ref, n_proj, _metric_rng(seed, j, 1))
        record = {"kind": kind, "value": value, "n": samples.n,
                  "reference_n": n, "n_proj": n_proj, "seed": seed}
        if mspec.get("baseline"):
            ref2 = mean + math.sqrt(scale) * _metric_rng(seed, j, 2).standard_normal((n, d))
            record["baseline"] = metrics.w2_sliced(ref, ref2, n_proj,
                                                   _metric_rng(seed, j, 1))
        return record
    if kind == "tv_quadrature":
        span = mspec.get("span")
        grid = metrics.quadrature_density_1d(
            pot, None if span is None else (span[0], span[1]),
            int(mspec.get("n_cells", 4000)))
        n_bins = int(mspec.get("n_bins", 100))
        value = metrics.tv_histogram(samples, grid, n_bins)
        return {"kind": kind, "value": value, "n": samples.n, "bins": n_bins,
                "n_cells": grid.n_cells, "span": [grid.lo, grid.hi],
                "seed": seed}
    if kind == "moment4":
        center = mspec.get("center")
        if center is None:
            center, _ = approximate_minimizer(pot)
        value = metrics.moment4(samples, center)
        return {"kind": kind, "value": value, "n": samples.n, "seed": seed}
    raise ContractViolation(f"unknown metric kind {kind!r}")


def run_experiment(cfg: dict, out_dir=None, write: bool = True) -> RunReport:
    """Resolve plan, run the ensemble, compute metrics, write outputs."""
    diags = validate(cfg)
    if diags:
        raise ConfigError(diags)
    t0 = time.perf_counter()
    chash = config_hash(cfg)
    warnings: list[str] = []

    pot = build_potential(cfg["potential"])
    sampler_spec = cfg["sampler"]
    ensemble = cfg["ensemble"]
    seed = int(ensemble["seed"])
    n_chains = int(ensemble.get("n_chains", 1))

    plan_dict = None
    if "planner" in sampler_spec:
        plan, pot = resolve_plan(cfg, pot)
        eta, mu, K = plan.eta, plan.mu, plan.K
        plan_dict = plan.to_dict()
    else:
        eta = float(sampler_spec["eta"])
        mu = float(sampler_spec.get("mu", 0.0))
        K = int(sampler_spec["K"])

    # plans transcribe very conservative constants, so their iteration counts
    # can be astronomically large; an explicit cap keeps desk-scale runs
    # feasible while the report still echoes the full plan
    cap = ensemble.get("max_iterations")
    if cap is not None and K > int(cap):
        warnings.append(f"iteration count {K} capped at {int(cap)} "
                        "for execution")
        K = int(cap)

    scfg = SamplerConfig(variant=sampler_spec["variant"], eta=eta, mu=mu, K=K,
                         seed=seed, n_chains=n_chains)
    init_strategy = parse_init(cfg.get("init"))
    init_sampler = make_init(pot, init_strategy, mu=mu)
    if init_sampler.fallback_warning:
        warnings.append("minimizer search did not converge; "
                        "init centered at the origin")

    samples = run_ensemble(pot, scfg, init_strategy)
    samples.meta["config_hash"] = chash

    metric_records = [
        _eval_metric(mspec, samples, pot, seed, j)
        for j, mspec in enumerate(cfg.get("metrics", []))
    ]

    report = RunReport(
        schema_version=SCHEMA_VERSION, config_hash=chash, seed=seed,
        variant=scfg.variant, eta=eta, mu=mu, K=K, n_chains=n_chains,
        dim=pot.dim, backend=default_backend(), plan=plan_dict,
        metrics=metric_records, grad_calls_total=K * n_chains,
        wall_clock_s=time.perf_counter() - t0, warnings=warnings)

    if write:
        out = Path(out_dir if out_dir is not None
                   else cfg.get("output", {}).get("dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        samples.to_csv(out / "samples.csv")
        (out / "report.json").write_text(report.to_json() + "\n")
    return report


def _apply_axis(cfg: dict, axis: str, value) -> dict:
    out = copy.deepcopy(cfg)
    if axis in ("K", "eta", "mu"):
        if "planner" in out["sampler"]:
            raise ConfigError([f"axis {axis} conflicts with planner mode"])
        out["sampler"][axis] = int(value) if axis == "K" else float(value)
    elif axis == "alpha":
        kind = out["potential"].get("kind")
        if kind not in ("power", "bridge", "abs"):
            raise ConfigError(["axis alpha needs a power, abs, or bridge "
                               "potential"])
        if kind == "abs":
            out["potential"]["kind"] = "power"
        out["potential"]["alpha"] = float(value)
    elif axis == "n_chains":
        out["ensemble"]["n_chains"] = int(value)
    else:
        raise ConfigError([f"invalid axis {axis!r}; choose from {SWEEP_AXES}"])
    return out


def sweep(cfg: dict, axis: str, values, out_dir=None) -> list[dict]:
    """One independent run per value; rows are order-stable by value index."""
    rows = []
    metric_kinds: list[str] = []
    for value in values:
        report = run_experiment(_apply_axis(cfg, axis, value), write=False)
        row = {"axis": axis, "value": value}
        for rec in report.metrics:
            name = rec["kind"]
            suffix = name
            k = 2
            while suffix in row:
                suffix = f"{name}_{k}"
                k += 1
            row[suffix] = rec["value"]
            if suffix not in metric_kinds:
                metric_kinds.append(suffix)
        rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["axis", "value", *metric_kinds])
            for row in rows:
                writer.writerow(
                    [row["axis"], repr(row["value"]) if isinstance(row["value"], float)
                     else row["value"],
                     *(repr(float(row[k])) if k in row else "" for k in metric_kinds)])
    return rows
