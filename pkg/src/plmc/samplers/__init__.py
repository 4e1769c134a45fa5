"""Discrete Langevin chains with deterministic seeding.

Three variants share one stepping kernel:

- ``LMC``: the plain chain ``x <- x - eta * subgrad(x) + sqrt(2 eta) * noise``;
- ``PLMC``: the perturbed chain, which queries the subgradient at a
  Gaussian-perturbed point (an unbiased gradient of the smoothed energy);
- ``SLMC``: the shifted reparametrization of the same dynamics, read through
  ``y_k = x_k - mu * w_{k-1}``, with a higher-variance gradient estimator.

Each step draws the perturbation vector first and the diffusion vector second;
perturbation draws are consumed even at ``mu = 0`` so that matched-schedule
comparisons across variants are exact (`run_lmc` exposes the skipping adapter
via ``consume_perturbation_draws``).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field
from typing import Optional

import numpy as np

from ..potentials import CompositePotential, ContractViolation
from ..provenance import config_hash
from ..metrics import SampleSet
from ._engine import (
    DivergenceError,
    InitSampler,
    approximate_minimizer,
    available_backends,
    chain_streams,
    default_backend,
    make_init_sampler,
    run_chain_set,
)

__all__ = [
    "SamplerConfig", "Chain", "InitStrategy", "DivergenceError",
    "make_init", "run_lmc", "run_plmc", "run_slmc", "run_ensemble",
    "available_backends", "default_backend", "chain_streams",
    "approximate_minimizer",
]

_VARIANTS = ("LMC", "PLMC", "SLMC")


@dataclass(frozen=True)
class SamplerConfig:
    """Chain parameters; hashed into every output for provenance."""

    variant: str
    eta: float
    mu: float = 0.0
    K: int = 0
    seed: int = 0
    n_chains: int = 1
    record_every: int = 1

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ContractViolation(f"variant must be one of {_VARIANTS}")
        if self.eta < 0.0:
            raise ContractViolation("step size eta must be >= 0")
        if self.mu < 0.0:
            raise ContractViolation("smoothing radius mu must be >= 0")
        if self.K < 0 or self.n_chains < 1 or self.record_every < 1:
            raise ContractViolation("K >= 0, n_chains >= 1, record_every >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ContractViolation("seed must be a 64-bit unsigned integer")

    def hash(self) -> str:
        return config_hash(asdict(self))


@dataclass
class Chain:
    """One chain's thinned trajectory plus its always-recorded final state."""

    iterates: np.ndarray
    final: np.ndarray
    config_hash: str
    seed: int
    grad_calls: int


@dataclass(frozen=True)
class InitStrategy:
    """Initial-point rule: where chains start and with what spread.

    ``gaussian_at_min`` centers on the (approximate) energy minimizer with the
    curvature-matched covariance; ``point`` is a deterministic start;
    ``custom`` is an explicit Gaussian ``N(center, scale I)``.
    """

    kind: str = "gaussian_at_min"
    center: Optional[np.ndarray] = field(default=None)
    scale: Optional[float] = None


def make_init(pot: CompositePotential, strategy: InitStrategy | str,
              mu: float = 0.0) -> InitSampler:
    """Resolve an initial-point strategy into a concrete per-chain sampler."""
    if isinstance(strategy, str):
        strategy = InitStrategy(kind=strategy)
    return make_init_sampler(pot, strategy.kind, center=strategy.center,
                             scale=strategy.scale, mu=mu)


def _run_single(pot: CompositePotential, cfg: SamplerConfig,
                init: InitStrategy | str | None, variant: str) -> Chain:
    init_sampler = make_init(pot, init or InitStrategy(), mu=cfg.mu)
    mu = cfg.mu if variant in ("PLMC", "SLMC") else 0.0
    finals, records = run_chain_set(
        pot, variant, cfg.eta, mu, cfg.K, cfg.seed, 1, init_sampler,
        record_every=cfg.record_every)
    return Chain(iterates=records[0], final=finals[0],
                 config_hash=cfg.hash(), seed=cfg.seed, grad_calls=cfg.K)


def run_lmc(pot: CompositePotential, cfg: SamplerConfig,
            init: InitStrategy | str | None = None,
            consume_perturbation_draws: bool = False) -> Chain:
    """Plain chain.  One diffusion vector per step, one gradient call per step.

    ``consume_perturbation_draws`` runs the matched-schedule adapter: the
    perturbation draws are consumed (and discarded) so the noise stream lines
    up with the perturbed variants for cross-variant comparisons at mu = 0.
    """
    if cfg.variant != "LMC":
        raise ContractViolation("config variant is not LMC")
    variant = "LMC_MATCHED" if consume_perturbation_draws else "LMC"
    return _run_single(pot, cfg, init, variant)


def run_plmc(pot: CompositePotential, cfg: SamplerConfig,
             init: InitStrategy | str | None = None) -> Chain:
    """Perturbed chain: gradient queried at ``y + mu w``, fresh ``w`` per step."""
    if cfg.variant != "PLMC":
        raise ContractViolation("config variant is not PLMC")
    return _run_single(pot, cfg, init, "PLMC")


def run_slmc(pot: CompositePotential, cfg: SamplerConfig,
             init: InitStrategy | str | None = None) -> Chain:
    """Shifted chain: same dynamics as the extra-noise form, read through
    ``y_k = x_k - mu w_{k-1}``; rejected at eta = 0 (the shifted gradient
    estimator divides by eta)."""
    if cfg.variant != "SLMC":
        raise ContractViolation("config variant is not SLMC")
    return _run_single(pot, cfg, init, "SLMC")


def run_ensemble(pot: CompositePotential, cfg: SamplerConfig,
                 init: InitStrategy | str | None = None,
                 backend: Optional[str] = None) -> SampleSet:
    """Run ``cfg.n_chains`` independent chains; final iterates as a SampleSet.

    Chain ``i`` draws from streams derived from ``(seed, i)``, so the result
    is reproducible bit for bit regardless of worker count or scheduling;
    rows are ordered by chain index.
    """
    init_sampler = make_init(pot, init or InitStrategy(), mu=cfg.mu)
    mu = cfg.mu if cfg.variant in ("PLMC", "SLMC") else 0.0
    finals, _ = run_chain_set(
        pot, cfg.variant, cfg.eta, mu, cfg.K, cfg.seed, cfg.n_chains,
        init_sampler, record_every=0, backend=backend)
    meta = {"config_hash": cfg.hash(), "seed": cfg.seed, "variant": cfg.variant,
            "grad_calls_total": cfg.K * cfg.n_chains}
    return SampleSet(points=finals, meta=meta)
