"""Gaussian smoothing oracle: stochastic gradients of the smoothed energy.

The smoothed energy at radius ``mu`` is ``E_z[ energy(x + mu z) ]`` with
``z ~ N(0, I)``.  Querying the subgradient at a Gaussian-perturbed point gives
an unbiased estimator of its gradient; everything here treats the smoothed
energy through Monte Carlo except `smoothed_value_closed`, which is the
closed-form truth oracle used by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import CompositePotential, ContractViolation


@dataclass(frozen=True)
class StochasticGradSample:
    """One smoothed-gradient draw: ``grad = subgrad(x + mu z)`` plus the draw z.

    The pair is sufficient to recompute the estimator exactly, which keeps
    runs replayable.
    """

    grad: np.ndarray
    z: np.ndarray


def _validate_mu(mu: float) -> float:
    mu = float(mu)
    if mu < 0.0:
        raise ContractViolation(f"smoothing radius must be >= 0, got {mu}")
    return mu


def stochastic_grad(pot: CompositePotential, x: np.ndarray, mu: float,
                    rng: np.random.Generator) -> StochasticGradSample:
    """Unbiased one-sample estimator of the smoothed gradient at ``x``.

    One fresh standard normal vector is consumed per call; with ``mu = 0`` the
    draw is still made (and returned) but the gradient is the plain subgradient.
    """
    mu = _validate_mu(mu)
    x = np.asarray(x, dtype=np.float64)
    z = rng.standard_normal(pot.dim)
    return StochasticGradSample(grad=pot.subgrad(x + mu * z), z=z)


def shifted_stochastic_grad(pot: CompositePotential, x: np.ndarray, mu: float,
                            eta: float, rng: np.random.Generator) -> StochasticGradSample:
    """Shifted-chain estimator ``subgrad(x + mu z) - (mu/eta) z``.

    Still unbiased for the smoothed gradient, but the shift inflates the
    variance by about ``2 mu^2 / eta^2`` per normalized coordinate.
    """
    if eta <= 0.0:
        raise ContractViolation(f"step size eta must be > 0, got {eta}")
    mu = _validate_mu(mu)
    x = np.asarray(x, dtype=np.float64)
    z = rng.standard_normal(pot.dim)
    return StochasticGradSample(grad=pot.subgrad(x + mu * z) - (mu / eta) * z, z=z)


def smoothed_value_mc(pot: CompositePotential, x: np.ndarray, mu: float,
                      n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, stderr) of the smoothed energy at ``x``."""
    if n_samples < 2:
        raise ContractViolation("n_samples must be >= 2")
    mu = _validate_mu(mu)
    x = np.asarray(x, dtype=np.float64)
    if mu == 0.0:
        return float(pot.value(x)), 0.0
    z = rng.standard_normal((n_samples, pot.dim))
    vals = pot.value(x + mu * z)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def smoothed_value_closed(kind: str, params: dict, x, mu: float) -> float:
    """Closed-form smoothed energy for the two analytically solvable cases.

    ``quadratic``: ``(a/2)||x-c||^2`` smooths to ``(a/2)||x-c||^2 + a mu^2 d / 2``.
    ``abs1d``: ``|x|`` smooths to the folded-normal mean
    ``x erf(x / (sqrt(2) mu)) + mu sqrt(2/pi) exp(-x^2 / (2 mu^2))``.
    """
    mu = _validate_mu(mu)
    if kind == "quadratic":
        a = float(params.get("a", 1.0))
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        d = x.shape[-1]
        c = np.asarray(params.get("center", np.zeros(d)), dtype=np.float64)
        return 0.5 * a * float(((x - c) ** 2).sum()) + a * mu * mu * d / 2.0
    if kind == "abs1d":
        t = float(np.asarray(x, dtype=np.float64).reshape(()))
        if mu == 0.0:
            return abs(t)
        return (t * math.erf(t / (math.sqrt(2.0) * mu))
                + mu * math.sqrt(2.0 / math.pi) * math.exp(-t * t / (2.0 * mu * mu)))
    raise ContractViolation(f"unsupported closed-form kind {kind!r}")


def variance_estimate(pot: CompositePotential, x: np.ndarray, mu: float,
                      n_samples: int, rng: np.random.Generator,
                      shifted_eta: float | None = None,
                      return_stderr: bool = False):
    """Normalized variance of the smoothed-gradient estimator at ``x``.

    Returns ``(1/d)`` times the summed per-coordinate sample variance of the
    estimator over ``n_samples`` fresh draws.  With ``shifted_eta`` set, the
    shifted estimator is measured instead.  ``return_stderr`` additionally
    returns a standard error for the estimate (used by the 4-stderr slack
    convention of the stochastic checks).
    """
    if n_samples < 2:
        raise ContractViolation("n_samples must be >= 2")
    mu = _validate_mu(mu)
    x = np.asarray(x, dtype=np.float64)
    z = rng.standard_normal((n_samples, pot.dim))
    grads = pot.subgrad(x + mu * z)
    if shifted_eta is not None:
        if shifted_eta <= 0.0:
            raise ContractViolation("step size eta must be > 0")
        grads = grads - (mu / shifted_eta) * z
    centered = grads - grads.mean(axis=0)
    sq = (centered**2).sum(axis=1)
    scale = n_samples / ((n_samples - 1.0) * pot.dim)
    est = float(scale * sq.mean())
    if not return_stderr:
        return est
    stderr = float(scale * sq.std(ddof=1) / math.sqrt(n_samples))
    return est, stderr
