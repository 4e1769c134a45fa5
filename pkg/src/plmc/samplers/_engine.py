"""Chain orchestration: seeding, initial points, blocks, worker threads.

Chain ``i`` of a run seeded with ``s`` owns two child streams of
``SeedSequence(s, spawn_key=(0, i))`` (one for the initial draw, one for the
dynamics), so results never depend on how chains are grouped into blocks or
scheduled onto workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from ..potentials import CompositePotential, ContractViolation
from ..bounds import smoothed_gradient_lipschitz
from . import _reference

try:  # compiled hot kernel; the numpy backend is a full stand-in
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

VARIANT_CODES = {"LMC": 0, "PLMC": 1, "SLMC": 2}
_BLOCK = 4096


class DivergenceError(RuntimeError):
    """A chain left the finite ball; carries the chain index and step."""

    def __init__(self, chain_index: int, step: int):
        super().__init__(f"chain {chain_index} diverged at step {step}")
        self.chain_index = chain_index
        self.step = step


def default_backend() -> str:
    if os.environ.get("PLMC_FORCE_FALLBACK"):
        return "python"
    return "compiled" if _compiled is not None else "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def chain_streams(seed: int, index: int):
    """(init, dynamics) seed sequences for one chain."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(0, int(index)))
    return ss.spawn(2)


@dataclass(frozen=True)
class InitSampler:
    """Resolved initial-point rule: ``N(center, std^2 I)`` (std=0: a point)."""

    center: np.ndarray
    std: float
    fallback_warning: bool = False

    def draw_block(self, seed: int, lo: int, hi: int) -> np.ndarray:
        d = self.center.shape[0]
        out = np.empty((hi - lo, d), dtype=np.float64)
        if self.std == 0.0:
            out[:] = self.center
            return out
        for i in range(lo, hi):
            init_ss, _ = chain_streams(seed, i)
            gen = np.random.Generator(np.random.Philox(init_ss))
            out[i - lo] = self.center + self.std * gen.standard_normal(d)
        return out


def approximate_minimizer(pot: CompositePotential, max_iter: int = 10_000,
                          tol: float = 1e-6) -> tuple[np.ndarray, bool]:
    """Locate the energy minimizer; returns (point, fallback_warning).

    Runs the diminishing-step subgradient method, keeps the best iterate by
    value, then polishes with a derivative-free local search and snaps
    near-kink coordinates onto the kink (the subgradient-norm stopping rule
    can only be met exactly at smooth points or exactly on a kink).  Falls
    back to the origin, with a warning flag, if the tolerance is still not
    met.
    """
    if pot.minimizer_hint is not None:
        return pot.minimizer_hint.copy(), False
    d = pot.dim
    x = np.zeros(d)
    best, best_val = x.copy(), pot.value(x)
    step0 = 1.0 / (pot.smooth_m + pot.strong_lambda)
    for k in range(1, max_iter + 1):
        x = x - (step0 / math.sqrt(k)) * pot.subgrad(x)
        val = pot.value(x)
        if val < best_val:
            best, best_val = x.copy(), val
    res = minimize(pot.value, best, method="Powell",
                   options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 4000 * d})
    if res.fun <= best_val:
        best, best_val = np.atleast_1d(res.x).astype(np.float64), float(res.fun)
    snapped = pot.kink_project(best)
    if pot.value(snapped) <= best_val:
        best = snapped
    if np.linalg.norm(pot.subgrad(best)) <= tol:
        return best, False
    return np.zeros(d), True


def make_init_sampler(pot: CompositePotential, kind: str,
                      center=None, scale: Optional[float] = None,
                      mu: float = 0.0) -> InitSampler:
    """Resolve an initial-point strategy against a potential.

    ``gaussian_at_min`` draws from ``N(x_hat, (M + m)^-1 I)`` where ``x_hat``
    is the (approximate) minimizer and ``M`` is the smoothed-gradient
    Lipschitz constant at the run's smoothing radius (the raw certificate
    constant when the base is smooth; at ``mu = 0`` with a nonsmooth base the
    certificate constant is used as a finite stand-in).
    """
    d = pot.dim
    warning = False
    if kind == "point":
        if center is None:
            center, warning = approximate_minimizer(pot)
        return InitSampler(center=np.asarray(center, dtype=np.float64).reshape(d),
                           std=0.0, fallback_warning=warning)
    if kind == "custom":
        if center is None or scale is None:
            raise ContractViolation("custom init needs center and scale")
        if scale <= 0.0:
            raise ContractViolation("covariance scale must be > 0")
        return InitSampler(center=np.asarray(center, dtype=np.float64).reshape(d),
                           std=math.sqrt(scale))
    if kind == "gaussian_at_min":
        x_hat, warning = approximate_minimizer(pot)
        if scale is None:
            L, alpha, m = pot.holder_L, pot.holder_alpha, pot.smooth_m
            if alpha == 1.0 or mu <= 0.0:
                m_star = L
            else:
                m_star = smoothed_gradient_lipschitz(L, alpha, mu, d)
            scale = 1.0 / (m_star + m)
        return InitSampler(center=x_hat, std=math.sqrt(scale),
                           fallback_warning=warning)
    raise ContractViolation(f"unknown init strategy {kind!r}")


def _run_block(pot, terms, variant_code, eta, mu, K, seed, lo, hi,
               init_sampler, record_every, backend):
    x0 = init_sampler.draw_block(seed, lo, hi)
    bitgens = [np.random.Philox(chain_streams(seed, i)[1]) for i in range(lo, hi)]
    if backend == "python":
        return _reference.run_block(pot.subgrad, variant_code, eta, mu, K,
                                    x0, bitgens, record_every)
    B, d = x0.shape
    finals = np.array(x0, copy=True)
    records = None
    if record_every > 0:
        records = np.empty((B, K // record_every + 1, d), dtype=np.float64)
    abort = np.empty(B, dtype=np.int64)
    dummy2 = np.zeros((1, 1), dtype=np.float64)
    dummy1 = np.zeros(1, dtype=np.float64)
    quad_c = np.ascontiguousarray(
        terms.quad_c if terms.quad_c is not None else dummy1)
    A = np.ascontiguousarray(terms.A if terms.A is not None else dummy2)
    b = np.ascontiguousarray(terms.b if terms.b is not None else dummy1)
    xprime = np.ascontiguousarray(terms.xprime)
    for i in range(B):
        rec_i = records[i] if records is not None else dummy2
        abort[i] = _compiled.run_chain(
            bitgens[i], finals[i], variant_code, eta, mu, K,
            terms.quad_a, quad_c, terms.quad_a != 0.0,
            terms.gamma, terms.alpha, terms.gamma != 0.0,
            A, b, terms.A is not None,
            terms.lam, xprime,
            record_every, rec_i, records is not None)
    return finals, records, abort


def run_chain_set(pot: CompositePotential, variant: str, eta: float, mu: float,
                  K: int, seed: int, n_chains: int, init_sampler: InitSampler,
                  record_every: int = 0, backend: Optional[str] = None,
                  n_workers: Optional[int] = None):
    """Run ``n_chains`` independent chains; returns (finals, records).

    Raises `DivergenceError` naming the first offending chain.  Results are
    identical for any worker count: blocks are fixed-size and merged by index.
    """
    if variant not in VARIANT_CODES and variant != "LMC_MATCHED":
        raise ContractViolation(f"unknown chain variant {variant!r}")
    code = VARIANT_CODES.get(variant, 3)
    if eta < 0.0:
        raise ContractViolation("step size eta must be >= 0")
    if variant == "SLMC" and eta <= 0.0:
        raise ContractViolation("shifted chain needs eta > 0")
    if mu < 0.0:
        raise ContractViolation("smoothing radius mu must be >= 0")
    if K < 0 or n_chains < 1:
        raise ContractViolation("need K >= 0 and n_chains >= 1")

    backend = backend or default_backend()
    if backend not in ("compiled", "python"):
        raise ContractViolation(f"unknown backend {backend!r}")
    terms = pot.kernel_terms()
    if backend == "compiled" and (terms is None or _compiled is None):
        backend = "python"

    if n_workers is None:
        n_workers = max(1, int(os.environ.get("SAMPLE_THREADS", "1")))
    blocks = [(lo, min(lo + _BLOCK, n_chains)) for lo in range(0, n_chains, _BLOCK)]

    def task(block):
        lo, hi = block
        return _run_block(pot, terms, code, eta, mu, K, seed, lo, hi,
                          init_sampler, record_every, backend)

    if n_workers == 1 or len(blocks) == 1:
        results = [task(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(task, blocks))

    for (lo, _), (_, _, abort) in zip(blocks, results):
        bad = np.nonzero(abort >= 0)[0]
        if bad.size:
            raise DivergenceError(lo + int(bad[0]), int(abort[bad[0]]))

    finals = np.concatenate([r[0] for r in results], axis=0)
    records = None
    if record_every > 0:
        records = np.concatenate([r[1] for r in results], axis=0)
    return finals, records
