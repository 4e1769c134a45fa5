"""Closed-form constants, distance bounds, and mixing-time parameter recipes.

Everything here is a pure function of problem constants.  The planners return
the boundary value of each one-sided recipe (largest admissible step size,
smallest admissible iteration count rounded up) and record every intermediate
constant so a report can be audited against the raw inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional

from .potentials import CompositePotential, ContractViolation


@dataclass(frozen=True)
class ProblemConstants:
    """Constants describing one sampling problem.

    ``d``: dimension; ``(L, alpha)``: Hölder certificate of the base term;
    ``m``/``lam``: smoothness and strong convexity of the regularizer;
    ``x_star_norm``: norm of the energy minimizer; ``w2_init``: upper estimate
    of the quadratic-transport distance from the initial distribution to the
    (smoothed) target; ``m4``: fourth moment of the unregularized target.
    """

    d: int
    L: float
    alpha: float
    m: float
    lam: float
    x_star_norm: float = 0.0
    w2_init: Optional[float] = None
    m4: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise ContractViolation("dimension must be >= 1")
        if self.L < 0 or self.m <= 0 or self.lam <= 0 or self.x_star_norm < 0:
            raise ContractViolation("constants must be nonnegative (m, lam positive)")
        if self.lam > self.m:
            raise ContractViolation("strong convexity exceeds smoothness (lam > m)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractViolation("alpha must lie in [0, 1]")

    @classmethod
    def from_potential(cls, pot: CompositePotential, x_star_norm: float = 0.0,
                       w2_init: Optional[float] = None,
                       m4: Optional[float] = None) -> "ProblemConstants":
        return cls(d=pot.dim, L=pot.holder_L, alpha=pot.holder_alpha,
                   m=pot.smooth_m, lam=pot.strong_lambda,
                   x_star_norm=x_star_norm, w2_init=w2_init, m4=m4)


@dataclass
class PlanReport:
    """Planner output: chain parameters plus all intermediate constants."""

    eta: float
    mu: float
    K: int
    eps_bar: Optional[float] = None
    delta: Optional[float] = None
    lambda_reg: Optional[float] = None
    intermediates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def smooth_approximation_constant(L: float, alpha: float, delta: float) -> float:
    """Smoothness constant of the delta-accurate smooth approximation.

    ``(1/delta)^((1-alpha)/(1+alpha)) * L^(2/(1+alpha))``; independent of
    ``delta`` when alpha = 1.
    """
    if delta <= 0.0:
        raise ContractViolation("approximation accuracy delta must be > 0")
    if L < 0.0:
        raise ContractViolation("L must be >= 0")
    return (1.0 / delta) ** ((1.0 - alpha) / (1.0 + alpha)) * L ** (2.0 / (1.0 + alpha))


def smoothed_gradient_lipschitz(L: float, alpha: float, mu: float, d: int) -> float:
    """Lipschitz constant of the smoothed base gradient.

    ``L d^((1-alpha)/2) / (mu^(1-alpha) (1+alpha)^(1-alpha))``; equal to ``L``
    for alpha = 1 at any radius, unbounded at ``mu = 0`` when alpha < 1.
    """
    if L == 0.0:
        return 0.0
    if alpha == 1.0:
        return L
    if mu <= 0.0:
        raise ContractViolation(
            "smoothed gradient is not Lipschitz at mu = 0 for alpha < 1")
    return (L * d ** ((1.0 - alpha) / 2.0)
            / (mu ** (1.0 - alpha) * (1.0 + alpha) ** (1.0 - alpha)))


def smoothing_gap_bound(L: float, alpha: float, mu: float, d: int) -> float:
    """Upper bound on (smoothed minus plain) base energy, pointwise.

    ``L mu^(1+alpha) d^((1+alpha)/2) / (1+alpha)``; zero at ``mu = 0``.
    """
    if mu < 0.0:
        raise ContractViolation("mu must be >= 0")
    return L * mu ** (1.0 + alpha) * d ** ((1.0 + alpha) / 2.0) / (1.0 + alpha)


def grad_variance_bound(L: float, alpha: float, m: float, mu: float, d: int) -> float:
    """Normalized variance bound for the perturbed-gradient estimator.

    ``4 d^(alpha-1) mu^(2 alpha) L^2 + 4 mu^2 m^2``.  At ``mu = 0`` with
    alpha = 0 the formula evaluates to ``4 L^2 / d`` even though the estimator
    is deterministic there; the formula value is returned unchanged and tests
    only ever compare estimate <= bound.
    """
    if mu < 0.0:
        raise ContractViolation("mu must be >= 0")
    return 4.0 * float(d) ** (alpha - 1.0) * mu ** (2.0 * alpha) * L * L \
        + 4.0 * mu * mu * m * m


def shifted_grad_variance_bound(L: float, alpha: float, m: float, mu: float,
                                eta: float, d: int) -> float:
    """Normalized variance bound for the shifted estimator.

    ``8 d^(alpha-1) mu^(2 alpha) L^2 + 8 mu^2 m^2 + 2 mu^2 / eta^2``; the
    shifted estimator degenerates to the plain deterministic gradient at
    ``mu = 0``, so 0 is returned there.
    """
    if eta <= 0.0:
        raise ContractViolation("eta must be > 0")
    if mu < 0.0:
        raise ContractViolation("mu must be >= 0")
    if mu == 0.0:
        return 0.0
    return (8.0 * float(d) ** (alpha - 1.0) * mu ** (2.0 * alpha) * L * L
            + 8.0 * mu * mu * m * m + 2.0 * mu * mu / (eta * eta))


def smoothing_kl_gap(L: float, alpha: float, m: float, mu: float, d: int) -> float:
    """Gap constant controlling the KL between target and smoothed target.

    ``L mu^(1+alpha) d^((1+alpha)/2) / (sqrt(2) (1+alpha)) + m mu^2 d / 2``.
    """
    if mu < 0.0:
        raise ContractViolation("mu must be >= 0")
    return (L * mu ** (1.0 + alpha) * d ** ((1.0 + alpha) / 2.0)
            / (math.sqrt(2.0) * (1.0 + alpha)) + m * mu * mu * d / 2.0)


def bolley_villani_constant(lam: float, M_plus_m: float, d: int) -> float:
    """Transport-vs-KL constant ``(8/lam) sqrt(3/2 + (d/2) log(2 (M+m)/lam))``."""
    arg = 2.0 * M_plus_m / lam
    if arg <= 0.0:
        raise ContractViolation("nonpositive log argument")
    inner = 1.5 + 0.5 * d * math.log(arg)
    if inner < 0.0:
        raise ContractViolation("nonpositive argument under the square root")
    return 8.0 / lam * math.sqrt(inner)


def smoothing_w2_bias(lam: float, m: float, M_mu: float, d: int, beta: float) -> float:
    """Transport distance between target and smoothed target.

    ``C (beta + sqrt(beta / 2))`` with the constant from
    `bolley_villani_constant` evaluated at ``M_mu + m``.
    """
    c = bolley_villani_constant(lam, M_mu + m, d)
    return c * (beta + math.sqrt(beta / 2.0))


def w2_iterate_bound(M_total: float, lam: float, eta: float, d: int,
                     sigma2: float, K: int, w2_init: float) -> float:
    """Transport distance of the K-th iterate of the stochastic-gradient chain.

    ``(1 - lam eta)^(K/2) W0 + sqrt(2 M eta d / lam) + sigma sqrt((1+eta) eta d / lam)``
    for an ``M``-smooth, ``lam``-strongly convex energy driven by unbiased
    gradients of normalized variance ``sigma2``.
    """
    if eta > 2.0 / (M_total + lam) or lam * eta > 1.0:
        raise ContractViolation("step size violates the recursion precondition")
    contraction = (1.0 - lam * eta) ** (K / 2.0) * w2_init
    floor1 = math.sqrt(2.0 * M_total * eta * d / lam)
    floor2 = math.sqrt(sigma2) * math.sqrt((1.0 + eta) * eta * d / lam)
    return contraction + floor1 + floor2


def kl_from_w2(M_total: float, lam: float, d: int, x_star_norm: float,
               w2: float) -> float:
    """KL bound in terms of the transport distance to a smooth log-concave law.

    ``(M sqrt(2d/lam + 2 r^2)/2 + M sqrt(4d/lam + 4 r^2 + 2 w2^2)/2 + M r) w2``
    with ``r`` the norm of the energy minimizer.
    """
    if min(M_total, lam, x_star_norm, w2) < 0.0 or lam == 0.0:
        raise ContractViolation("inputs must be nonnegative, lam positive")
    r2 = x_star_norm * x_star_norm
    t1 = M_total * math.sqrt(2.0 * d / lam + 2.0 * r2) / 2.0
    t2 = M_total * math.sqrt(4.0 * d / lam + 4.0 * r2 + 2.0 * w2 * w2) / 2.0
    t3 = M_total * x_star_norm
    return (t1 + t2 + t3) * w2


def tv_from_kl(kl: float) -> float:
    """Pinsker conversion ``sqrt(kl / 2)``."""
    if kl < 0.0:
        raise ContractViolation("kl must be >= 0")
    return math.sqrt(kl / 2.0)


def _require_w2_init(consts: ProblemConstants) -> float:
    if consts.w2_init is None or consts.w2_init <= 0.0:
        raise ContractViolation("planner needs a positive w2_init estimate")
    return consts.w2_init


def _ceil_iterations(k_raw: float) -> int:
    return max(1, int(math.ceil(k_raw)))


def plan_w2(eps: float, consts: ProblemConstants) -> PlanReport:
    """Chain parameters guaranteeing transport accuracy ``eps``.

    The smoothing radius balances the smoothed-gradient Lipschitz constant
    against the smoothing bias, the step size is the largest admissible
    value, and the iteration count contracts the initial distance to
    ``eps/3``.  The step size is additionally capped at
    ``1/(M_mu + m + lam)`` so the recursion precondition
    ``eta < 2/(M_mu + m + lam)`` always holds.
    """
    d, L, alpha, m, lam = consts.d, consts.L, consts.alpha, consts.m, consts.lam
    if not 0.0 < eps < d ** 0.25:
        raise ContractViolation(f"eps must lie in (0, d^(1/4)), got {eps}")
    if L + m <= 0.0:
        raise ContractViolation("need L + m > 0")
    w2_init = _require_w2_init(consts)

    inner = 10.0 + d * math.log((m + L) * d / (lam * eps * eps))
    if inner <= 0.0:
        raise ContractViolation("nonpositive argument under the square root")
    mu = (eps ** (2.0 / (1.0 + alpha)) * min(lam ** (2.0 / (1.0 + alpha)), 1.0)
          / (300.0 * math.sqrt(d) * (math.sqrt(m) + L ** (1.0 / (1.0 + alpha)))
             * math.sqrt(inner)))
    M_mu = smoothed_gradient_lipschitz(L, alpha, mu, d)
    eta_recipe = (eps * eps * mu ** (1.0 - alpha) * lam
                  / (1000.0 * (L + m) * d ** ((3.0 - alpha) / 2.0)))
    eta_cap = 1.0 / (M_mu + m + lam)
    eta = min(eta_recipe, eta_cap)
    k_raw = math.log(3.0 * w2_init / eps) / (lam * eta)
    sigma2 = grad_variance_bound(L, alpha, m, mu, d)
    beta = smoothing_kl_gap(L, alpha, m, mu, d)
    bias = smoothing_w2_bias(lam, m, M_mu, d, beta)
    return PlanReport(
        eta=eta, mu=mu, K=_ceil_iterations(k_raw),
        intermediates={
            "M_mu": M_mu, "sigma2_bound": sigma2, "beta_mu": beta,
            "bias_bound": bias,
            "bolley_villani_C": bolley_villani_constant(lam, M_mu + m, d),
            "eta_recipe": eta_recipe, "eta_cap": eta_cap, "K_raw": k_raw,
        })


def plan_tv(eps: float, consts: ProblemConstants) -> PlanReport:
    """Chain parameters guaranteeing total-variation accuracy ``eps``.

    The auxiliary transport target ``eps_bar`` absorbs the KL-vs-transport
    conversion constant; the smoothed-gradient Lipschitz constant is evaluated
    at the chosen radius.
    """
    d, L, alpha, m, lam = consts.d, consts.L, consts.alpha, consts.m, consts.lam
    if not 0.0 < eps <= 1.0:
        raise ContractViolation(f"eps must lie in (0, 1], got {eps}")
    w2_init = _require_w2_init(consts)
    xs = consts.x_star_norm

    mu = min(eps ** (1.0 / (1.0 + alpha))
             / (4.0 * max(1.0, L ** (1.0 / (1.0 + alpha))) * math.sqrt(d)),
             math.sqrt(eps * lam / (2.0 * m * m * d)))
    M_mu = smoothed_gradient_lipschitz(L, alpha, mu, d)
    eps_bar = eps * eps / (4.0 * max(
        (M_mu + m) * (math.sqrt(2.0 * d / lam + 2.0 * xs * xs) + 2.0 * xs * xs),
        1.0))
    eta_recipe = eps_bar * eps_bar * lam / (64.0 * d * (M_mu + m))
    eta_cap = 1.0 / (M_mu + m + lam)
    eta = min(eta_recipe, eta_cap)
    k_raw = math.log(2.0 * w2_init / eps_bar) / (lam * eta)
    sigma2 = grad_variance_bound(L, alpha, m, mu, d)
    beta = smoothing_kl_gap(L, alpha, m, mu, d)
    return PlanReport(
        eta=eta, mu=mu, K=_ceil_iterations(k_raw), eps_bar=eps_bar,
        intermediates={
            "M_mu": M_mu, "sigma2_bound": sigma2, "beta_mu": beta,
            "bias_bound": smoothing_w2_bias(lam, m, M_mu, d, beta),
            "bolley_villani_C": bolley_villani_constant(lam, M_mu + m, d),
            "eta_recipe": eta_recipe, "eta_cap": eta_cap, "K_raw": k_raw,
        })


def plan_regularized(eps_prime: float, m4: float, dist_xprime_xstar: float) -> float:
    """Regularization strength for sampling an unregularized nonsmooth target.

    ``lam = 4 eps' / (sqrt(m4) + dist^2)``; the caller then runs `plan_tv`
    at accuracy ``eps'/2`` on the regularized energy.
    """
    if not 0.0 < eps_prime <= 1.0:
        raise ContractViolation("eps_prime must lie in (0, 1]")
    if m4 <= 0.0 or dist_xprime_xstar < 0.0:
        raise ContractViolation("need m4 > 0 and a nonnegative distance")
    return 4.0 * eps_prime / (math.sqrt(m4) + dist_xprime_xstar ** 2)


def _checked_pow(base: float, exponent: float) -> float:
    try:
        out = base ** exponent
    except OverflowError:
        raise ContractViolation(
            f"power {base}^{exponent} overflows binary64") from None
    if math.isinf(out):
        raise ContractViolation(f"power {base}^{exponent} overflows binary64")
    return out


def plan_det_w2(eps: float, consts: ProblemConstants) -> PlanReport:
    """Plain-chain transport plan under deterministic smooth approximation.

    Undefined at alpha = 0: the smooth approximation then carries a constant
    gradient bias no choice of accuracy can remove, and the recipes blow up.
    """
    d, L, alpha, m, lam = consts.d, consts.L, consts.alpha, consts.m, consts.lam
    if alpha <= 0.0:
        raise ContractViolation("deterministic plan undefined at alpha=0 "
                                "(constant gradient bias)")
    if L <= 0.0:
        raise ContractViolation("deterministic plan needs L > 0")
    if eps <= 0.0:
        raise ContractViolation("eps must be > 0")
    w2_init = _require_w2_init(consts)

    delta = _checked_pow(lam * eps / (24.0 * L ** (1.0 / (1.0 + alpha))),
                         (1.0 + alpha) / alpha)
    M = smooth_approximation_constant(L, alpha, delta)
    growth = _checked_pow(24.0 / (lam * eps), (1.0 - alpha) / alpha) \
        * _checked_pow(L, 1.0 / alpha)
    eta = min(min(lam, lam * lam) * eps * eps / (90000.0 * d) / (growth + m),
              1.0 / (2.0 * lam),
              lam / (36.0 * (M + m)))
    k_raw = (720000.0 * d / (min(1.0, lam) * eps * eps * lam * lam)
             * (growth + m) * math.log(w2_init / eps))
    return PlanReport(
        eta=eta, mu=0.0, K=_ceil_iterations(k_raw), delta=delta,
        intermediates={"M": M, "growth_term": growth, "K_raw": k_raw})


def plan_det_tv(eps: float, beta_floor: float, consts: ProblemConstants) -> PlanReport:
    """Plain-chain total-variation plan with a Gaussian start at the minimizer.

    The accuracy recipe for ``delta`` references the approximation smoothness
    ``M(delta)`` inside a logarithm, so it is resolved by a monotone
    fixed-point iteration started from the cap ``delta = 1``.
    """
    d, L, alpha, m, lam = consts.d, consts.L, consts.alpha, consts.m, consts.lam
    if alpha <= 0.0:
        raise ContractViolation("deterministic plan undefined at alpha=0 "
                                "(constant gradient bias)")
    if L <= 0.0:
        raise ContractViolation("deterministic plan needs L > 0")
    if not 0.0 < eps <= 1.0:
        raise ContractViolation("eps must lie in (0, 1]")
    if beta_floor < 1.0:
        raise ContractViolation("beta_floor must be >= 1")

    def next_delta(delta: float) -> tuple[float, float, float]:
        M = smooth_approximation_constant(L, alpha, delta)
        arg = (M + m) / lam
        if arg <= 1.0:
            raise ContractViolation("nonpositive log argument (M + m <= lam)")
        logterm = math.log(arg)
        new = min(_checked_pow(
            lam * eps * eps / (8.0 * d * logterm * L ** (2.0 / (1.0 + alpha))),
            (1.0 + alpha) / (2.0 * alpha)), 1.0)
        return new, M, logterm

    delta = 1.0
    M = logterm = None
    for _ in range(200):
        new, M, logterm = next_delta(delta)
        if abs(new - delta) <= 1e-14 * max(new, delta, 1e-300):
            delta = new
            break
        delta = new
    else:
        raise ContractViolation("delta fixed point did not converge")
    _, M, logterm = next_delta(delta)

    eta = min(1.0,
              1.0 / (2.0 * beta_floor * (M + m)),
              lam * eps * eps / (32.0 * d * d * (M + m) ** 2 * logterm))
    k_raw = max(beta_floor,
                d / (4.0 * eta * lam) * logterm + delta / (4.0 * eta * lam))
    return PlanReport(
        eta=eta, mu=0.0, K=_ceil_iterations(k_raw), delta=delta,
        intermediates={"M": M, "log_smoothness_ratio": logterm, "K_raw": k_raw})


def discretization_w2_bound(M: float, m: float, lam: float, delta: float,
                            eta: float, d: int, w2_init: float) -> float:
    """One-step discretization error of the plain chain, as a distance.

    Square root of ``8 d (M+m)^4 eta^4 / lam + 8 (M+m)^4 eta^4 W0^2
    + 32 delta (M+m)^2 M eta^4 + 4 d (M+m)^2 eta^3 + 8 delta M eta^2``.
    """
    if eta >= 1.0 / (2.0 * lam):
        raise ContractViolation("requires eta < 1/(2 lam)")
    s = M + m
    sq = (8.0 * d * s**4 * eta**4 / lam
          + 8.0 * s**4 * eta**4 * w2_init * w2_init
          + 32.0 * delta * s * s * M * eta**4
          + 4.0 * d * s * s * eta**3
          + 8.0 * delta * M * eta * eta)
    return math.sqrt(sq)
