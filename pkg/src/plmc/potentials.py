"""Potential contracts and a library of analytically understood targets.

A target density is ``p(x) ∝ exp(-energy(x))`` where the energy splits into a
convex base term with Hölder-continuous subgradients (certificate ``(L, alpha)``:
``||g(x) - g(y)|| <= L ||x - y||^alpha``) and a smooth, strongly convex
regularizer.  Everything here is immutable after construction and the oracles
are pure, so potentials are safe to share across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class ContractViolation(ValueError):
    """Raised when an argument breaks a documented precondition."""


def _check_dim(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != dim:
        raise ContractViolation(
            f"point has dimension {x.shape[-1]}, potential expects {dim}")
    return x


def scalar_holder_constant(alpha: float, n_grid: int = 241) -> float:
    """Hölder constant of the scalar map ``t -> (1+alpha) sign(t) |t|^alpha``.

    This is the derivative of ``|t|^(1+alpha)``, the per-coordinate piece of the
    bridge penalty.  The constant is found numerically by maximizing
    ``|s(t) - s(u)| / |t - u|^alpha`` over a signed log grid; the supremum is
    attained at antisymmetric pairs ``(t, -t)``, which the grid contains
    exactly, so the grid maximum equals the true constant ``(1+alpha) 2^(1-alpha)``
    up to rounding.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha must lie in [0, 1], got {alpha}")
    mags = np.logspace(-6.0, 6.0, n_grid)
    grid = np.concatenate([-mags[::-1], [0.0], mags])

    def s(t: np.ndarray) -> np.ndarray:
        if alpha == 0.0:
            return (1.0 + alpha) * np.sign(t)
        if alpha == 1.0:
            return (1.0 + alpha) * t
        return (1.0 + alpha) * np.sign(t) * np.abs(t) ** alpha

    t = grid[:, None]
    u = grid[None, :]
    gap = np.abs(t - u)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(s(t) - s(u)) / gap**alpha
    ratio[gap == 0.0] = 0.0
    return float(ratio.max())


class WeaklySmoothPotential:
    """Convex base energy with a declared Hölder certificate.

    Subclasses provide ``value`` and ``subgrad``; at kinks ``subgrad`` returns
    the minimum-norm element of the subdifferential (a deterministic, symmetric
    choice).  ``value``/``subgrad`` accept a single point ``(d,)`` or a batch
    ``(..., d)``.
    """

    dim: int
    holder_L: float
    holder_alpha: float

    def value(self, x: np.ndarray):
        raise NotImplementedError

    def subgrad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ZeroPotential(WeaklySmoothPotential):
    """Identically-zero base term (certificate L=0, alpha=1)."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ContractViolation("dimension must be >= 1")
        self.dim = int(dim)
        self.holder_L = 0.0
        self.holder_alpha = 1.0

    def value(self, x):
        x = _check_dim(x, self.dim)
        out = np.zeros(x.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def subgrad(self, x):
        x = _check_dim(x, self.dim)
        return np.zeros_like(x)


class IsotropicQuadratic(WeaklySmoothPotential):
    """Base term ``(a/2) ||x - c||^2`` (certificate L=a, alpha=1)."""

    def __init__(self, dim: int, a: float, center=None):
        if dim < 1:
            raise ContractViolation("dimension must be >= 1")
        if a < 0.0:
            raise ContractViolation("curvature a must be >= 0")
        self.dim = int(dim)
        self.a = float(a)
        self.center = np.zeros(dim) if center is None else \
            _check_dim(np.asarray(center, dtype=np.float64), dim).copy()
        self.holder_L = float(a)
        self.holder_alpha = 1.0

    def value(self, x):
        x = _check_dim(x, self.dim)
        out = 0.5 * self.a * ((x - self.center) ** 2).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def subgrad(self, x):
        x = _check_dim(x, self.dim)
        return self.a * (x - self.center)


class PowerPenalty(WeaklySmoothPotential):
    """Separable bridge-style penalty ``gamma * sum_i |x_i|^(1+alpha)``.

    The certificate is ``L = gamma * c_alpha * d^((1-alpha)/2)`` with
    ``c_alpha`` the numerically maximized scalar Hölder constant of the
    per-coordinate derivative; the dimension factor comes from spreading a
    step of norm r evenly over coordinates, which maximizes
    ``sqrt(sum |x_i - y_i|^(2 alpha))`` subject to ``||x - y|| = r``.
    """

    def __init__(self, dim: int, gamma: float, alpha: float):
        if dim < 1:
            raise ContractViolation("dimension must be >= 1")
        if gamma < 0.0:
            raise ContractViolation("penalty weight gamma must be >= 0")
        if not 0.0 <= alpha <= 1.0:
            raise ContractViolation(f"alpha must lie in [0, 1], got {alpha}")
        self.dim = int(dim)
        self.gamma = float(gamma)
        self.alpha = float(alpha)
        self.c_alpha = scalar_holder_constant(alpha)
        self.holder_L = gamma * self.c_alpha * dim ** ((1.0 - alpha) / 2.0)
        self.holder_alpha = float(alpha)

    def value(self, x):
        x = _check_dim(x, self.dim)
        out = self.gamma * (np.abs(x) ** (1.0 + self.alpha)).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def subgrad(self, x):
        x = _check_dim(x, self.dim)
        if self.alpha == 0.0:
            s = np.sign(x)
        elif self.alpha == 1.0:
            s = x
        else:
            s = np.sign(x) * np.abs(x) ** self.alpha
        return (self.gamma * (1.0 + self.alpha)) * s

    def kink_project(self, x: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """Snap coordinates within ``tol`` of the kink at 0 onto it."""
        out = np.array(x, dtype=np.float64, copy=True)
        out[np.abs(out) < tol] = 0.0
        return out


class Regularizer:
    """Smooth (``m``), strongly convex (``lam``) additive term."""

    dim: int
    smooth_m: float
    strong_lambda: float
    center: np.ndarray

    def value(self, x):
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError


class QuadraticRegularizer(Regularizer):
    """``(lam/2) ||x - center||^2``; the default concrete form (m = lam)."""

    def __init__(self, dim: int, lam: float, center=None):
        if dim < 1:
            raise ContractViolation("dimension must be >= 1")
        if lam <= 0.0:
            raise ContractViolation("strong convexity lam must be > 0")
        self.dim = int(dim)
        self.lam = float(lam)
        self.center = np.zeros(dim) if center is None else \
            _check_dim(np.asarray(center, dtype=np.float64), dim).copy()
        self.smooth_m = float(lam)
        self.strong_lambda = float(lam)

    def value(self, x):
        x = _check_dim(x, self.dim)
        out = 0.5 * self.lam * ((x - self.center) ** 2).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def grad(self, x):
        x = _check_dim(x, self.dim)
        return self.lam * (x - self.center)


class DataAugmentedRegularizer(Regularizer):
    """``(lam/2) ||x - center||^2 + ||A x - b||^2``.

    Used by the bridge posterior: the smooth least-squares data term is merged
    into the regularizer bookkeeping (``m = lam + 2 ||A||^2``) while the strong
    convexity constant is kept from the quadratic part alone, since ``A^T A``
    may be singular.
    """

    def __init__(self, dim: int, lam: float, center, A: np.ndarray, b: np.ndarray):
        if lam <= 0.0:
            raise ContractViolation("strong convexity lam must be > 0")
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] == 0:
            raise ContractViolation("design matrix A must be a nonempty 2-D array")
        if A.shape[1] != dim or b.shape != (A.shape[0],):
            raise ContractViolation("A, b shapes inconsistent with dimension")
        self.dim = int(dim)
        self.lam = float(lam)
        self.center = np.zeros(dim) if center is None else \
            _check_dim(np.asarray(center, dtype=np.float64), dim).copy()
        self.A = A.copy()
        self.b = b.copy()
        self.smooth_m = lam + 2.0 * float(np.linalg.norm(A, 2)) ** 2
        self.strong_lambda = float(lam)

    def value(self, x):
        x = _check_dim(x, self.dim)
        quad = 0.5 * self.lam * ((x - self.center) ** 2).sum(axis=-1)
        resid = x @ self.A.T - self.b
        out = quad + (resid**2).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def grad(self, x):
        x = _check_dim(x, self.dim)
        g = self.lam * (x - self.center)
        resid = x @ self.A.T - self.b
        return g + 2.0 * (resid @ self.A)


@dataclass(frozen=True)
class GradTerms:
    """Parametric description of a composite subgradient for compiled kernels.

    The subgradient is accumulated in a fixed order (base quadratic, power
    penalty, then ``lam (x - xprime) [+ data term]``) so that scalar and
    vectorized evaluations agree bitwise for the pow-free cases.
    """

    dim: int
    lam: float
    xprime: np.ndarray
    quad_a: float = 0.0
    quad_c: Optional[np.ndarray] = None
    gamma: float = 0.0
    alpha: float = 1.0
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None


class CompositePotential:
    """Total energy ``base(x) + reg(x)`` driving a sampling run.

    ``minimizer_hint`` caches the exact minimizer when the constructor knows
    it in closed form; otherwise `samplers.make_init` locates it numerically.
    """

    def __init__(self, base: WeaklySmoothPotential, reg: Regularizer,
                 minimizer_hint=None):
        if base.dim != reg.dim:
            raise ContractViolation("base and regularizer dimensions differ")
        self.base = base
        self.reg = reg
        self.dim = base.dim
        self.minimizer_hint = None if minimizer_hint is None else \
            _check_dim(np.asarray(minimizer_hint, dtype=np.float64), base.dim).copy()

    def value(self, x):
        return self.base.value(x) + self.reg.value(x)

    def subgrad(self, x) -> np.ndarray:
        return self.base.subgrad(x) + self.reg.grad(x)

    @property
    def holder_L(self) -> float:
        return self.base.holder_L

    @property
    def holder_alpha(self) -> float:
        return self.base.holder_alpha

    @property
    def smooth_m(self) -> float:
        return self.reg.smooth_m

    @property
    def strong_lambda(self) -> float:
        return self.reg.strong_lambda

    def kernel_terms(self) -> Optional[GradTerms]:
        """Describe the subgradient to the chain kernels, if representable."""
        quad_a, quad_c, gamma, alpha = 0.0, None, 0.0, 1.0
        if isinstance(self.base, IsotropicQuadratic):
            quad_a, quad_c = self.base.a, self.base.center
        elif isinstance(self.base, PowerPenalty):
            gamma, alpha = self.base.gamma, self.base.alpha
        elif not isinstance(self.base, ZeroPotential):
            return None
        if isinstance(self.reg, DataAugmentedRegularizer):
            A, b = self.reg.A, self.reg.b
        elif isinstance(self.reg, QuadraticRegularizer):
            A, b = None, None
        else:
            return None
        return GradTerms(dim=self.dim, lam=self.reg.lam, xprime=self.reg.center,
                         quad_a=quad_a, quad_c=quad_c, gamma=gamma, alpha=alpha,
                         A=A, b=b)

    def kink_project(self, x: np.ndarray) -> np.ndarray:
        if hasattr(self.base, "kink_project"):
            return self.base.kink_project(x)
        return np.asarray(x, dtype=np.float64)


def make_quadratic_target(dim: int, lam: float = 1.0, center=None) -> CompositePotential:
    """Pure Gaussian target ``(lam/2) ||x - center||^2`` (zero base term)."""
    reg = QuadraticRegularizer(dim, lam, center)
    return CompositePotential(ZeroPotential(dim), reg, minimizer_hint=reg.center)


def make_power_quadratic(dim: int, gamma: float, alpha: float,
                         lam: float = 1.0, center=None) -> CompositePotential:
    """Target ``gamma sum |x_i|^(1+alpha) + (lam/2) ||x - center||^2``."""
    return CompositePotential(PowerPenalty(dim, gamma, alpha),
                              QuadraticRegularizer(dim, lam, center))


def make_abs_quadratic(dim: int = 1, gamma: float = 1.0,
                       lam: float = 1.0, center=None) -> CompositePotential:
    """Nonsmooth target ``gamma sum |x_i| + (lam/2) ||x - center||^2``."""
    return make_power_quadratic(dim, gamma, 0.0, lam, center)


def make_bridge_posterior(A: np.ndarray, b: np.ndarray, gamma: float,
                          alpha: float, reg: QuadraticRegularizer) -> CompositePotential:
    """Bridge-regression posterior energy ``||Ax - b||^2 + gamma sum |x_i|^(1+alpha)``.

    The least-squares part is smooth, so it is folded into the regularizer's
    smoothness budget; only the power penalty carries the Hölder certificate.
    With ``gamma = 0`` the base degenerates to zero and the certificate is the
    smooth one ``(0, 1)``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise ContractViolation("design matrix A must be nonempty")
    if gamma < 0.0:
        raise ContractViolation("penalty weight gamma must be >= 0")
    dim = A.shape[1]
    if reg.dim != dim:
        raise ContractViolation("regularizer dimension does not match A")
    base: WeaklySmoothPotential
    if gamma == 0.0:
        base = ZeroPotential(dim)
    else:
        base = PowerPenalty(dim, gamma, alpha)
    data_reg = DataAugmentedRegularizer(dim, reg.lam, reg.center, A, b)
    return CompositePotential(base, data_reg)


def load_matrix_csv(path) -> np.ndarray:
    """Load a matrix from headerless comma-separated rows."""
    out = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return out


@dataclass(frozen=True)
class CertificateReport:
    """Result of empirically probing a declared ``(L, alpha)`` certificate."""

    declared_L: float
    alpha: float
    max_ratio: float
    worst_convexity_gap: float
    n_pairs: int
    tol: float
    passed: bool = field(default=False)


def verify_certificate(pot: WeaklySmoothPotential, n_pairs: int, radius: float,
                       rng: np.random.Generator, tol: float = 1e-9) -> CertificateReport:
    """Probe the Hölder certificate and the subgradient inequality on random pairs.

    Samples ``n_pairs`` pairs uniformly from the ball of the given radius and
    reports the worst ratio ``||g(x)-g(y)|| / ||x-y||^alpha`` together with the
    worst violation of ``U(y) >= U(x) + <g(x), y-x>``.  Passing means the ratio
    stays below ``L (1 + tol)`` and the violation below ``tol``.
    """
    if n_pairs < 1:
        raise ContractViolation("n_pairs must be >= 1")
    d = pot.dim

    def ball(n: int) -> np.ndarray:
        z = rng.standard_normal((n, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = radius * rng.random(n) ** (1.0 / d)
        return z * r[:, None]

    x, y = ball(n_pairs), ball(n_pairs)
    gx, gy = pot.subgrad(x), pot.subgrad(y)
    ux, uy = np.atleast_1d(pot.value(x)), np.atleast_1d(pot.value(y))
    diff = np.linalg.norm(x - y, axis=1)
    keep = diff > 0.0
    ratio = np.linalg.norm(gx - gy, axis=1)[keep] / diff[keep] ** pot.holder_alpha
    max_ratio = float(ratio.max()) if ratio.size else 0.0
    # subgradient inequality, checked in both directions
    forward = ux + np.einsum("ij,ij->i", gx, y - x) - uy
    backward = uy + np.einsum("ij,ij->i", gy, x - y) - ux
    worst = float(max(forward.max(), backward.max(), 0.0))
    passed = max_ratio <= pot.holder_L * (1.0 + tol) and worst <= tol
    return CertificateReport(declared_L=pot.holder_L, alpha=pot.holder_alpha,
                             max_ratio=max_ratio, worst_convexity_gap=worst,
                             n_pairs=n_pairs, tol=tol, passed=passed)
