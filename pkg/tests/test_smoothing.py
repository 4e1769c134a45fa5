import math

import numpy as np
import pytest

from plmc.bounds import (
    grad_variance_bound,
    smoothed_gradient_lipschitz,
    smoothing_gap_bound,
)
from plmc.potentials import ContractViolation, make_abs_quadratic, make_quadratic_target
from plmc.smoothing import (
    shifted_stochastic_grad,
    smoothed_value_closed,
    smoothed_value_mc,
    stochastic_grad,
    variance_estimate,
)

from conftest import seeded
from oracles import folded_normal_mean

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class TestStochasticGrad:
    def test_mu_zero_is_plain_subgradient(self):
        pot = make_abs_quadratic()
        x = np.array([0.7])
        sample = stochastic_grad(pot, x, 0.0, seeded(1))
        assert (sample.grad == pot.subgrad(x)).all()
        assert sample.z.shape == (1,)

    def test_recomputable_from_draw(self):
        pot = make_abs_quadratic(2)
        x = np.array([0.3, -0.4])
        sample = stochastic_grad(pot, x, 0.25, seeded(2))
        assert (sample.grad == pot.subgrad(x + 0.25 * sample.z)).all()

    def test_unbiased_on_quadratic(self):
        # linear gradient: E[subgrad(x + mu z)] = x exactly
        pot = make_quadratic_target(2)
        gen, x, n = seeded(3), np.array([0.5, -1.0]), 100_000
        z = gen.standard_normal((n, 2))
        grads = pot.subgrad(x + 0.7 * z)
        se = grads.std(axis=0, ddof=1) / math.sqrt(n)
        assert (np.abs(grads.mean(axis=0) - x) <= 4 * se).all()

    def test_symmetric_mean_zero_at_kink(self):
        pot = make_abs_quadratic()
        gen, n = seeded(4), 100_000
        z = gen.standard_normal((n, 1))
        grads = pot.subgrad(0.0 + 1.0 * z)
        se = grads.std(ddof=1) / math.sqrt(n)
        assert abs(grads.mean()) <= 4 * se


class TestSmoothedValueMC:
    def test_mu_zero_exact(self):
        pot = make_abs_quadratic()
        est, se = smoothed_value_mc(pot, np.array([1.5]), 0.0, 10, seeded(5))
        assert est == pot.value(np.array([1.5])) and se == 0.0

    def test_quadratic_second_moment(self):
        pot = make_quadratic_target(2)
        est, se = smoothed_value_mc(pot, np.zeros(2), 0.5, 100_000, seeded(6))
        assert abs(est - 0.25) <= 4 * se  # mu^2 d / 2

    def test_folded_normal_at_kink(self):
        pot = make_abs_quadratic()
        est, se = smoothed_value_mc(pot, np.zeros(1), 1.0, 100_000, seeded(7))
        # E|z| + E[z^2]/2
        assert abs(est - (SQRT_2_OVER_PI + 0.5)) <= 4 * se

    def test_needs_two_samples(self):
        with pytest.raises(ContractViolation):
            smoothed_value_mc(make_abs_quadratic(), np.zeros(1), 0.1, 1, seeded(8))


class TestClosedForms:
    def test_quadratic_gaussian_second_moment(self):
        assert smoothed_value_closed("quadratic", {"a": 1.0}, [0.0], 0.5) == 0.125

    def test_abs_at_origin(self):
        assert smoothed_value_closed("abs1d", {}, 0.0, 1.0) == \
            pytest.approx(SQRT_2_OVER_PI, rel=1e-15)

    def test_matches_independent_folded_normal(self):
        for x in (-2.0, -0.3, 0.0, 0.7, 1.9):
            for mu in (0.05, 0.4, 1.3):
                assert smoothed_value_closed("abs1d", {}, x, mu) == \
                    pytest.approx(folded_normal_mean(x, mu), rel=1e-13)

    def test_dominates_unsmoothed(self):
        # convexity: smoothed value never falls below the plain value
        for mu in (0.01, 0.1, 1.0, 10.0):
            for x in (-3.0, 0.0, 0.2, 5.0):
                assert smoothed_value_closed("abs1d", {}, x, mu) >= abs(x)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ContractViolation):
            smoothed_value_closed("cubic", {}, 0.0, 0.1)


class TestVarianceEstimate:
    def test_mu_zero_deterministic(self):
        assert variance_estimate(make_abs_quadratic(), np.zeros(1), 0.0, 100,
                                 seeded(9)) == 0.0

    def test_quadratic_matches_mu_squared(self):
        pot = make_quadratic_target(5)
        est = variance_estimate(pot, np.zeros(5), 0.3, 20_000, seeded(10))
        assert est == pytest.approx(0.09, rel=0.05)

    def test_nonsmooth_bound_holds_with_slack(self):
        pot = make_abs_quadratic()  # L=2, alpha=0, m=1
        est = variance_estimate(pot, np.zeros(1), 0.1, 10_000, seeded(11))
        bound = grad_variance_bound(2.0, 0.0, 1.0, 0.1, 1)
        assert bound == pytest.approx(16.04)
        assert est <= bound

    def test_stderr_reasonable(self):
        pot = make_quadratic_target(3)
        est, se = variance_estimate(pot, np.zeros(3), 0.5, 10_000, seeded(12),
                                    return_stderr=True)
        assert 0 < se < est


class TestShiftedEstimator:
    def test_mu_zero_is_plain(self):
        pot = make_abs_quadratic()
        x = np.array([0.4])
        sample = shifted_stochastic_grad(pot, x, 0.0, 0.01, seeded(13))
        assert (sample.grad == pot.subgrad(x)).all()

    def test_rejects_nonpositive_eta(self):
        with pytest.raises(ContractViolation):
            shifted_stochastic_grad(make_abs_quadratic(), np.zeros(1), 0.1,
                                    0.0, seeded(14))

    def test_variance_dominated_by_shift_term(self):
        # per-coordinate variance of (1 - 1/eta) mu z on the linear gradient
        pot = make_quadratic_target(5)
        mu, eta = 0.3, 0.01
        est = variance_estimate(pot, np.zeros(5), mu, 20_000, seeded(15),
                                shifted_eta=eta)
        hand = mu**2 * (1.0 - 1.0 / eta) ** 2
        assert est == pytest.approx(hand, rel=0.2)

    @pytest.mark.parametrize("eta", [0.01, 0.1, 0.4])
    def test_shift_inflates_variance(self, eta):
        pot = make_quadratic_target(2)
        x = np.array([0.2, -0.2])
        plain = variance_estimate(pot, x, 0.2, 10_000, seeded(16))
        shifted = variance_estimate(pot, x, 0.2, 10_000, seeded(17),
                                    shifted_eta=eta)
        assert shifted >= plain


class TestSmoothingInvariants:
    @pytest.mark.parametrize("mu", [0.01, 0.1, 1.0])
    @pytest.mark.parametrize("make_pot,x", [
        (make_abs_quadratic, np.array([0.3])),
        (lambda: make_quadratic_target(2), np.array([1.0, -0.5])),
    ])
    def test_gap_bound(self, make_pot, x, mu):
        pot = make_pot()
        est, se = smoothed_value_mc(pot, x, mu, 100_000, seeded(18))
        gap = est - pot.value(x)
        bound = smoothing_gap_bound(pot.holder_L, pot.holder_alpha, mu, pot.dim) \
            + pot.smooth_m * mu * mu * pot.dim / 2.0
        assert gap >= -4 * se
        assert gap <= bound + 4 * se

    def test_empirical_smoothness_of_smoothed_gradient(self):
        pot = make_abs_quadratic()
        mu, n = 0.2, 100_000
        m_mu = smoothed_gradient_lipschitz(pot.holder_L, pot.holder_alpha, mu,
                                           pot.dim)
        gen = seeded(19)
        for x, y in [(np.array([0.0]), np.array([0.5])),
                     (np.array([-0.3]), np.array([0.1]))]:
            zx = gen.standard_normal((n, 1))
            zy = gen.standard_normal((n, 1))
            gx = pot.subgrad(x + mu * zx)
            gy = pot.subgrad(y + mu * zy)
            se = (gx.std(ddof=1) + gy.std(ddof=1)) / math.sqrt(n)
            gap = np.linalg.norm(x - y)
            ratio = np.linalg.norm(gx.mean(axis=0) - gy.mean(axis=0)) / gap
            assert ratio <= m_mu + pot.smooth_m + 4 * se / gap

    def test_smoothing_preserves_strong_convexity(self):
        # quadratic regularizer: the defect equals (lam/2)||y-x||^2 exactly,
        # so the Monte-Carlo check only fights its own noise
        pot = make_quadratic_target(2, lam=0.8)
        mu, n = 0.5, 100_000
        gen = seeded(20)
        for _ in range(3):
            x = gen.standard_normal(2)
            y = gen.standard_normal(2)
            vx, sex = smoothed_value_mc(pot, x, mu, n, seeded(21))
            vy, sey = smoothed_value_mc(pot, y, mu, n, seeded(22))
            grad_mu_x = pot.subgrad(x)  # exact: smoothing keeps the gradient
            lhs = vy - vx - float(grad_mu_x @ (y - x))
            rhs = 0.4 * float(((y - x) ** 2).sum())
            assert lhs >= rhs - 4 * (sex + sey)

    def test_unbiasedness_vs_finite_difference_of_closed_form(self):
        pot = make_abs_quadratic()  # |x| + x^2/2
        mu, n, h = 0.5, 100_000, 1e-5
        gen = seeded(23)
        for x0 in (-0.6, 0.0, 0.8):
            z = gen.standard_normal((n, 1))
            grads = pot.subgrad(np.array([x0]) + mu * z)
            se = grads.std(ddof=1) / math.sqrt(n)

            def smoothed(t):
                return smoothed_value_closed("abs1d", {}, t, mu) \
                    + smoothed_value_closed("quadratic", {"a": 1.0}, [t], mu)

            fd = (smoothed(x0 + h) - smoothed(x0 - h)) / (2 * h)
            assert abs(grads.mean() - fd) <= 4 * se
