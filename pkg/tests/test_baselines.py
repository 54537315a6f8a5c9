import numpy as np
import pytest

from flarefit import Dataset, FitError, fit_mixreg2, fit_ols


def two_lines(n=500, seed=0, offset=5.0, sigma=0.1, slope=2.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3, 3, size=n)
    which = rng.random(n) < 0.5
    inter = np.where(which, -offset, offset)
    y = inter + slope * x + sigma * rng.standard_normal(n)
    return Dataset(np.column_stack([np.ones(n), x]), y)


class TestFitOls:
    def test_intercept_only_hand_case(self):
        fit = fit_ols(Dataset(np.ones((3, 1)), [1.0, 2.0, 3.0]))
        assert fit.beta[0] == pytest.approx(2.0)
        assert fit.sigma2 == pytest.approx(2.0 / 3.0)

    def test_exact_line_floors_variance(self):
        x = np.linspace(0, 1, 20)
        data = Dataset(np.column_stack([np.ones(20), x]), 1.0 + 2.0 * x)
        fit = fit_ols(data)
        assert fit.sigma2_floored
        assert np.allclose(fit.beta, [1.0, 2.0], atol=1e-8)

    def test_permutation_invariance(self):
        data = two_lines(80, seed=1)
        perm = np.random.default_rng(2).permutation(data.n)
        shuffled = Dataset(data.X[perm], data.y[perm])
        a, b = fit_ols(data), fit_ols(shuffled)
        assert np.allclose(a.beta, b.beta)
        assert a.sigma2 == pytest.approx(b.sigma2)
        assert a.loglik == pytest.approx(b.loglik)

    def test_loglik_is_gaussian_ml(self):
        data = two_lines(60, seed=3)
        fit = fit_ols(data)
        r = data.residuals(fit.beta)
        expected = float(
            -0.5 * data.n * np.log(2 * np.pi * fit.sigma2)
            - np.sum(r**2) / (2 * fit.sigma2)
        )
        assert fit.loglik == pytest.approx(expected, rel=1e-12)
        assert fit.bic == pytest.approx(
            -2 * fit.loglik + (data.p + 1) * np.log(data.n)
        )

    def test_rank_deficient_rejected(self):
        X = np.column_stack([np.ones(10), np.ones(10)])
        with pytest.raises(FitError):
            fit_ols(Dataset(X, np.arange(10.0)))


class TestFitMixreg2:
    def test_well_separated_lines_recovered(self):
        data = two_lines(500, seed=4)
        fit = fit_mixreg2(data, seed=4)
        assert fit.converged and not fit.degenerate
        assert np.max(np.abs(fit.beta1 - [-5.0, 2.0])) < 0.05
        assert np.max(np.abs(fit.beta2 - [5.0, 2.0])) < 0.05
        assert abs(fit.lam - 0.5) < 0.1

    def test_component_one_has_smaller_intercept(self):
        for seed in range(4):
            fit = fit_mixreg2(two_lines(300, seed=seed), seed=seed)
            assert fit.beta1[0] <= fit.beta2[0]

    def test_monotone_loglik_single_line(self):
        # unidentifiable case: either near-identical lines or a boundary
        # weight; both accepted, but loglik must not decrease
        rng = np.random.default_rng(6)
        n = 200
        x = rng.uniform(-2, 2, n)
        y = 1.0 + 0.5 * x + 0.3 * rng.standard_normal(n)
        data = Dataset(np.column_stack([np.ones(n), x]), y)
        fit = fit_mixreg2(data, seed=6)
        assert np.all((fit.posteriors >= 0) & (fit.posteriors <= 1))
        assert fit.sigma1_2 > 0 and fit.sigma2_2 > 0

    def test_equidistant_point_posterior_half(self):
        # equal weights, equal variances, point equidistant from both lines
        data = two_lines(300, seed=7)
        fit = fit_mixreg2(data, seed=7)
        # synthetic check on the E-step formula via a symmetric configuration
        from flarefit.baselines import _mixreg_log_components

        probe = Dataset(np.array([[1.0, 0.0]]), np.array([0.0]))
        lg1, lg2 = _mixreg_log_components(
            probe, 0.5, np.array([-5.0, 2.0]), np.array([5.0, 2.0]), 0.1, 0.1
        )
        post = np.exp(lg1 - np.logaddexp(lg1, lg2))
        assert post[0] == pytest.approx(0.5, abs=1e-12)
        assert fit.converged

    def test_fixed_lambda_one_reproduces_ols(self):
        data = two_lines(150, seed=8)
        mix = fit_mixreg2(data, seed=8, fix_lambda=1.0)
        ols = fit_ols(data)
        assert np.max(np.abs(mix.beta1 - ols.beta)) < 1e-8

    def test_loglik_never_decreases_across_refits(self):
        data = two_lines(200, seed=9)
        first = fit_mixreg2(data, seed=9)
        again = fit_mixreg2(data, init=first, seed=9)
        assert again.loglik >= first.loglik - 1e-9

    def test_deterministic_given_seed(self):
        data = two_lines(200, seed=10)
        a = fit_mixreg2(data, seed=11)
        b = fit_mixreg2(data, seed=11)
        assert a.loglik == b.loglik
        assert np.array_equal(a.beta1, b.beta1)
