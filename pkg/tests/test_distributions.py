import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from flarefit import EmgParams, FlareParams, emg_log_density, erfcx, flare_density
from flarefit.distributions import flare_log_density_residual


def erfcx_series_oracle(x, terms=12):
    """Asymptotic series erfcx(x) ~ 1/(x sqrt(pi)) * sum (-1)^k (2k-1)!! / (2x^2)^k,
    valid for large x."""
    total = 0.0
    term = 1.0
    for k in range(terms):
        total += term
        term *= -(2 * k + 1) / (2.0 * x**2)
    return total / (x * np.sqrt(np.pi))


def erfc_quadrature_oracle(x):
    val, _ = scipy.integrate.quad(
        lambda t: 2.0 / np.sqrt(np.pi) * np.exp(-t**2), x, np.inf
    )
    return val


def emg_density_convolution_oracle(y, mu, sigma, alpha):
    """Adaptive quadrature of the Gaussian * exponential convolution."""

    def integrand(t):
        return (
            scipy.stats.norm.pdf(y - t, loc=mu, scale=sigma)
            * alpha * np.exp(-alpha * t)
        )

    val, _ = scipy.integrate.quad(integrand, 0.0, np.inf, limit=200)
    return val


class TestErfcx:
    def test_at_zero(self):
        assert erfcx(0.0) == 1.0

    def test_large_argument_matches_asymptotic_series(self):
        x = 26.0
        assert erfcx(x) == pytest.approx(erfcx_series_oracle(x), rel=1e-12)

    def test_negative_argument_matches_quadrature(self):
        x = -1.0
        expected = np.exp(1.0) * erfc_quadrature_oracle(x)
        assert erfcx(x) == pytest.approx(expected, rel=1e-10)

    def test_vectorized_monotone_decreasing_and_positive(self):
        xs = np.linspace(-5, 30, 200)
        vals = erfcx(xs)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            erfcx(np.nan)
        with pytest.raises(ValueError):
            erfcx(np.inf)


class TestEmgLogDensity:
    def test_erfc_argument_zero(self):
        # y = mu + alpha*sigma^2 makes the erfc argument exactly zero
        val = emg_log_density(1.0, 0.0, 1.0, 1.0)
        assert val == pytest.approx(np.log(0.5) - 0.5, abs=1e-14)

    def test_matches_convolution_quadrature(self):
        val = np.exp(emg_log_density(0.0, 0.0, 1.0, 1.0))
        expected = emg_density_convolution_oracle(0.0, 0.0, 1.0, 1.0)
        assert val == pytest.approx(expected, abs=1e-8)

    def test_small_sigma_shifted_exponential_limit(self):
        # the exact gap to the limit is alpha^2 sigma^2 / 2
        y, mu, alpha = 10.0, 0.0, 1.0
        limit = np.log(alpha) - alpha * (y - mu)
        assert emg_log_density(y, mu, 0.01, alpha) == pytest.approx(
            limit, abs=1e-4
        )
        assert emg_log_density(y, mu, 1e-3, alpha) == pytest.approx(
            limit, abs=1e-6
        )

    def test_extreme_arguments_stay_finite(self):
        # naive exp * erfc overflows on both of these
        assert np.isfinite(emg_log_density(0.0, 0.0, 0.1, 500.0))
        assert np.isfinite(emg_log_density(-100.0, 0.0, 1.0, 1.0))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            emg_log_density(0.0, 0.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            emg_log_density(0.0, 0.0, 1.0, 0.0)

    @pytest.mark.parametrize("mu,sigma,alpha", [
        (0.0, 1.0, 1.0), (2.0, 0.5, 0.05), (-3.0, 2.0, 0.3),
    ])
    def test_concave_in_y(self, mu, sigma, alpha):
        ys = np.linspace(mu - 6 * sigma, mu + 6 * sigma + 6 / alpha, 100)
        h = 1e-3
        second = (
            emg_log_density(ys + h, mu, sigma, alpha)
            - 2 * emg_log_density(ys, mu, sigma, alpha)
            + emg_log_density(ys - h, mu, sigma, alpha)
        ) / h**2
        # deep in the exponential tail the curvature underflows and the
        # central difference returns exactly 0; no positive curvature allowed
        assert np.all(second <= 1e-8)
        core = np.abs(ys - mu) < 3 * sigma
        assert np.all(second[core] < 0)

    @pytest.mark.parametrize("mu,sigma,alpha", [
        (0.0, 1.0, 1.0), (1.0, 0.3, 2.0), (-2.0, 1.5, 0.1),
    ])
    def test_integrates_to_one(self, mu, sigma, alpha):
        total, _ = scipy.integrate.quad(
            lambda y: np.exp(emg_log_density(y, mu, sigma, alpha)),
            mu - 12 * sigma, mu + 12 * sigma + 40 / alpha, limit=400,
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_location_family_shift(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            y, c = rng.normal(size=2) * 3
            mu = rng.normal()
            sigma = rng.uniform(0.2, 2.0)
            alpha = rng.uniform(0.05, 2.0)
            assert emg_log_density(y, mu, sigma, alpha) == pytest.approx(
                emg_log_density(y + c, mu + c, sigma, alpha), rel=1e-12
            )


class TestFlareDensity:
    def test_collapses_to_gaussian_at_lambda_one(self):
        theta = FlareParams(1.0, [0.0], 0.25, 0.05)
        r = 0.7
        expected = np.exp(-r**2 / 0.5) / np.sqrt(2 * np.pi * 0.25)
        assert flare_density(r, [1.0], theta) == pytest.approx(expected, rel=1e-12)

    def test_zero_for_nonpositive_residual_at_lambda_zero(self):
        theta = FlareParams(0.0, [0.0], 1.0, 1.0)
        assert flare_density(-0.3, [1.0], theta) == 0.0
        # strict inequality at residual exactly zero
        assert flare_density(0.0, [1.0], theta) == 0.0

    def test_two_term_hand_value(self):
        theta = FlareParams(0.6, [-2.0, 4.0], 0.25, 0.05)
        x = np.array([1.0, 1.0])  # x.beta = 2, y = 3 -> r = 1
        gauss = np.exp(-1.0 / 0.5) / np.sqrt(2 * np.pi * 0.25)
        expected = 0.6 * gauss + 0.4 * 0.05 * np.exp(-0.05)
        assert flare_density(3.0, x, theta) == pytest.approx(expected, rel=1e-12)

    def test_dimension_mismatch(self):
        theta = FlareParams(0.5, [0.0, 1.0], 1.0, 1.0)
        with pytest.raises(ValueError):
            flare_density(0.0, [1.0], theta)

    @pytest.mark.parametrize("lam,sigma2,alpha", [
        (0.6, 0.25, 0.05), (0.2, 1.0, 1.0), (0.95, 4.0, 0.3),
    ])
    def test_integrates_to_one(self, lam, sigma2, alpha):
        theta = FlareParams(lam, [0.0], sigma2, alpha)

        def dens(r):
            return float(np.exp(flare_log_density_residual(r, theta)))

        sigma = np.sqrt(sigma2)
        left, _ = scipy.integrate.quad(dens, -12 * sigma, 0.0, limit=200)
        right, _ = scipy.integrate.quad(
            dens, 0.0, 12 * sigma + 60 / alpha, limit=400
        )
        assert left + right == pytest.approx(1.0, abs=1e-6)

    def test_linear_in_lambda_for_positive_residual(self):
        r = 1.3
        lams = np.linspace(0.0, 1.0, 11)
        vals = [
            flare_density(r, [1.0], FlareParams(l, [0.0], 0.5, 0.4))
            for l in lams
        ]
        slopes = np.diff(vals) / np.diff(lams)
        assert np.allclose(slopes, slopes[0], rtol=1e-9)


class TestParamValidation:
    def test_emg_params(self):
        with pytest.raises(ValueError):
            EmgParams([1.0], sigma2=0.0, alpha=1.0)
        with pytest.raises(ValueError):
            EmgParams([1.0], sigma2=1.0, alpha=-0.1)

    def test_flare_params(self):
        with pytest.raises(ValueError):
            FlareParams(1.2, [1.0], 1.0, 1.0)
        with pytest.raises(ValueError):
            FlareParams(0.5, [1.0], -1.0, 1.0)
        # boundary weights are legal
        FlareParams(0.0, [1.0], 1.0, 1.0)
        FlareParams(1.0, [1.0], 1.0, 1.0)
