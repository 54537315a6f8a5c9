"""Densities for the two skewed-error regression families.

The EMG (exponentially-modified Gaussian) density is the convolution of a
zero-mean Gaussian with an exponential; the flare density is a two-component
mixture of a zero-centered Gaussian and a positive-support exponential.
Everything here is evaluated in log space where overflow is a risk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special as special

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class EmgParams:
    """Parameters of the EMG regression model: coefficients, Gaussian
    variance, exponential rate."""

    beta: np.ndarray
    sigma2: float
    alpha: float

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1 or beta.size < 1:
            raise ValueError("beta must be a non-empty vector")
        object.__setattr__(self, "beta", beta)
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    def as_vector(self) -> np.ndarray:
        """Flatten to (beta..., sigma2, alpha)."""
        return np.concatenate([self.beta, [self.sigma2, self.alpha]])


@dataclass(frozen=True)
class FlareParams:
    """Parameters of the flare mixture regression: Gaussian weight,
    coefficients, Gaussian variance, exponential rate."""

    lam: float
    beta: np.ndarray
    sigma2: float
    alpha: float

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1 or beta.size < 1:
            raise ValueError("beta must be a non-empty vector")
        object.__setattr__(self, "beta", beta)
        if not (np.isfinite(self.lam) and 0.0 <= self.lam <= 1.0):
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    def as_vector(self) -> np.ndarray:
        """Flatten to (lam, beta..., sigma2, alpha)."""
        return np.concatenate([[self.lam], self.beta, [self.sigma2, self.alpha]])


def erfcx(x):
    """Scaled complementary error function exp(x^2) * erfc(x).

    Strictly positive and monotone decreasing; stays finite for large
    positive arguments where erfc alone underflows.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("erfcx requires finite input")
    out = special.erfcx(x)
    return float(out) if out.ndim == 0 else out


def emg_log_density(y, mu, sigma: float, alpha: float):
    """Log density of EMG(mu, sigma, alpha) at y.

    Two branches keep the exp * erfc product representable: when the erfc
    argument u = (alpha*sigma^2 - (y-mu)) / (sqrt(2)*sigma) is positive the
    exponential prefactor and exp(u^2) cancel exactly into a Gaussian
    kernel times erfcx(u); when u is negative, erfc(u) is between 1 and 2
    and the direct formula is safe.
    """
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = y - mu
    u = (alpha * sigma**2 - r) / (np.sqrt(2.0) * sigma)
    log_half_alpha = np.log(alpha / 2.0)

    # u >= 0: log(alpha/2) - r^2/(2 sigma^2) + log erfcx(u)   (exact rewrite)
    # u <  0: log(alpha/2) + alpha^2 sigma^2/2 - alpha r + log erfc(u)
    with np.errstate(divide="ignore"):
        stable = log_half_alpha - r**2 / (2.0 * sigma**2) + np.log(special.erfcx(u))
        direct = (
            log_half_alpha
            + alpha**2 * sigma**2 / 2.0
            - alpha * r
            + np.log(special.erfc(u))
        )
    out = np.where(u >= 0.0, stable, direct)
    return float(out) if out.ndim == 0 else out


def flare_log_components(residual, theta: FlareParams):
    """Per-observation log of the two weighted mixture terms.

    Returns (log_gauss, log_expo) where log_gauss = log(lam * N(r; 0, sigma2))
    and log_expo = log((1-lam) * alpha * exp(-alpha r) * 1{r > 0}); entries
    are -inf where a term vanishes.
    """
    r = np.asarray(residual, dtype=float)
    with np.errstate(divide="ignore"):
        log_gauss = (
            np.log(theta.lam)
            - 0.5 * (_LOG_2PI + np.log(theta.sigma2))
            - r**2 / (2.0 * theta.sigma2)
        )
        log_expo = np.where(
            r > 0.0,
            np.log1p(-theta.lam) + np.log(theta.alpha) - theta.alpha * r,
            -np.inf,
        )
    return log_gauss, log_expo


def flare_log_density_residual(residual, theta: FlareParams):
    """Log flare density as a function of the residual y - x.beta."""
    log_gauss, log_expo = flare_log_components(residual, theta)
    return np.logaddexp(log_gauss, log_expo)


def flare_density(y: float, x, theta: FlareParams) -> float:
    """Flare mixture density lam*N(r;0,sigma2) + (1-lam)*alpha*e^{-alpha r}*1{r>0}
    with r = y - x.beta."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != theta.beta.shape:
        raise ValueError(
            f"x has length {x.size} but beta has length {theta.beta.size}"
        )
    r = float(y) - float(x @ theta.beta)
    return float(np.exp(flare_log_density_residual(r, theta)))
