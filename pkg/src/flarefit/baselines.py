"""Comparison baselines: Gaussian OLS regression and a two-component
mixture of linear regressions fitted by EM.

Both report the maximum-likelihood variance (RSS/n) so their loglikelihoods
and BIC values are directly comparable with the skewed-error models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, check_design
from .inference import bic

_LOG_2PI = np.log(2.0 * np.pi)
VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class LinFit:
    beta: np.ndarray
    sigma2: float
    loglik: float
    bic: float
    sigma2_floored: bool


@dataclass(frozen=True)
class MixRegFit:
    lam: float
    beta1: np.ndarray
    beta2: np.ndarray
    sigma1_2: float
    sigma2_2: float
    loglik: float
    bic: float
    posteriors: np.ndarray  # membership probability of component 1
    iterations: int
    converged: bool
    degenerate: bool


def gaussian_loglik(data: Dataset, beta, sigma2: float) -> float:
    rss = float(np.sum(data.residuals(beta) ** 2))
    return -0.5 * data.n * (_LOG_2PI + np.log(sigma2)) - rss / (2.0 * sigma2)


def fit_ols(data: Dataset) -> LinFit:
    """Ordinary least squares with the ML variance RSS/n."""
    check_design(data)
    beta, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    sigma2 = float(np.mean(data.residuals(beta) ** 2))
    floored = sigma2 < VAR_FLOOR
    sigma2 = max(sigma2, VAR_FLOOR)
    loglik = gaussian_loglik(data, beta, sigma2)
    return LinFit(
        beta=beta,
        sigma2=sigma2,
        loglik=loglik,
        bic=bic(loglik, data.p + 1, data.n),
        sigma2_floored=floored,
    )


def _wls(data: Dataset, w) -> np.ndarray:
    sw = np.sqrt(np.maximum(w, 0.0))
    beta, *_ = np.linalg.lstsq(sw[:, None] * data.X, sw * data.y, rcond=None)
    return beta


def _mixreg_log_components(data: Dataset, lam, b1, b2, s1, s2):
    r1 = data.residuals(b1)
    r2 = data.residuals(b2)
    with np.errstate(divide="ignore"):
        lg1 = np.log(lam) - 0.5 * (_LOG_2PI + np.log(s1)) - r1**2 / (2.0 * s1)
        lg2 = np.log1p(-lam) - 0.5 * (_LOG_2PI + np.log(s2)) - r2**2 / (2.0 * s2)
    return lg1, lg2


def fit_mixreg2(data: Dataset, init: MixRegFit | None = None, tol: float = 1e-8,
                max_iter: int = 1000, seed: int | None = None,
                fix_lambda: float | None = None) -> MixRegFit:
    """Two-component mixture of linear regressions by EM.

    Default initialization hard-partitions observations by residual sign
    around the OLS line. Components are reported with the smaller fitted
    intercept first. With fix_lambda set, the mixing weight is held fixed
    (fix_lambda=1 reduces to OLS on component 1).
    """
    check_design(data)
    if init is not None:
        lam, b1, b2 = init.lam, init.beta1, init.beta2
        s1, s2 = init.sigma1_2, init.sigma2_2
    else:
        ols = fit_ols(data)
        e = data.residuals(ols.beta)
        below = e <= 0
        rng = np.random.default_rng(seed)
        if below.all() or (~below).all():
            below = rng.random(data.n) < 0.5
        w = below.astype(float)
        b1 = _wls(data, w) if w.sum() >= data.p else ols.beta
        b2 = _wls(data, 1.0 - w) if (1.0 - w).sum() >= data.p else ols.beta
        s1 = max(float(np.average(data.residuals(b1) ** 2, weights=w + 1e-12)),
                 VAR_FLOOR)
        s2 = max(float(np.average(data.residuals(b2) ** 2,
                                  weights=1.0 - w + 1e-12)), VAR_FLOOR)
        lam = float(np.mean(w))
    if fix_lambda is not None:
        lam = float(fix_lambda)

    converged = False
    degenerate = False
    prev_ll = -np.inf
    post = np.full(data.n, lam)
    iterations = 0
    for t in range(max_iter):
        lg1, lg2 = _mixreg_log_components(data, lam, b1, b2, s1, s2)
        total = np.logaddexp(lg1, lg2)
        ll = float(np.sum(total))
        post = np.exp(lg1 - total)

        w1 = post
        w2 = 1.0 - post
        if w1.sum() >= data.p:
            b1 = _wls(data, w1)
            s1 = float(np.sum(w1 * data.residuals(b1) ** 2) / max(w1.sum(), 1e-300))
        if w2.sum() >= data.p:
            b2 = _wls(data, w2)
            s2 = float(np.sum(w2 * data.residuals(b2) ** 2) / max(w2.sum(), 1e-300))
        if s1 < VAR_FLOOR or s2 < VAR_FLOOR:
            degenerate = True
        s1 = max(s1, VAR_FLOOR)
        s2 = max(s2, VAR_FLOOR)
        if fix_lambda is None:
            lam = float(np.mean(post))
        iterations = t + 1
        if abs(ll - prev_ll) <= tol:
            converged = True
            break
        prev_ll = ll

    lg1, lg2 = _mixreg_log_components(data, lam, b1, b2, s1, s2)
    total = np.logaddexp(lg1, lg2)
    loglik = float(np.sum(total))
    post = np.exp(lg1 - total)

    # deterministic reporting: component 1 carries the smaller intercept
    if b2[0] < b1[0]:
        b1, b2 = b2, b1
        s1, s2 = s2, s1
        lam = 1.0 - lam
        post = 1.0 - post

    k = 2 * data.p + 3
    return MixRegFit(
        lam=lam, beta1=b1, beta2=b2, sigma1_2=s1, sigma2_2=s2,
        loglik=loglik, bic=bic(loglik, k, data.n), posteriors=post,
        iterations=iterations, converged=converged, degenerate=degenerate,
    )
