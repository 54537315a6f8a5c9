"""ECM estimation of the flare mixture regression and model-based clustering.

One iteration runs: E-step posteriors, a single constrained Newton update of
the coefficients, a refreshed E-step at the half-updated parameters, then
closed-form weighted updates of (mixing weight, variance, rate). The observed
loglikelihood never decreases along the way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import Dataset, FitError, check_design
from .distributions import FlareParams, flare_log_components
from .inference import bic

COMPONENT_GAUSSIAN = "gaussian"
COMPONENT_EXPONENTIAL = "exponential"

# Observations with posterior Gaussian membership below this are treated as
# confidently exponential: the beta step must not push their residuals
# non-positive (support constraint of the exponential component).
Z_HARD = 0.5

SIGMA2_FLOOR = 1e-12


@dataclass(frozen=True)
class FlareFit:
    params: FlareParams
    loglik: float
    bic: float
    iterations: int
    converged: bool
    posteriors: np.ndarray
    loglik_trace: np.ndarray
    degenerate: bool
    sigma2_floored: bool


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray  # entries in {COMPONENT_GAUSSIAN, COMPONENT_EXPONENTIAL}
    cutoff: float

    @property
    def n_exponential(self) -> int:
        return int(np.sum(self.labels == COMPONENT_EXPONENTIAL))


class Psi2Step(NamedTuple):
    """Closed-form (lam, sigma2, alpha) update; nan + flag on degenerate
    weight sums."""

    lam: float
    sigma2: float
    alpha: float
    sigma2_ok: bool
    alpha_ok: bool


def observed_loglik(data: Dataset, theta: FlareParams) -> float:
    """Observed-data loglikelihood; -inf if any point has zero density."""
    if theta.beta.size != data.p:
        raise ValueError("beta length does not match design width")
    r = data.residuals(theta.beta)
    return float(np.sum(np.logaddexp(*flare_log_components(r, theta))))


def posterior_vector(data: Dataset, theta: FlareParams) -> np.ndarray:
    """Posterior Gaussian membership probability per observation, computed
    in log space."""
    r = data.residuals(theta.beta)
    log_gauss, log_expo = flare_log_components(r, theta)
    total = np.logaddexp(log_gauss, log_expo)
    if np.any(np.isneginf(total)):
        raise FitError("zero flare density at some observation; posterior undefined")
    return np.exp(log_gauss - total)


def posterior_gaussian(y: float, x, theta: FlareParams) -> float:
    """Posterior probability that a single observation's error is Gaussian."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != theta.beta.shape:
        raise ValueError(
            f"x has length {x.size} but beta has length {theta.beta.size}"
        )
    r = float(y) - float(x @ theta.beta)
    log_gauss, log_expo = flare_log_components(r, theta)
    total = np.logaddexp(log_gauss, log_expo)
    if np.isneginf(total):
        raise FitError("zero flare density at this observation; posterior undefined")
    return float(np.exp(log_gauss - total))


def _m_objective(data: Dataset, Z, beta, sigma2: float, alpha: float) -> float:
    """Expected complete-data loglikelihood in beta, up to constants."""
    r = data.residuals(beta)
    return float(np.sum(-Z * r**2 / (2.0 * sigma2) - alpha * (1.0 - Z) * r))


def cm_step_beta(data: Dataset, Z, theta: FlareParams) -> np.ndarray:
    """One Newton update of the coefficients with step-halving.

    The Newton direction uses the analytic gradient and the negative-definite
    Hessian -X' diag(Z)/sigma2 X. Halving continues until the objective does
    not decrease and no confidently-exponential observation has its residual
    driven non-positive; if no such step exists the coefficients are kept.
    """
    Z = np.asarray(Z, dtype=float)
    beta = theta.beta
    r = data.residuals(beta)
    grad = data.X.T @ (Z * r / theta.sigma2 + theta.alpha * (1.0 - Z))
    H = -(data.X.T @ (Z[:, None] * data.X)) / theta.sigma2
    try:
        step = np.linalg.solve(H, -grad)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Hessian in flare beta step") from exc
    if not np.all(np.isfinite(step)):
        raise FitError("non-finite Newton step in flare beta update")

    guard = (Z < Z_HARD) & (r > 0.0)
    cur = _m_objective(data, Z, beta, theta.sigma2, theta.alpha)
    scale = 1.0
    for _ in range(40):
        cand = beta + scale * step
        r_new = data.residuals(cand)
        if (np.all(r_new[guard] >= 0.0)
                and _m_objective(data, Z, cand, theta.sigma2, theta.alpha) >= cur):
            return cand
        scale *= 0.5
    return beta.copy()


def cm_step_psi2(data: Dataset, Z, beta) -> Psi2Step:
    """Closed-form weighted updates of the mixing weight, Gaussian variance,
    and exponential rate at fixed coefficients."""
    Z = np.asarray(Z, dtype=float)
    r = data.residuals(beta)
    sz = float(np.sum(Z))
    sw = float(np.sum(1.0 - Z))
    lam = sz / data.n
    if sz > 0:
        sigma2, sigma2_ok = float(np.sum(Z * r**2) / sz), True
    else:
        sigma2, sigma2_ok = float("nan"), False
    denom = float(np.sum((1.0 - Z) * r))
    if sw > 0 and denom > 0:
        alpha, alpha_ok = sw / denom, True
    else:
        alpha, alpha_ok = float("nan"), False
    return Psi2Step(lam, sigma2, alpha, sigma2_ok, alpha_ok)


def default_flare_init(data: Dataset) -> FlareParams:
    """Half-and-half start: coefficients from OLS on the below-median-residual
    subsample, scale parameters from the signed residual halves."""
    beta_ols, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    e = data.residuals(beta_ols)
    low = e < np.median(e)
    if np.sum(low) >= data.p:
        beta, *_ = np.linalg.lstsq(data.X[low], data.y[low], rcond=None)
    else:
        beta = beta_ols
    r = data.residuals(beta)
    neg = r[r <= 0]
    pos = r[r > 0]
    sigma2 = float(np.mean(neg**2)) if neg.size else float(max(np.var(r), 1e-8))
    alpha = 1.0 / float(np.mean(pos)) if pos.size else 1.0
    return FlareParams(0.5, beta, max(sigma2, 1e-10), max(alpha, 1e-10))


def _collapsed_gaussian_fit(data: Dataset, alpha: float) -> FlareParams:
    beta, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    sigma2 = max(float(np.mean(data.residuals(beta) ** 2)), SIGMA2_FLOOR)
    return FlareParams(1.0, beta, sigma2, alpha)


def fit_flare(data: Dataset, init: FlareParams | None = None, tol: float = 1e-8,
              max_iter: int = 1000) -> FlareFit:
    """ECM maximum likelihood fit of the flare mixture regression.

    Stops when the sup-norm parameter change drops below tol. A mixing
    weight pinned at 0 or 1 for 10 consecutive iterations triggers the
    degenerate path: the collapsed single-component estimate is returned
    with a warning flag. Reported posteriors are evaluated at the final
    parameters.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_design(data)
    theta = default_flare_init(data) if init is None else init
    if theta.beta.size != data.p:
        raise ValueError("init.beta length does not match design width")

    Z = posterior_vector(data, theta)
    trace = [observed_loglik(data, theta)]
    converged = False
    degenerate = False
    floored = False
    consec_boundary = 0
    iterations = 0

    for t in range(max_iter):
        try:
            beta = cm_step_beta(data, Z, theta)
        except FitError:
            beta = theta.beta  # let the next E-step reshuffle memberships
        theta_half = FlareParams(theta.lam, beta, theta.sigma2, theta.alpha)
        # the z_hard guard does not protect semi-exponential points, so the
        # half-step can still cross their support; reject it in that case and
        # keep the (always monotone) closed-form update from the old beta
        if observed_loglik(data, theta_half) < trace[-1] - 1e-12:
            beta = theta.beta
            theta_half = theta
        Z = posterior_vector(data, theta_half)
        step = cm_step_psi2(data, Z, beta)
        sigma2 = step.sigma2 if step.sigma2_ok else theta.sigma2
        alpha = step.alpha if step.alpha_ok else theta.alpha
        if sigma2 < SIGMA2_FLOOR:
            sigma2 = SIGMA2_FLOOR
            floored = True
        new_theta = FlareParams(step.lam, beta, sigma2, alpha)

        diff = float(np.max(np.abs(new_theta.as_vector() - theta.as_vector())))
        theta = new_theta
        Z = posterior_vector(data, theta)
        trace.append(observed_loglik(data, theta))
        iterations = t + 1

        if theta.lam <= tol or theta.lam >= 1.0 - tol:
            consec_boundary += 1
        else:
            consec_boundary = 0
        if consec_boundary >= 10:
            degenerate = True
            if theta.lam >= 0.5:
                theta = _collapsed_gaussian_fit(data, theta.alpha)
                Z = posterior_vector(data, theta)
                trace.append(observed_loglik(data, theta))
            break
        if diff <= tol:
            converged = True
            break

    loglik = trace[-1]
    k = data.p + 3
    return FlareFit(
        params=theta,
        loglik=loglik,
        bic=bic(loglik, k, data.n),
        iterations=iterations,
        converged=converged,
        posteriors=Z,
        loglik_trace=np.asarray(trace),
        degenerate=degenerate,
        sigma2_floored=floored,
    )


def classify(fit: FlareFit, cutoff: float = 0.5) -> ClusterLabels:
    """Hard labels: exponential wherever 1 - posterior >= cutoff."""
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError(f"cutoff must lie in [0, 1], got {cutoff}")
    # posterior <= 1 - cutoff is the same inequality, but it stays exact at
    # cutoff = 1, where only a posterior of exactly zero qualifies
    expo = fit.posteriors <= 1.0 - cutoff
    labels = np.where(expo, COMPONENT_EXPONENTIAL, COMPONENT_GAUSSIAN)
    return ClusterLabels(labels=labels, cutoff=cutoff)
