"""Uncertainty quantification and BIC model comparison.

Standard errors come from nonparametric pair bootstrap (any model family)
or from the missing-information decomposition of the observed information
matrix (flare model only, which meets the needed regularity conditions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FitError

MODEL_ORDER = ("ols", "mixreg2", "emg", "flare")


def bic(loglik: float, k: int, n: int) -> float:
    """Bayesian information criterion -2*loglik + k*log(n); smaller is better."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return -2.0 * loglik + k * math.log(n)


@dataclass(frozen=True)
class SeReport:
    method: str  # "bootstrap" or "louis"
    param_names: tuple[str, ...]
    se: np.ndarray
    replicates: int | None = None
    failures: int = 0
    info_matrix: np.ndarray | None = None


@dataclass(frozen=True)
class ModelResult:
    model: str
    loglik: float | None
    k: int | None
    n: int
    bic: float | None
    error: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    results: tuple[ModelResult, ...]
    winner: str
    fits: dict = field(repr=False, default_factory=dict)


def _param_names(model: str, p: int) -> tuple[str, ...]:
    betas = tuple(f"beta{j}" for j in range(p))
    if model == "ols":
        return betas + ("sigma2",)
    if model == "emg":
        return betas + ("sigma2", "alpha")
    if model == "flare":
        return ("lambda",) + betas + ("sigma2", "alpha")
    if model == "mixreg2":
        return (("lambda",)
                + tuple(f"beta1_{j}" for j in range(p))
                + tuple(f"beta2_{j}" for j in range(p))
                + ("sigma1_2", "sigma2_2"))
    raise ValueError(f"unknown model id {model!r}")


def _fit_vector(model: str, data: Dataset, warm=None, seed=None) -> np.ndarray:
    """Fit one model family and flatten its parameters; warm is a previous
    fit used as the starting point."""
    from . import baselines, emg, flare

    if model == "ols":
        f = baselines.fit_ols(data)
        return np.concatenate([f.beta, [f.sigma2]])
    if model == "emg":
        init = warm.params if warm is not None else None
        f = emg.fit_emg(data, init=init, seed=seed)
        return f.params.as_vector()
    if model == "flare":
        init = warm.params if warm is not None else None
        f = flare.fit_flare(data, init=init)
        return f.params.as_vector()
    if model == "mixreg2":
        f = baselines.fit_mixreg2(data, init=warm, seed=seed)
        return np.concatenate([[f.lam], f.beta1, f.beta2,
                               [f.sigma1_2, f.sigma2_2]])
    raise ValueError(f"unknown model id {model!r}")


def _full_fit(model: str, data: Dataset, seed=None):
    from . import baselines, emg, flare

    if model == "ols":
        return baselines.fit_ols(data)
    if model == "emg":
        return emg.fit_emg(data, seed=seed)
    if model == "flare":
        return flare.fit_flare(data)
    if model == "mixreg2":
        return baselines.fit_mixreg2(data, seed=seed)
    raise ValueError(f"unknown model id {model!r}")


def bootstrap_se(data: Dataset, model: str, B: int = 200,
                 seed: int = 0) -> SeReport:
    """Pair-resampling bootstrap standard errors.

    Each replicate draws n observation pairs with replacement, refits the
    model warm-started at the full-data estimate, and the per-parameter
    sample standard deviations over replicates are reported. Deterministic
    given seed; replicate b uses its own RNG stream derived from (seed, b).
    """
    if B < 2:
        raise ValueError("need at least B=2 bootstrap replicates")
    warm = _full_fit(model, data, seed=seed)
    estimates = []
    failures = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, data.n, size=data.n)
        try:
            estimates.append(_fit_vector(model, data.subset(idx), warm=warm,
                                         seed=seed))
        except (FitError, ValueError, np.linalg.LinAlgError):
            failures += 1
    if failures > 0.2 * B:
        raise FitError(
            f"bootstrap failed on {failures}/{B} replicates for model {model!r}"
        )
    est = np.asarray(estimates)
    return SeReport(
        method="bootstrap",
        param_names=_param_names(model, data.p),
        se=np.std(est, axis=0, ddof=1),
        replicates=B,
        failures=failures,
    )


def louis_information(data: Dataset, fit) -> SeReport:
    """Observed information for the flare model from the complete-data
    score/Hessian decomposition, with expectations under the fitted
    posterior memberships. SEs are sqrt of the inverse-information diagonal.
    """
    theta = fit.params
    if not (0.0 < theta.lam < 1.0):
        raise FitError("Louis information requires a non-degenerate mixing weight")
    p = data.p
    d = p + 3
    i_lam, i_beta = 0, slice(1, 1 + p)
    i_s2, i_al = 1 + p, 2 + p

    Z = np.asarray(fit.posteriors, dtype=float)
    r = data.residuals(theta.beta)
    pos = r > 0.0
    lam, s2, al = theta.lam, theta.sigma2, theta.alpha

    info = np.zeros((d, d))
    for i in range(data.n):
        x = data.X[i]
        ri, zi, posi = r[i], Z[i], pos[i]

        a = np.zeros(d)
        a[i_lam] = 1.0 / lam
        a[i_beta] = (ri / s2) * x
        a[i_s2] = -0.5 / s2 + ri**2 / (2.0 * s2**2)

        b = np.zeros(d)
        b[i_lam] = -1.0 / (1.0 - lam)
        if posi:
            b[i_beta] = al * x
            b[i_al] = 1.0 / al - ri
        else:
            b[i_al] = 1.0 / al

        A = np.zeros((d, d))
        A[i_lam, i_lam] = -1.0 / lam**2
        A[i_beta, i_beta] = -np.outer(x, x) / s2
        A[i_beta, i_s2] = -(ri / s2**2) * x
        A[i_s2, i_beta] = A[i_beta, i_s2]
        A[i_s2, i_s2] = 0.5 / s2**2 - ri**2 / s2**3

        Bm = np.zeros((d, d))
        Bm[i_lam, i_lam] = -1.0 / (1.0 - lam) ** 2
        Bm[i_al, i_al] = -1.0 / al**2
        if posi:
            Bm[i_beta, i_al] = x
            Bm[i_al, i_beta] = x

        mean_score = zi * a + (1.0 - zi) * b
        info += (
            -(zi * A + (1.0 - zi) * Bm)
            - (zi * np.outer(a, a) + (1.0 - zi) * np.outer(b, b))
            + np.outer(mean_score, mean_score)
        )

    info = 0.5 * (info + info.T)
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError as exc:
        raise FitError(
            "observed information is not positive definite; "
            "the fit may not be at a maximum"
        ) from exc
    cov = np.linalg.inv(info)
    return SeReport(
        method="louis",
        param_names=_param_names("flare", p),
        se=np.sqrt(np.diag(cov)),
        info_matrix=info,
    )


def compare_models(data: Dataset, seed: int = 0,
                   emg_starts: int = 5) -> ComparisonReport:
    """Fit all four model families and rank them by BIC.

    Per-model fit errors are recorded; the winner is the successful model
    with the smallest BIC, ties broken by the fixed model order.
    """
    from . import baselines, emg, flare

    n_params = {"ols": data.p + 1, "mixreg2": 2 * data.p + 3,
                "emg": data.p + 2, "flare": data.p + 3}
    results = []
    fits = {}
    for model in MODEL_ORDER:
        if data.n <= n_params[model]:
            results.append(ModelResult(
                model, None, None, data.n, None,
                error=f"n={data.n} does not exceed the parameter count "
                      f"{n_params[model]}",
            ))
            continue
        try:
            if model == "ols":
                f = baselines.fit_ols(data)
                ll, k, b = f.loglik, data.p + 1, f.bic
            elif model == "mixreg2":
                f = baselines.fit_mixreg2(data, seed=seed)
                ll, k, b = f.loglik, 2 * data.p + 3, f.bic
            elif model == "emg":
                f = emg.fit_emg(data, n_starts=emg_starts, seed=seed)
                ll, k, b = f.loglik, data.p + 2, f.bic
            else:
                f = flare.fit_flare(data)
                ll, k, b = f.loglik, data.p + 3, f.bic
            fits[model] = f
            results.append(ModelResult(model, ll, k, data.n, b))
        except (FitError, ValueError, np.linalg.LinAlgError) as exc:
            results.append(ModelResult(model, None, None, data.n, None,
                                       error=str(exc)))
    ok = [r for r in results if r.error is None]
    if not ok:
        raise FitError("no model family could be fitted: "
                       + "; ".join(f"{r.model}: {r.error}" for r in results))
    winner = min(ok, key=lambda r: (r.bic, MODEL_ORDER.index(r.model))).model
    return ComparisonReport(results=tuple(results), winner=winner, fits=fits)
