"""Report rendering: JSON summaries, delimited per-observation tables, and
matplotlib figures written next to them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import Dataset
from .flare import COMPONENT_EXPONENTIAL, COMPONENT_GAUSSIAN


def params_to_dict(model: str, fit) -> dict:
    if model == "ols":
        return {"beta": list(fit.beta), "sigma2": fit.sigma2}
    if model == "emg":
        return {"beta": list(fit.params.beta), "sigma2": fit.params.sigma2,
                "alpha": fit.params.alpha}
    if model == "flare":
        return {"lambda": fit.params.lam, "beta": list(fit.params.beta),
                "sigma2": fit.params.sigma2, "alpha": fit.params.alpha}
    if model == "mixreg2":
        return {"lambda": fit.lam, "beta1": list(fit.beta1),
                "beta2": list(fit.beta2), "sigma1_2": fit.sigma1_2,
                "sigma2_2": fit.sigma2_2}
    raise ValueError(f"unknown model id {model!r}")


def fit_beta(model: str, fit) -> np.ndarray:
    if model in ("ols", "mixreg2"):
        return np.asarray(fit.beta if model == "ols" else fit.beta1)
    return np.asarray(fit.params.beta)


def fit_summary(model: str, fit, elapsed_s: float, config: dict,
                se_report=None) -> dict:
    """JSON-ready summary of one fit: parameters, fit diagnostics, timing,
    and the full run configuration for reproducibility."""
    out = {
        "model": model,
        "params": params_to_dict(model, fit),
        "loglik": float(fit.loglik),
        "bic": float(fit.bic),
        "elapsed_seconds": float(elapsed_s),
        "config": config,
    }
    for attr in ("iterations", "converged", "degenerate",
                 "alpha_sigma_warning", "sigma2_floored"):
        if hasattr(fit, attr):
            out[attr] = _plain(getattr(fit, attr))
    if hasattr(fit, "loglik_trace"):
        trace = np.asarray(fit.loglik_trace)
        out["loglik_trace"] = {
            "length": int(trace.size),
            "first": float(trace[0]),
            "last": float(trace[-1]),
        }
    if hasattr(fit, "posteriors"):
        post = np.asarray(fit.posteriors)
        out["posterior_summary"] = {
            "mean": float(post.mean()),
            "min": float(post.min()),
            "max": float(post.max()),
        }
    if se_report is not None:
        out["standard_errors"] = {
            "method": se_report.method,
            "values": dict(zip(se_report.param_names,
                               map(float, se_report.se))),
            "replicates": se_report.replicates,
        }
    return out


def _plain(v):
    if isinstance(v, (np.bool_, np.integer, np.floating)):
        return v.item()
    return v


def confusion_table(labels, true_labels) -> dict:
    """Counts of classified vs generated component memberships."""
    out = {}
    for pred in (COMPONENT_GAUSSIAN, COMPONENT_EXPONENTIAL):
        for true in (COMPONENT_GAUSSIAN, COMPONENT_EXPONENTIAL):
            out[f"classified_{pred}_generated_{true}"] = int(
                np.sum((np.asarray(labels) == pred)
                       & (np.asarray(true_labels) == true))
            )
    return out


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return path


def write_observations(path, data: Dataset, beta, posteriors=None,
                       labels=None) -> Path:
    """Per-observation delimited table: response, predictors, fitted value,
    residual, and (for flare fits) posterior and hard label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fitted = data.X @ np.asarray(beta)
    resid = data.y - fitted
    header = (["y"] + [f"x{j}" for j in range(1, data.p)]
              + ["fitted", "residual"])
    if posteriors is not None:
        header += ["posterior_gaussian"]
    if labels is not None:
        header += ["label"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = ([f"{data.y[i]:.12g}"]
                   + [f"{v:.12g}" for v in data.X[i, 1:]]
                   + [f"{fitted[i]:.12g}", f"{resid[i]:.12g}"])
            if posteriors is not None:
                row.append(f"{posteriors[i]:.12g}")
            if labels is not None:
                row.append(str(labels[i]))
            writer.writerow(row)
    return path


def load_observations(path) -> dict:
    """Read back an observations table into column arrays."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, val in row.items():
                cols[name].append(val)
    out = {}
    for name, vals in cols.items():
        if name == "label":
            out[name] = np.asarray(vals)
        else:
            out[name] = np.asarray(vals, dtype=float)
    return out


def render_fit_figure(path, data: Dataset, beta, labels=None) -> Path | None:
    """Scatter of response vs the first predictor with the fitted line;
    points colored by component when labels are given. Skipped for designs
    without a non-intercept predictor."""
    if data.p < 2:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = data.X[:, 1]
    fig, ax = plt.subplots(figsize=(6, 4))
    if labels is None:
        ax.scatter(x, data.y, s=8, alpha=0.5, color="tab:blue")
    else:
        labels = np.asarray(labels)
        for name, color in ((COMPONENT_GAUSSIAN, "tab:blue"),
                            (COMPONENT_EXPONENTIAL, "tab:red")):
            m = labels == name
            ax.scatter(x[m], data.y[m], s=8, alpha=0.5, color=color,
                       label=name)
        ax.legend()
    grid = np.linspace(x.min(), x.max(), 50)
    beta = np.asarray(beta)
    line = beta[0] + beta[1] * grid
    ax.plot(grid, line, color="black", lw=1.5)
    ax.set_xlabel("predictor")
    ax.set_ylabel("response")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_trace_figure(path, trace) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.asarray(trace), lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loglikelihood")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_bic_grid(path, users, thresholds, winners) -> Path:
    """Heatmap of winning model per (user, truncation threshold).

    winners maps (user, threshold) to a model id; missing cells are blank.
    """
    from .inference import MODEL_ORDER

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    users = list(users)
    thresholds = list(thresholds)
    grid = np.full((len(users), len(thresholds)), np.nan)
    for i, u in enumerate(users):
        for j, t in enumerate(thresholds):
            w = winners.get((u, t))
            if w is not None:
                grid[i, j] = MODEL_ORDER.index(w)
    fig, ax = plt.subplots(
        figsize=(1.2 + 0.8 * len(thresholds), 1.0 + 0.4 * len(users))
    )
    cmap = matplotlib.colors.ListedColormap(
        ["tab:gray", "tab:purple", "tab:orange", "tab:green"]
    )
    ax.imshow(grid, cmap=cmap, vmin=-0.5, vmax=3.5, aspect="auto")
    ax.set_xticks(range(len(thresholds)),
                  [f"T={t}" for t in thresholds])
    ax.set_yticks(range(len(users)), users)
    for i in range(len(users)):
        for j in range(len(thresholds)):
            if np.isfinite(grid[i, j]):
                ax.text(j, i, MODEL_ORDER[int(grid[i, j])],
                        ha="center", va="center", fontsize=8)
    ax.set_xlabel("truncation threshold (s)")
    ax.set_ylabel("user")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_mc_figure(path, report) -> Path:
    """RMSE per parameter across sample sizes for one simulation setting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = sorted({r.parameter for r in report.rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for param in params:
        ns = [r.n for r in report.rows if r.parameter == param]
        rm = [r.rmse for r in report.rows if r.parameter == param]
        ax.plot(ns, rm, marker="o", label=param)
    ax.set_xlabel("sample size")
    ax.set_ylabel("RMSE")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title(report.setting)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
