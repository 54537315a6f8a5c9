"""Command-line surface: ingest aiming logs, fit the four model families,
classify, compare by BIC, run simulations, and bootstrap standard errors.

Every command writes a JSON report plus delimited tables and rendered
figures into the output directory; failures exit nonzero with a
machine-readable error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, emg, flare, inference, report, simulation
from .data import Dataset, FitError
from .ingest import IngestError, ingest as ingest_file, truncate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flarefit",
        description="Regression with positively skewed errors: EMG and "
                    "flare mixture fitting, clustering, and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, need_input=True):
        if need_input:
            p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--output", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    def add_trunc(p):
        p.add_argument(
            "--truncate-seconds", default=None,
            help="drop observations with y above this threshold; the "
                 "comparison accepts a comma-separated list. Retention uses "
                 "y <= T.",
        )

    p = sub.add_parser("fit", help="fit one model family per user")
    add_io(p)
    add_trunc(p)
    p.add_argument("--model", choices=inference.MODEL_ORDER, default="flare")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)

    p = sub.add_parser("classify",
                       help="flare fit plus hard component labels")
    add_io(p)
    add_trunc(p)
    p.add_argument("--cutoff", type=float, default=0.5,
                   help="label exponential when 1 - posterior >= cutoff")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)

    p = sub.add_parser("compare",
                       help="BIC comparison of all four model families")
    add_io(p)
    add_trunc(p)

    p = sub.add_parser("simulate", help="Monte Carlo recovery study")
    add_io(p, need_input=False)
    p.add_argument("--setting", choices=sorted(simulation.SETTINGS),
                   required=True)
    p.add_argument("--n", default="100,500,1000",
                   help="comma-separated sample sizes")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--compare", action="store_true",
                   help="also fit all four families per replicate")

    p = sub.add_parser("bootstrap", help="bootstrap standard errors")
    add_io(p)
    add_trunc(p)
    p.add_argument("--model", choices=inference.MODEL_ORDER, default="flare")
    p.add_argument("--boot-reps", type=int, default=200)

    p = sub.add_parser("transform",
                       help="apply the difficulty transform and write "
                            "per-user regression tables")
    add_io(p)

    return parser


def _load_datasets(path, seed=0) -> tuple[dict[str, Dataset], dict]:
    """Accept either raw aiming logs (transformed per user) or an already
    prepared table with columns y, x1, x2, ..."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline()
    names = [c.strip().lower() for c in header.split(",")]
    if "movement_time_ms" in names:
        result = ingest_file(path)
        meta = {"skipped_rows": result.skipped,
                "total_rows": result.total_rows}
        return result.datasets, meta
    if "y" in names:
        xcols = [c for c in names if c.startswith("x")]
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            lower = {c.strip().lower(): c for c in reader.fieldnames}
            for row in reader:
                rows.append([float(row[lower["y"]])]
                            + [float(row[lower[c]]) for c in xcols])
        arr = np.asarray(rows)
        X = np.column_stack([np.ones(arr.shape[0]), arr[:, 1:]])
        return {"all": Dataset(X, arr[:, 0])}, {"total_rows": len(rows)}
    raise IngestError(
        f"{path}: expected aiming-record columns or a y/x table"
    )


def _truncations(arg) -> list[float] | None:
    if arg is None:
        return None
    return [float(v) for v in str(arg).split(",") if v.strip()]


def _apply_truncation(data: Dataset, T: float | None):
    if T is None:
        return data, {"retained": data.n, "dropped": 0}
    res = truncate(data, T)
    return res.data, {"threshold": T, "retained": res.retained,
                      "dropped": res.dropped}


def _fit_model(model: str, data: Dataset, args):
    tol = getattr(args, "tol", 1e-8)
    max_iter = getattr(args, "max_iter", 1000)
    if model == "ols":
        return baselines.fit_ols(data)
    if model == "mixreg2":
        return baselines.fit_mixreg2(data, tol=tol, max_iter=max_iter,
                                     seed=args.seed)
    if model == "emg":
        return emg.fit_emg(data, tol=tol, max_iter=min(max_iter, 500),
                           seed=args.seed)
    return flare.fit_flare(data, tol=tol, max_iter=max_iter)


def _cmd_fit(args) -> int:
    outdir = Path(args.output)
    datasets, meta = _load_datasets(args.input, args.seed)
    thresholds = _truncations(args.truncate_seconds)
    T = thresholds[0] if thresholds else None
    for user, data in sorted(datasets.items()):
        data, trunc_meta = _apply_truncation(data, T)
        t0 = time.perf_counter()
        fit = _fit_model(args.model, data, args)
        elapsed = time.perf_counter() - t0
        config = {"command": "fit", "model": args.model, "user": user,
                  "seed": args.seed, "input": str(args.input),
                  "truncation": trunc_meta, **meta}
        udir = outdir / user
        payload = report.fit_summary(args.model, fit, elapsed, config)
        if args.model == "flare":
            labels = flare.classify(fit, 0.5).labels
            report.write_observations(udir / "observations.csv", data,
                                      report.fit_beta(args.model, fit),
                                      posteriors=fit.posteriors,
                                      labels=labels)
            payload["cutoff"] = 0.5
        else:
            labels = None
            report.write_observations(udir / "observations.csv", data,
                                      report.fit_beta(args.model, fit))
        report.write_json(udir / "report.json", payload)
        report.render_fit_figure(udir / "fit_scatter.png", data,
                                 report.fit_beta(args.model, fit), labels)
        if hasattr(fit, "loglik_trace"):
            report.render_trace_figure(udir / "loglik_trace.png",
                                       fit.loglik_trace)
    return 0


def _cmd_classify(args) -> int:
    outdir = Path(args.output)
    datasets, meta = _load_datasets(args.input, args.seed)
    thresholds = _truncations(args.truncate_seconds)
    T = thresholds[0] if thresholds else None
    for user, data in sorted(datasets.items()):
        data, trunc_meta = _apply_truncation(data, T)
        t0 = time.perf_counter()
        fit = flare.fit_flare(data, tol=args.tol, max_iter=args.max_iter)
        elapsed = time.perf_counter() - t0
        labels = flare.classify(fit, args.cutoff)
        udir = outdir / user
        config = {"command": "classify", "user": user, "seed": args.seed,
                  "cutoff": args.cutoff, "input": str(args.input),
                  "truncation": trunc_meta, **meta}
        payload = report.fit_summary("flare", fit, elapsed, config)
        payload["cutoff"] = args.cutoff
        payload["counts"] = {
            "exponential": labels.n_exponential,
            "gaussian": int(data.n - labels.n_exponential),
        }
        report.write_json(udir / "report.json", payload)
        report.write_observations(udir / "observations.csv", data,
                                  fit.params.beta,
                                  posteriors=fit.posteriors,
                                  labels=labels.labels)
        report.render_fit_figure(udir / "fit_scatter.png", data,
                                 fit.params.beta, labels.labels)
        report.render_trace_figure(udir / "loglik_trace.png",
                                   fit.loglik_trace)
    return 0


def _cmd_compare(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    datasets, meta = _load_datasets(args.input, args.seed)
    thresholds = _truncations(args.truncate_seconds) or [None]
    winners = {}
    rows = []
    for user, data in sorted(datasets.items()):
        for T in thresholds:
            sub, trunc_meta = _apply_truncation(data, T)
            t0 = time.perf_counter()
            rep = inference.compare_models(sub, seed=args.seed)
            elapsed = time.perf_counter() - t0
            winners[(user, T)] = rep.winner
            for r in rep.results:
                rows.append({
                    "user": user, "threshold": T, "model": r.model,
                    "loglik": r.loglik, "k": r.k, "n": r.n, "bic": r.bic,
                    "winner": r.model == rep.winner, "error": r.error,
                    "elapsed_seconds": elapsed,
                })
    csv_path = outdir / "comparison.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    report.write_json(outdir / "report.json", {
        "config": {"command": "compare", "seed": args.seed,
                   "input": str(args.input), "thresholds": thresholds,
                   **meta},
        "winners": {f"{u}@T={t}": w for (u, t), w in winners.items()},
    })
    report.render_bic_grid(outdir / "bic_grid.png",
                           sorted(datasets), thresholds, winners)
    return 0


def _cmd_simulate(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    setting = simulation.SETTINGS[args.setting]
    n_list = [int(v) for v in str(args.n).split(",") if v.strip()]
    t0 = time.perf_counter()
    rep = simulation.monte_carlo_study(setting, n_list, B=args.reps,
                                       seed=args.seed, compare=args.compare)
    elapsed = time.perf_counter() - t0
    (outdir / "mc_report.csv").write_text(rep.to_table())
    payload = rep.to_dict()
    payload["config"] = {"command": "simulate", "setting": args.setting,
                         "n": n_list, "reps": args.reps, "seed": args.seed}
    payload["elapsed_seconds"] = elapsed
    report.write_json(outdir / "mc_report.json", payload)
    report.render_mc_figure(outdir / "mc_rmse.png", rep)
    return 0


def _cmd_bootstrap(args) -> int:
    outdir = Path(args.output)
    datasets, meta = _load_datasets(args.input, args.seed)
    thresholds = _truncations(args.truncate_seconds)
    T = thresholds[0] if thresholds else None
    for user, data in sorted(datasets.items()):
        data, trunc_meta = _apply_truncation(data, T)
        t0 = time.perf_counter()
        se = inference.bootstrap_se(data, args.model, B=args.boot_reps,
                                    seed=args.seed)
        fit = _fit_model(args.model, data, args)
        elapsed = time.perf_counter() - t0
        config = {"command": "bootstrap", "model": args.model, "user": user,
                  "seed": args.seed, "boot_reps": args.boot_reps,
                  "input": str(args.input), "truncation": trunc_meta, **meta}
        payload = report.fit_summary(args.model, fit, elapsed, config, se)
        report.write_json(outdir / user / "report.json", payload)
    return 0


def _cmd_transform(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    result = ingest_file(args.input)
    for user, data in sorted(result.datasets.items()):
        path = outdir / f"{user}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["y"] + [f"x{j}" for j in range(1, data.p)])
            for i in range(data.n):
                writer.writerow([f"{data.y[i]:.12g}"]
                                + [f"{v:.12g}" for v in data.X[i, 1:]])
    report.write_json(outdir / "report.json", {
        "config": {"command": "transform", "input": str(args.input)},
        "users": sorted(result.datasets),
        "skipped_rows": result.skipped,
        "total_rows": result.total_rows,
    })
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "classify": _cmd_classify,
    "compare": _cmd_compare,
    "simulate": _cmd_simulate,
    "bootstrap": _cmd_bootstrap,
    "transform": _cmd_transform,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FitError, IngestError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc),
                  "command": args.command}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
