"""Batch command-line front end.

One subcommand per workflow: ingest, simulate, estimate, frontier, backtest,
universal, risk, fgp, forecast, report. Every command writes deterministic
CSV/JSON artifacts plus a run manifest (inputs, seed, config hash, versions,
timings) into the output directory and never mutates its inputs. Plot
emission is data-only; rendering is left to external tools.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .backtester import BacktestConfig, compare_models, max_drawdown, run_backtest
from .forecasting import (
    _arma_innovations,
    evaluate_forecasts,
    fit_arma_garch,
    fit_factor_regression,
)
from .market_data import align, compute_returns, load_factors, load_prices, summary_stats
from .moments import (
    constant_correlation_moments,
    fama_french_moments,
    sample_moments,
    single_index_fit,
    single_index_moments,
)
from .optimizer import efficient_frontier
from .risk import (
    bootstrap_ci,
    fit_student_t,
    var_es_cornish_fisher,
    var_es_gaussian,
    var_es_historical,
    var_es_parametric_t,
)
from .spt import dwp_schedule, market_weights_from_prices, optimize_p
from .synthetic import make_demo_market
from .universal import cover_schedule, crp_schedule, scrp_schedule, wacrp_schedule, wealth_of_schedule

ALL_MODELS = ("MM", "CCM", "SIM", "MFM")


class ConfigError(ValueError):
    """Invalid run configuration; message lists every problem found."""


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("portkit") / "fixtures" / name))


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config_file(args: argparse.Namespace) -> None:
    """Config-file values fill in any flag left at its parser default."""
    if not getattr(args, "config", None):
        return
    defaults = args._defaults
    file_vals = _read_config_file(args.config)
    problems = []
    for key, raw in file_vals.items():
        if not hasattr(args, key) or key.startswith("_"):
            problems.append(f"unknown config key {key!r}")
            continue
        if getattr(args, key) != defaults.get(key):
            continue  # flag explicitly set; flags override the file
        default = defaults.get(key)
        try:
            if isinstance(default, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = raw
        except ValueError:
            problems.append(f"config key {key!r}: cannot parse {raw!r}")
            continue
        setattr(args, key, value)
    if problems:
        raise ConfigError("; ".join(problems))


def _validate_inputs(args) -> None:
    problems = []
    for attr in ("prices", "factors"):
        path = getattr(args, attr, None)
        if path and not Path(path).exists():
            problems.append(f"--{attr} file does not exist: {path}")
    if getattr(args, "alpha", None) is not None and not 0 < args.alpha <= 0.5:
        problems.append(f"--alpha must be in (0, 0.5], got {args.alpha}")
    if getattr(args, "bootstrap_b", None) is not None and args.bootstrap_b < 100:
        problems.append(f"--bootstrap-b must be >= 100, got {args.bootstrap_b}")
    if getattr(args, "window", None) is not None and args.window < 3:
        problems.append(f"--window must be >= 3, got {args.window}")
    models = getattr(args, "models", None)
    if models:
        bad = [m for m in _model_list(models) if m not in ALL_MODELS]
        if bad:
            problems.append(f"unknown models {bad}; choose from {list(ALL_MODELS)}")
    if problems:
        raise ConfigError("; ".join(problems))


def _model_list(spec: str) -> list[str]:
    if spec == "all":
        return list(ALL_MODELS)
    return [m.strip().upper() for m in spec.split(",") if m.strip()]


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _manifest(outdir: Path, command: str, args, started: float, outputs: list[str]) -> None:
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "command") and not k.startswith("_")
    }
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()
    ).hexdigest()
    _write_json(
        outdir / f"manifest_{command}.json",
        {
            "command": command,
            "config": {k: str(v) for k, v in config.items()},
            "config_sha256": digest,
            "version": __version__,
            "outputs": sorted(outputs),
            "elapsed_seconds": round(time.time() - started, 3),
        },
    )


def _load_market(args):
    prices = load_prices(args.prices)
    returns = compute_returns(prices, kind="simple")
    factors = None
    if getattr(args, "factors", None):
        factors = load_factors(args.factors)
        returns, factors = align(returns, factors)
    return prices, returns, factors


def cmd_ingest(args, outdir: Path) -> list[str]:
    prices, returns, factors = _load_market(args)
    stats = summary_stats(returns)
    table = pd.DataFrame(
        {
            "asset": stats["assets"],
            "mean": stats["mean"],
            "sd": stats["sd"],
            "skewness": stats["skewness"],
            "excess_kurtosis": stats["excess_kurtosis"],
        }
    )
    table.to_csv(outdir / "summary_stats.csv", index=False)
    corr = pd.DataFrame(stats["correlation"], index=stats["assets"], columns=stats["assets"])
    corr.to_csv(outdir / "correlation.csv")
    _write_json(
        outdir / "summary_stats.json",
        {
            "dropped_rows": prices.dropped_rows,
            "n_assets": prices.n_assets,
            "n_periods": prices.n_periods,
            "per_asset": table.to_dict(orient="records"),
        },
    )
    rf = pd.DataFrame(returns.returns, columns=list(returns.assets))
    rf.insert(0, "date", list(returns.dates))
    rf.to_csv(outdir / "returns.csv", index=False)
    return ["summary_stats.csv", "summary_stats.json", "correlation.csv", "returns.csv"]


def cmd_simulate(args, outdir: Path) -> list[str]:
    prices, factors = make_demo_market(
        n_assets=args.assets, steps=args.steps, seed=args.seed
    )
    prices.to_csv(outdir / "prices.csv")
    fdf = pd.DataFrame(factors.values, columns=list(factors.columns))
    fdf.insert(0, "date", list(factors.dates))
    fdf.to_csv(outdir / "factors.csv", index=False)
    return ["prices.csv", "factors.csv"]


def _estimate_all(returns, factors, models):
    out = {}
    for tag in models:
        if tag == "MM":
            out[tag] = sample_moments(returns)
        elif tag == "CCM":
            out[tag] = constant_correlation_moments(returns)
        elif tag == "SIM":
            market = factors.column("market_return")
            fit = single_index_fit(returns, market)
            out[tag] = single_index_moments(fit, float(market.mean()))
        else:
            _, out[tag] = fama_french_moments(returns, factors)
    return out


def cmd_estimate(args, outdir: Path) -> list[str]:
    _, returns, factors = _load_market(args)
    models = _model_list(args.models)
    if factors is None and any(m in ("SIM", "MFM") for m in models):
        raise ConfigError("SIM/MFM require --factors")
    outputs = []
    for tag, est in _estimate_all(returns, factors, models).items():
        name = f"moments_{tag}.json"
        _write_json(outdir / name, est.to_dict() | {"assets": list(returns.assets)})
        outputs.append(name)
    return outputs


def cmd_frontier(args, outdir: Path) -> list[str]:
    _, returns, factors = _load_market(args)
    est = _estimate_all(returns, factors, [args.model])[args.model]
    lo, hi = est.mu.min(), est.mu.max()
    targets = np.linspace(lo, hi, args.points)
    points = efficient_frontier(est, targets)
    rows = [
        {"target_mu": pt.target_mu, "sigma_p": pt.sigma_p}
        | {f"w_{a}": w for a, w in zip(returns.assets, pt.weights)}
        for pt in points
    ]
    pd.DataFrame(rows).to_csv(outdir / f"frontier_{args.model}.csv", index=False)
    return [f"frontier_{args.model}.csv"]


def cmd_backtest(args, outdir: Path) -> list[str]:
    _, returns, factors = _load_market(args)
    models = _model_list(args.models)
    outputs = []
    for tag in models:
        cfg = BacktestConfig(model_tag=tag, estimation_window=args.window)
        result = run_backtest(returns, factors, cfg)
        df = pd.DataFrame(result.weights, columns=[f"w_{a}" for a in returns.assets])
        df.insert(0, "date", list(returns.dates))
        df["wealth"] = result.wealth[1:]
        name = f"backtest_{tag}.csv"
        df.to_csv(outdir / name, index=False)
        outputs.append(name)
    return outputs


def cmd_universal(args, outdir: Path) -> list[str]:
    _, returns, _ = _load_market(args)
    t, n = returns.returns.shape
    schedules = {
        "CRP": crp_schedule(t, n),
        "CUP": cover_schedule(returns, samples=args.samples, seed=args.seed),
        "SCRP": scrp_schedule(returns),
        "WACRP": wacrp_schedule(returns),
    }
    outputs = []
    for name, schedule in schedules.items():
        wealth = wealth_of_schedule(schedule, returns)
        df = pd.DataFrame(schedule, columns=[f"w_{a}" for a in returns.assets])
        df.insert(0, "date", list(returns.dates))
        df["wealth"] = wealth[1:]
        fname = f"universal_{name}.csv"
        df.to_csv(outdir / fname, index=False)
        outputs.append(fname)
    return outputs


def cmd_risk(args, outdir: Path) -> list[str]:
    _, returns, _ = _load_market(args)
    port = returns.returns.mean(axis=1)  # equal-weight portfolio returns
    s, alpha = args.position, args.alpha
    tfit = fit_student_t(port)
    estimates = {
        "parametric_t": var_es_parametric_t(tfit, s, alpha),
        "historical": var_es_historical(port, s, alpha),
        "gaussian": var_es_gaussian(port, s, alpha),
        "cornish_fisher": var_es_cornish_fisher(port, s, alpha),
    }
    report = {
        "alpha": alpha,
        "position": s,
        "seed": args.seed,
        "n_replicates": args.bootstrap_b,
        "t_fit": {"nu": tfit.nu, "location": tfit.location, "scale": tfit.scale},
        "methods": {},
    }
    rows = []
    for name, est in estimates.items():
        entry = {"var": est.var, "es": est.es}
        if name in ("historical", "gaussian", "cornish_fisher"):
            ci = bootstrap_ci(
                port, s, alpha, method=name, n_replicates=args.bootstrap_b, seed=args.seed
            )
            entry |= {
                "var_ci": [ci.var_lower, ci.var_upper],
                "es_ci": [ci.es_lower, ci.es_upper],
            }
        report["methods"][name] = entry
        rows.append({"method": name} | {k: v for k, v in entry.items() if not isinstance(v, list)})
    _write_json(outdir / "risk_report.json", report)
    pd.DataFrame(rows).to_csv(outdir / "risk_table.csv", index=False)
    return ["risk_report.json", "risk_table.csv"]


def cmd_fgp(args, outdir: Path) -> list[str]:
    prices, returns, _ = _load_market(args)
    mw = market_weights_from_prices(prices)
    result = optimize_p(mw, returns, objective=args.objective, grid_step=args.grid_step)
    pd.DataFrame(result["grid"]).to_csv(outdir / "dwp_grid.csv", index=False)
    _write_json(
        outdir / "dwp_best.json",
        {"p": result["p"], "objective": args.objective, "value": result["value"]},
    )
    return ["dwp_grid.csv", "dwp_best.json"]


def cmd_forecast(args, outdir: Path) -> list[str]:
    _, returns, factors = _load_market(args)
    if factors is None:
        raise ConfigError("forecast requires --factors")
    cfg = BacktestConfig(model_tag=args.model, estimation_window=args.window)
    result = run_backtest(returns, factors, cfg)
    y = np.log1p(result.portfolio_returns)
    split = int(round(len(y) * args.train_frac))
    if split < 10 or len(y) - split < 2:
        raise ConfigError("train/test split leaves too few observations")
    def _varies(name: str) -> bool:
        col = factors.column(name)[:split]
        return col.std() > 1e-12 * max(1.0, float(np.abs(col).max()))

    candidates = [
        c for c in ("volume", "market_return", "risk_free")
        if c in factors.columns and _varies(c)
    ]
    if not candidates:
        raise ConfigError("no usable (non-constant) factor candidates in --factors")
    train_f = type(factors)(
        dates=factors.dates[:split], columns=factors.columns, values=factors.values[:split]
    )
    ffit = fit_factor_regression(y[:split], train_f, candidates, args.selection_alpha)
    gfit = fit_arma_garch(ffit.residuals, p=args.arma_p, q=args.arma_q)
    # out-of-sample: factor prediction plus ARMA mean filtered through the test set
    col = {name: factors.column(name) for name in ffit.retained}
    factor_pred = np.array(
        [
            ffit.intercept + sum(ffit.coefficients[n] * col[n][k] for n in ffit.retained)
            for k in range(split, len(y))
        ]
    )
    resid_full = y - np.array(
        [
            ffit.intercept + sum(ffit.coefficients[n] * col[n][k] for n in ffit.retained)
            for k in range(len(y))
        ]
    )
    innov = _arma_innovations(resid_full, gfit.const, gfit.ar, gfit.ma, resid_full[:split].mean())
    resid_mean = resid_full - innov  # one-step ARMA mean at each date
    predicted = factor_pred + resid_mean[split:]
    actual = y[split:]
    metrics = evaluate_forecasts(actual, predicted)
    df = pd.DataFrame(
        {"date": list(returns.dates[split:]), "actual": actual, "predicted": predicted}
    )
    df.to_csv(outdir / "forecast_vs_actual.csv", index=False)
    _write_json(
        outdir / "forecast_fit.json",
        {
            "model": args.model,
            "factor_model": ffit.to_dict(),
            "residual_model": gfit.to_dict(),
            "metrics": metrics,
        },
    )
    return ["forecast_vs_actual.csv", "forecast_fit.json"]


def cmd_report(args, outdir: Path) -> list[str]:
    rows = []
    for tag in ALL_MODELS:
        path = outdir / f"backtest_{tag}.csv"
        if not path.exists():
            continue
        df = pd.read_csv(path)
        wealth = np.concatenate([[1.0], df["wealth"].to_numpy()])
        pr = wealth[1:] / wealth[:-1] - 1.0
        sd = pr.std(ddof=1)
        rows.append(
            {
                "model_tag": tag,
                "final_wealth": float(wealth[-1]),
                "annualized_sharpe": float(np.sqrt(252) * pr.mean() / sd) if sd > 0 else float("nan"),
                "max_drawdown": max_drawdown(wealth),
            }
        )
    if not rows:
        raise ConfigError(f"no backtest_<model>.csv artifacts found in {outdir}")
    pd.DataFrame(rows).to_csv(outdir / "comparison.csv", index=False)
    _write_json(outdir / "comparison.json", rows)
    return ["comparison.csv", "comparison.json"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **extra_flags):
        p = sub.add_parser(name)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="key=value config file; flags override it")
        for flag, kwargs in extra_flags.items():
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=func)
        p.set_defaults(_defaults={a.dest: a.default for a in p._actions})
        return p

    prices = {"--prices": {"required": True, "help": "price CSV path"}}
    factors = {"--factors": {"help": "factor CSV path"}}
    add("ingest", cmd_ingest, **prices, **factors)
    add(
        "simulate",
        cmd_simulate,
        **{
            "--seed": {"type": int, "default": 20240613},
            "--assets": {"type": int, "default": 8},
            "--steps": {"type": int, "default": 600},
        },
    )
    add(
        "estimate",
        cmd_estimate,
        **prices,
        **factors,
        **{"--models": {"default": "all"}},
    )
    add(
        "frontier",
        cmd_frontier,
        **prices,
        **factors,
        **{"--model": {"default": "MM", "choices": ALL_MODELS},
           "--points": {"type": int, "default": 50}},
    )
    add(
        "backtest",
        cmd_backtest,
        **prices,
        **factors,
        **{"--models": {"default": "all"}, "--window": {"type": int, "default": 250}},
    )
    add(
        "universal",
        cmd_universal,
        **prices,
        **{"--samples": {"type": int, "default": 10000},
           "--seed": {"type": int, "default": 0}},
    )
    add(
        "risk",
        cmd_risk,
        **prices,
        **{
            "--alpha": {"type": float, "default": 0.05},
            "--position": {"type": float, "default": 1.0},
            "--bootstrap-b": {"type": int, "default": 500},
            "--seed": {"type": int, "default": 0},
        },
    )
    add(
        "fgp",
        cmd_fgp,
        **prices,
        **{
            "--grid-step": {"type": float, "default": 0.05},
            "--objective": {"default": "sharpe", "choices": ("sharpe", "excess_return")},
        },
    )
    add(
        "forecast",
        cmd_forecast,
        **prices,
        **factors,
        **{
            "--model": {"default": "MM", "choices": ALL_MODELS},
            "--window": {"type": int, "default": 250},
            "--arma-p": {"type": int, "default": 1},
            "--arma-q": {"type": int, "default": 1},
            "--train-frac": {"type": float, "default": 0.875},
            "--selection-alpha": {"type": float, "default": 0.05},
        },
    )
    add("report", cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        _apply_config_file(args)
        _validate_inputs(args)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args, outdir)
        _manifest(outdir, args.command, args, started, outputs)
    except Exception as exc:  # structured one-line error, nonzero exit
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps({"command": args.command, "outputs": outputs, "out": str(outdir)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
