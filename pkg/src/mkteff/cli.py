"""Command-line pipeline: describe, var, efficiency, simulate, all.

Configuration lives in one JSON file; command-line flags override single
values. Every run writes a manifest with the effective configuration and
seeds, sufficient to reproduce its outputs exactly (nothing time-stamped, so
reruns are byte-identical). Exit codes: 0 success, 2 configuration error,
3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, bootstrap_bands
from .efficiency import efficiency_path
from .errors import ConfigError, DataError, MktEffError, NumericalError
from .market_data import (
    AlignedPanel,
    CsvFormat,
    align,
    describe,
    load_price_series,
    log_returns,
)
from .svg import render_line_plot
from .synth import DgpSpec, simulate
from .tv_var import TvVarConfig, export_coefficient_paths, fit_tv_var
from .unit_root import DETREND_CONSTANT, DETREND_TREND, adf_gls_test
from .var_base import fit_var_ols, granger_causality, hansen_lc, select_lag_bic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


@dataclass
class PipelineConfig:
    """Effective settings for one run (config file merged with flag overrides)."""

    inputs: list = field(default_factory=list)  # (path, asset_id) pairs
    csv: CsvFormat = field(default_factory=CsvFormat)
    date_start: date | None = None
    date_end: date | None = None
    p_max: int = 8
    unit_root_max_lag: int | None = None
    unit_root_model: str = DETREND_TREND
    tv_q: int | None = None
    lam: float = 1.0
    lambda_mode: str = "fixed"
    solver: str = "banded-cholesky"
    replications: int = 10_000
    coverage: float = 0.95
    master_seed: int = 0
    n_jobs: int = 1
    event_date: date | None = None
    output_dir: str = "out"
    allow_nonstationary: bool = False
    export_coefficients: bool = False
    dump_replications: bool = False

    def echo(self) -> dict:
        return {
            "inputs": [{"path": p, "asset_id": a} for p, a in self.inputs],
            "csv": {
                "delimiter": self.csv.delimiter,
                "date_column": self.csv.date_column,
                "price_column": self.csv.price_column,
                "date_format": self.csv.date_format,
                "skip_bad_rows": self.csv.skip_bad_rows,
            },
            "date_range": {
                "start": self.date_start.isoformat() if self.date_start else None,
                "end": self.date_end.isoformat() if self.date_end else None,
            },
            "var": {"p_max": self.p_max},
            "unit_root": {"max_lag": self.unit_root_max_lag, "model": self.unit_root_model},
            "tv": {
                "q": self.tv_q,
                "lambda": self.lam,
                "lambda_mode": self.lambda_mode,
                "solver": self.solver,
            },
            "bootstrap": {
                "replications": self.replications,
                "coverage": self.coverage,
                "master_seed": self.master_seed,
                "n_jobs": self.n_jobs,
            },
            "event_date": self.event_date.isoformat() if self.event_date else None,
            "output_dir": self.output_dir,
            "allow_nonstationary": self.allow_nonstationary,
        }


def _parse_date(text: str | None) -> date | None:
    if text in (None, ""):
        return None
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise ConfigError(f"bad date {text!r}: {exc}") from exc


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return doc


def build_config(doc: dict, args: argparse.Namespace) -> PipelineConfig:
    """Merge the JSON document with flag overrides; flags win."""
    cfg = PipelineConfig()
    known = {
        "inputs": None,
        "csv": {"delimiter", "date_column", "price_column", "date_format", "skip_bad_rows"},
        "date_range": {"start", "end"},
        "var": {"p_max"},
        "unit_root": {"max_lag", "model"},
        "tv": {"q", "lambda", "lambda_mode", "solver"},
        "bootstrap": {"replications", "coverage", "master_seed", "n_jobs"},
        "event_date": None,
        "output_dir": None,
        "allow_nonstationary": None,
    }
    unknown = set(doc) - set(known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    for section, keys in known.items():
        if keys is not None and isinstance(doc.get(section), dict):
            extra = set(doc[section]) - keys
            if extra:
                raise ConfigError(
                    f"unknown key(s) in '{section}': {', '.join(sorted(extra))}"
                )
    for item in doc.get("inputs", []):
        try:
            cfg.inputs.append((item["path"], item["asset_id"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError("each input needs 'path' and 'asset_id'") from exc
    c = doc.get("csv", {})
    cfg.csv = CsvFormat(
        delimiter=c.get("delimiter", ","),
        date_column=int(c.get("date_column", 0)),
        price_column=int(c.get("price_column", 1)),
        date_format=c.get("date_format", "iso"),
        skip_bad_rows=bool(c.get("skip_bad_rows", False)),
    )
    dr = doc.get("date_range", {})
    cfg.date_start = _parse_date(dr.get("start"))
    cfg.date_end = _parse_date(dr.get("end"))
    cfg.p_max = int(doc.get("var", {}).get("p_max", cfg.p_max))
    ur = doc.get("unit_root", {})
    if ur.get("max_lag") is not None:
        cfg.unit_root_max_lag = int(ur["max_lag"])
    cfg.unit_root_model = ur.get("model", cfg.unit_root_model)
    tv = doc.get("tv", {})
    if tv.get("q") is not None:
        cfg.tv_q = int(tv["q"])
    cfg.lam = float(tv.get("lambda", cfg.lam))
    cfg.lambda_mode = tv.get("lambda_mode", cfg.lambda_mode)
    cfg.solver = tv.get("solver", cfg.solver)
    b = doc.get("bootstrap", {})
    cfg.replications = int(b.get("replications", cfg.replications))
    cfg.coverage = float(b.get("coverage", cfg.coverage))
    cfg.master_seed = int(b.get("master_seed", cfg.master_seed))
    cfg.n_jobs = int(b.get("n_jobs", cfg.n_jobs))
    cfg.event_date = _parse_date(doc.get("event_date"))
    cfg.output_dir = doc.get("output_dir", cfg.output_dir)
    cfg.allow_nonstationary = bool(doc.get("allow_nonstationary", False))

    # flag overrides
    if getattr(args, "input", None):
        cfg.inputs = []
        for spec in args.input:
            path, sep, asset = spec.rpartition(":")
            if not sep or not path:
                raise ConfigError(f"--input expects PATH:ASSET_ID, got {spec!r}")
            cfg.inputs.append((path, asset))
    for flag, attr in (
        ("output_dir", "output_dir"), ("p_max", "p_max"), ("q", "tv_q"),
        ("lam", "lam"), ("lambda_mode", "lambda_mode"), ("solver", "solver"),
        ("replications", "replications"), ("coverage", "coverage"),
        ("master_seed", "master_seed"), ("n_jobs", "n_jobs"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "event_date", None) is not None:
        cfg.event_date = _parse_date(args.event_date)
    if getattr(args, "date_start", None) is not None:
        cfg.date_start = _parse_date(args.date_start)
    if getattr(args, "date_end", None) is not None:
        cfg.date_end = _parse_date(args.date_end)
    if getattr(args, "allow_nonstationary", False):
        cfg.allow_nonstationary = True
    if getattr(args, "export_coefficients", False):
        cfg.export_coefficients = True
    if getattr(args, "dump_replications", False):
        cfg.dump_replications = True

    if cfg.unit_root_model not in (DETREND_CONSTANT, DETREND_TREND):
        raise ConfigError(f"unknown unit-root model {cfg.unit_root_model!r}")
    if cfg.p_max < 1:
        raise ConfigError("p_max must be at least 1")
    if cfg.replications < 0:
        raise ConfigError("replications must be non-negative")
    if cfg.n_jobs < 1:
        raise ConfigError("n_jobs must be at least 1")
    return cfg


def load_returns_panel(cfg: PipelineConfig) -> AlignedPanel:
    """Load, align, window, and difference the configured inputs."""
    if len(cfg.inputs) < 2:
        raise DataError("panel requires at least 2 assets; configure more inputs")
    series = []
    for path, asset in cfg.inputs:
        try:
            with open(path, "rb") as fh:
                series.append(load_price_series(fh, asset, cfg.csv))
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
    prices = align(series)
    if cfg.date_start or cfg.date_end:
        prices = prices.window(cfg.date_start, cfg.date_end)
    return log_returns(prices)


def _write(path: str, text: str, written: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    written.append(path)


def _write_manifest(cfg: PipelineConfig, command: str, extra: dict, written: list) -> None:
    doc = {
        "tool": "mkteff",
        "version": __version__,
        "command": command,
        "config": cfg.echo(),
    }
    doc.update(extra)
    _write(
        os.path.join(cfg.output_dir, "manifest.json"),
        json.dumps(doc, indent=2, sort_keys=True) + "\n",
        written,
    )


def _stars(p_value: float) -> str:
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.10:
        return "*"
    return ""


def summary_table_text(stats, adf_results) -> str:
    """Per-asset stats and unit-root columns, four printed decimals."""
    header = (
        f"{'asset':<10}{'mean':>10}{'sd':>10}{'min':>10}{'max':>10}"
        f"{'adf_gls':>12}{'lag':>5}{'phi_hat':>10}{'N':>7}"
    )
    lines = [header, "-" * len(header)]
    for i, asset in enumerate(stats.asset_ids):
        r = adf_results[asset]
        lines.append(
            f"{asset:<10}{stats.mean[i]:>10.4f}{stats.sd[i]:>10.4f}"
            f"{stats.minimum[i]:>10.4f}{stats.maximum[i]:>10.4f}"
            f"{r.statistic:>12.4f}{r.chosen_lag:>5d}{r.phi_hat:>10.4f}{stats.n_obs:>7d}"
        )
    return "\n".join(lines) + "\n"


def var_table_text(est, granger_results, lc) -> str:
    """Coefficients with bracketed robust errors, adjusted R2, test rows."""
    n = est.n_assets
    names = ["constant"] + [
        f"{est.asset_ids[j]}[-{l}]" for l in range(1, est.p + 1) for j in range(n)
    ]
    width = max(12, max(len(x) for x in names) + 2)
    cols = "".join(f"{a:>14}" for a in est.asset_ids)
    lines = [f"{'':{width}}{cols}"]
    for row, name in enumerate(names):
        coefs = "".join(f"{est.coefficients[row, i]:>14.4f}" for i in range(n))
        ses = "".join(f"{'[' + format(est.robust_se[i, row], '.4f') + ']':>14}" for i in range(n))
        lines.append(f"{name:<{width}}{coefs}")
        lines.append(f"{'':{width}}{ses}")
    lines.append(f"{'adj_R2':<{width}}" + "".join(f"{v:>14.4f}" for v in est.adj_r2))
    granger_cells = []
    for a in est.asset_ids:
        g = granger_results[a]
        granger_cells.append(f"{format(g.f_statistic, '.4f') + _stars(g.p_value):>14}")
    lines.append(f"{'granger_F':<{width}}" + "".join(granger_cells))
    lc_stars = "***" if lc.rejects_at(0.01) else ("**" if lc.rejects_at(0.05) else ("*" if lc.rejects_at(0.10) else ""))
    lines.append(f"{'Lc':<{width}}{format(lc.lc_statistic, '.4f') + lc_stars:>14}")
    return "\n".join(lines) + "\n"


def _cmd_describe(cfg: PipelineConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    written: list = []
    returns = load_returns_panel(cfg)
    stats = describe(returns)
    adf_results = {
        asset: adf_gls_test(returns.column(asset), cfg.unit_root_max_lag, cfg.unit_root_model)
        for asset in returns.asset_ids
    }
    _write(os.path.join(cfg.output_dir, "summary.txt"), summary_table_text(stats, adf_results), written)
    doc = stats.to_dict()
    doc["unit_root"] = {a: r.to_dict() for a, r in adf_results.items()}
    _write(os.path.join(cfg.output_dir, "summary.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n", written)
    _write(os.path.join(cfg.output_dir, "summary.csv"), stats.to_csv_text(), written)
    _write_manifest(cfg, "describe", {"n_obs": stats.n_obs}, written)
    failing = [a for a, r in adf_results.items() if not r.rejects_at(0.01)]
    if failing:
        msg = f"stationarity gate failed at 1% for: {', '.join(failing)}"
        if cfg.allow_nonstationary:
            print(f"warning: {msg} (continuing)", file=sys.stderr)
        else:
            print(f"error: {msg}", file=sys.stderr)
            return EXIT_DATA
    return EXIT_OK


def _cmd_var(cfg: PipelineConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    written: list = []
    returns = load_returns_panel(cfg)
    p = select_lag_bic(returns, cfg.p_max)
    est = fit_var_ols(returns, p)
    granger_results = {
        a: granger_causality(returns, p, a, estimate=est) for a in returns.asset_ids
    }
    lc = hansen_lc(returns, p, estimate=est)
    _write(
        os.path.join(cfg.output_dir, "var_report.txt"),
        f"selected lag order: {p}\n\n" + var_table_text(est, granger_results, lc),
        written,
    )
    doc = {
        "selected_p": p,
        "intercept": [float(v) for v in est.nu],
        "coefficients": est.coefficients.tolist(),
        "robust_se": est.robust_se.tolist(),
        "adj_r2": est.adj_r2.tolist(),
        "bic": est.bic,
        "granger": {a: g.to_dict() for a, g in granger_results.items()},
        "hansen_lc": lc.to_dict(),
        "n_obs": est.nobs,
    }
    _write(os.path.join(cfg.output_dir, "var_report.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n", written)
    _write_manifest(cfg, "var", {"selected_var_order": p}, written)
    return EXIT_OK


def _cmd_efficiency(cfg: PipelineConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    written: list = []
    try:
        returns = load_returns_panel(cfg)
        q = cfg.tv_q if cfg.tv_q is not None else select_lag_bic(returns, cfg.p_max)
        tv_config = TvVarConfig(
            q=q, lam=cfg.lam, lambda_mode=cfg.lambda_mode, solver=cfg.solver
        )
        fit = fit_tv_var(returns, tv_config)
        path = efficiency_path(fit)
        if cfg.replications > 0:
            bands = bootstrap_bands(
                returns,
                tv_config,
                BootstrapConfig(
                    replications=cfg.replications,
                    coverage=cfg.coverage,
                    master_seed=cfg.master_seed,
                ),
                estimate=fit,
                n_jobs=cfg.n_jobs,
                dump_dir=os.path.join(cfg.output_dir, "replications") if cfg.dump_replications else None,
            )
            path = path.with_bands(bands.lower, bands.upper)
        out_csv = os.path.join(cfg.output_dir, "efficiency.csv")
        path.write_csv(out_csv)
        written.append(out_csv)
        _write(
            os.path.join(cfg.output_dir, "efficiency.svg"),
            render_line_plot(
                path.dates, path.zeta, path.band_low, path.band_high, cfg.event_date
            ),
            written,
        )
        if cfg.export_coefficients:
            coef_csv = os.path.join(cfg.output_dir, "coefficients.csv")
            export_coefficient_paths(fit, coef_csv)
            written.append(coef_csv)
        _write_manifest(
            cfg,
            "efficiency",
            {
                "tv_order": q,
                "lambda_effective": fit.lambda_effective,
                "solver": fit.metadata["solver"],
                "ridge_jitter": fit.metadata["ridge_jitter"],
                "seeds": {"master_seed": cfg.master_seed},
                "bands": cfg.replications > 0,
            },
            written,
        )
    except MktEffError:
        for f in written:  # no partial outputs on failure
            try:
                os.unlink(f)
            except OSError:
                pass
        raise
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    doc = _load_json(args.spec)
    spec = DgpSpec.from_dict(doc)
    out_dir = args.output_dir or "out"
    os.makedirs(out_dir, exist_ok=True)
    panel, truth = simulate(spec)
    written: list = []
    lines = ["date," + ",".join(panel.asset_ids)]
    for i, d in enumerate(panel.dates):
        lines.append(d.isoformat() + "," + ",".join(repr(float(v)) for v in panel.values[i]))
    _write(os.path.join(out_dir, "panel.csv"), "\n".join(lines) + "\n", written)

    q, n = spec.q, spec.n
    coef_names = [f"a{l + 1}_{i}_{j}" for l in range(q) for i in range(n) for j in range(n)]
    lines = ["date,zeta," + ",".join(coef_names)]
    for t, d in enumerate(panel.dates):
        z = truth.zeta[t]
        zcell = repr(float(z)) if np.isfinite(z) else ""
        flat = truth.A_path[t].ravel()
        lines.append(d.isoformat() + f",{zcell}," + ",".join(repr(float(v)) for v in flat))
    _write(os.path.join(out_dir, "truth.csv"), "\n".join(lines) + "\n", written)

    manifest = {
        "tool": "mkteff",
        "version": __version__,
        "command": "simulate",
        "spec": doc,
        "seeds": {"seed": spec.seed},
    }
    _write(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n", written)
    return EXIT_OK


def _add_pipeline_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON configuration file")
    sp.add_argument("--input", action="append", metavar="PATH:ASSET_ID",
                    help="price file and label; repeat per asset (overrides config inputs)")
    sp.add_argument("--output-dir", dest="output_dir")
    sp.add_argument("--date-start", dest="date_start")
    sp.add_argument("--date-end", dest="date_end")
    sp.add_argument("--p-max", dest="p_max", type=int)
    sp.add_argument("--q", dest="q", type=int)
    sp.add_argument("--lambda", dest="lam", type=float, help="smoothing ratio")
    sp.add_argument("--lambda-mode", dest="lambda_mode", choices=["fixed", "two-pass"])
    sp.add_argument("--solver", dest="solver", choices=["banded-cholesky", "dense-reference"])
    sp.add_argument("--replications", dest="replications", type=int)
    sp.add_argument("--coverage", dest="coverage", type=float)
    sp.add_argument("--master-seed", dest="master_seed", type=int)
    sp.add_argument("--n-jobs", dest="n_jobs", type=int)
    sp.add_argument("--event-date", dest="event_date")
    sp.add_argument("--allow-nonstationary", action="store_true")
    sp.add_argument("--export-coefficients", action="store_true")
    sp.add_argument("--dump-replications", action="store_true")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mkteff",
        description="Time-varying joint market efficiency across asset return series",
    )
    parser.add_argument("--version", action="version", version=f"mkteff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("describe", "summary statistics and unit-root gate"),
        ("var", "constant VAR report: order selection, causality, constancy"),
        ("efficiency", "time-varying fit, degree path, bootstrap bands, plot"),
        ("all", "describe + var + efficiency"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_pipeline_flags(sp)
    sim = sub.add_parser("simulate", help="generate a synthetic panel with ground truth")
    sim.add_argument("--spec", required=True, help="JSON DGP specification")
    sim.add_argument("--output-dir", dest="output_dir")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        doc = _load_json(args.config) if args.config else {}
        cfg = build_config(doc, args)
        if args.command == "describe":
            return _cmd_describe(cfg)
        if args.command == "var":
            return _cmd_var(cfg)
        if args.command == "efficiency":
            return _cmd_efficiency(cfg)
        # all
        code = _cmd_describe(cfg)
        if code != EXIT_OK:
            return code
        code = _cmd_var(cfg)
        if code != EXIT_OK:
            return code
        return _cmd_efficiency(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
