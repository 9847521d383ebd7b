"""Command line interface.

    sessionstats synth   --stocks 50 --days 2520 --seed 7 --output cohort.csv
    sessionstats analyze --input cohort.csv --out results/
    sessionstats report  --report results/report.json --out results/

Exit status is 0 unless a configuration or I/O error occurred; failures of
individual stocks are listed in the report instead.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from dataclasses import fields
from datetime import date
from pathlib import Path

import click
import numpy as np

from .dfa import analyze_stock_dfa
from .errors import AnalysisError
from .market_data import write_price_csv
from .pipeline import (
    ConfigError,
    PipelineConfig,
    _write_dfa_csv,
    _write_returns_csv,
    emit_report,
    load_config,
    load_series,
    run_pipeline,
    tail_records,
)
from .returns import KINDS, compute_returns
from .synth import GeneratorSpec, gen_cohort
from .xcorr import return_pair_analysis, yearly_xcorr

EXIT_CONFIG = 2


class _IsoDate(click.ParamType):
    name = "date"

    def convert(self, value, param, ctx):
        if isinstance(value, date):
            return value
        try:
            return date.fromisoformat(value)
        except ValueError:
            self.fail(f"{value!r} is not an ISO date (YYYY-MM-DD)", param, ctx)


ISO_DATE = _IsoDate()


def _input_options(f):
    f = click.option("--input", "inputs", multiple=True, type=click.Path(dir_okay=False),
                     help="Price CSV (ticker,date,open,close[,split_factor]); repeatable.")(f)
    f = click.option("--from", "start", type=ISO_DATE, default=None, help="First date kept.")(f)
    f = click.option("--to", "end", type=ISO_DATE, default=None, help="Last date kept.")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="key = value file with PipelineConfig fields.")(f)
    f = click.option("--exclude-gaps", is_flag=True, default=None, help="Drop returns spanning skipped rows.")(f)
    return f


def _build_config(**opts) -> PipelineConfig:
    values: dict = {}
    path = opts.pop("config_path", None)
    if path:
        values.update(load_config(path))
    names = {f.name for f in fields(PipelineConfig)}
    for key, val in opts.items():
        if key not in names or val is None or val == ():
            continue
        values[key] = list(val) if isinstance(val, tuple) else val
    return PipelineConfig(**values)


def _handles_config_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ConfigError, OSError, AnalysisError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    return wrapper


def _load(cfg: PipelineConfig):
    cfg.validate()
    return load_series(cfg)


def _emit_lines(records) -> None:
    for rec in records:
        click.echo(json.dumps(rec, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log per-row and per-stock warnings.")
def main(verbose: bool) -> None:
    """Overnight / daytime return statistics."""
    logging.basicConfig(level=logging.INFO if verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_input_options
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write adjusted prices here.")
@click.option("--dump-returns", type=click.Path(file_okay=False), default=None)
@_handles_config_errors
def ingest(output, **opts):
    """Parse, split-adjust and date-filter prices; print a per-ticker summary."""
    cfg = _build_config(**opts)
    series, info = _load(cfg)
    for s in series:
        rec = {"ticker": s.ticker, "bars": len(s), "first": s.bars[0].date.isoformat(),
               "last": s.bars[-1].date.isoformat(), "skipped": info["skipped_rows"].get(s.ticker, 0)}
        if opts.get("dump_returns") and len(s) >= 2:
            _write_returns_csv(compute_returns(s), opts["dump_returns"])
        click.echo(json.dumps(rec, sort_keys=True))
    if output:
        with open(output, "w", newline="", encoding="utf-8") as fh:
            write_price_csv(series, fh)


@main.command()
@click.option("--stocks", type=int, default=50, show_default=True)
@click.option("--days", type=int, default=2520, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--price0", type=float, default=50.0, show_default=True)
@click.option("--vol-daytime", type=float, default=0.015, show_default=True)
@click.option("--vol-overnight", type=float, default=0.008, show_default=True)
@click.option("--rho", "rho_nd", type=float, default=-0.1, show_default=True)
@click.option("--tail-zeta", type=float, default=None, help="Pareto amplitude exponent (heavy tails).")
@click.option("--memory-alpha", type=float, default=None, help="DFA exponent of the volatility amplitude.")
@click.option("--memory-strength", type=float, default=0.3, show_default=True)
@click.option("--memory-white", type=float, default=0.0, show_default=True)
@click.option("--start", type=ISO_DATE, default="1988-01-04", show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), required=True)
@_handles_config_errors
def synth(stocks, days, seed, output, **params):
    """Write a synthetic cohort in the price CSV format, plus a JSON spec sidecar."""
    start = params.pop("start")
    params = {("price_0" if k == "price0" else k): v for k, v in params.items()}
    cohort = gen_cohort(stocks, days, seed, start=start, **params)
    with open(output, "w", newline="", encoding="utf-8") as fh:
        write_price_csv(cohort, fh)
    spec = GeneratorSpec("ohlc_stock", seed, {"n_stocks": stocks, "n_days": days, "start": start.isoformat(), **params})
    Path(f"{output}.spec.json").write_text(spec.to_json() + "\n", encoding="utf-8")
    click.echo(f"wrote {stocks} stocks x {days} days to {output}")


@main.command()
@_input_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Report directory.")
@click.option("--tail-fraction", type=float, default=None)
@click.option("--significance", type=float, default=None)
@click.option("--ks-coefficient", type=float, default=None)
@click.option("--scan-xmin", is_flag=True, default=None)
@click.option("--dfa-order", type=int, default=None)
@click.option("--dfa-points", type=int, default=None)
@click.option("--max-lag", type=int, default=None)
@click.option("--subsets", type=int, default=None)
@click.option("--bins", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--dump-returns", type=click.Path(file_okay=False), default=None)
@click.option("--dump-dfa", type=click.Path(file_okay=False), default=None)
@click.option("--jobs", type=int, default=None)
@_handles_config_errors
def analyze(**opts):
    """Run the full pipeline and write report.json plus CSV views."""
    cfg = _build_config(**opts)
    if not cfg.out_dir:
        raise ConfigError("no output directory (--out or out_dir in config)")
    report = run_pipeline(cfg)
    emit_report(report, cfg.out_dir)
    click.echo(f"{report.metadata['n_success']} stocks analysed, {report.metadata['n_errors']} failed; "
               f"report in {cfg.out_dir}")


@main.command()
@_input_options
@click.option("--tail-fraction", type=float, default=None)
@click.option("--significance", type=float, default=None)
@click.option("--ks-coefficient", type=float, default=None)
@click.option("--scan-xmin", is_flag=True, default=None)
@_handles_config_errors
def tails(**opts):
    """Tail fits (three families x three volatilities) as JSON lines."""
    cfg = _build_config(**opts)
    series, _ = _load(cfg)
    for s in series:
        try:
            r = compute_returns(s)
            if cfg.exclude_gaps:
                r = r.without_gaps()
            recs, scanned, _ = tail_records(r, cfg)
        except AnalysisError as exc:
            _emit_lines([{"ticker": s.ticker, "error": str(exc)}])
            continue
        _emit_lines(recs + scanned)


@main.command()
@_input_options
@click.option("--dfa-order", type=int, default=None)
@click.option("--dfa-points", type=int, default=None)
@click.option("--dump-dfa", type=click.Path(file_okay=False), default=None)
@_handles_config_errors
def dfa(**opts):
    """DFA exponents per stock and series as JSON lines."""
    cfg = _build_config(**opts)
    series, _ = _load(cfg)
    for s in series:
        try:
            r = compute_returns(s)
            if cfg.exclude_gaps:
                r = r.without_gaps()
            res = analyze_stock_dfa(r, cfg.dfa_order, cfg.dfa_points)
        except AnalysisError as exc:
            _emit_lines([{"ticker": s.ticker, "error": str(exc)}])
            continue
        for kind in KINDS:
            for group, prefix in ((res.returns, "return"), (res.volatility, "volatility")):
                if group.get(kind) is not None:
                    _emit_lines({**rec, "series": prefix} for rec in group[kind].to_records(s.ticker, kind))
        _emit_lines({"ticker": s.ticker, "series": k, "error": v} for k, v in res.errors.items())
        if cfg.dump_dfa:
            for label, curve in res.curves.items():
                _write_dfa_csv(s.ticker, label, curve, cfg.dump_dfa)


@main.command()
@_input_options
@click.option("--max-lag", type=int, default=None)
@_handles_config_errors
def xcorr(**opts):
    """Lagged cross-correlations of the three return pairs, plus yearly coefficients."""
    cfg = _build_config(**opts)
    series, _ = _load(cfg)
    for s in series:
        try:
            r = compute_returns(s)
            pairs = return_pair_analysis(r, cfg.max_lag, exclude_gaps=cfg.exclude_gaps)
        except AnalysisError as exc:
            _emit_lines([{"ticker": s.ticker, "error": str(exc)}])
            continue
        for p in pairs.values():
            rec = {"ticker": s.ticker, **p.to_record()}
            try:
                rec["yearly"] = yearly_xcorr(r, p.pair, cfg.year_floor).to_record()
            except AnalysisError as exc:
                rec["yearly_error"] = str(exc)
            _emit_lines([rec])


@main.command()
@click.option("--report", "report_path", type=click.Path(dir_okay=False, exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_handles_config_errors
def report(report_path, out_dir):
    """Re-emit report.json and the CSV views from an existing report."""
    data = json.loads(Path(report_path).read_text(encoding="utf-8"))
    for key in ("metadata", "aggregates", "stocks", "errors"):
        if key not in data:
            raise ConfigError(f"{report_path} is not a report (missing {key!r})")
    written = emit_report(data, out_dir)
    click.echo("\n".join(str(p) for p in written))


if __name__ == "__main__":
    main()
