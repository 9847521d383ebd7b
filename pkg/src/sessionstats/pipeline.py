"""Cohort pipeline: per-stock analyses, cohort aggregates and report files."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dfa import analyze_stock_dfa, MIN_SERIES
from .errors import AnalysisError, DuplicateRowError, InsufficientDataError
from .market_data import PriceSeries, apply_split_adjustment, filter_date_range, read_price_csv
from .returns import KINDS, SessionReturns, compute_returns
from .synth import PRNG_NAME
from .tails import FAMILIES, compare_families, scan_xmin, select_tail
from .xcorr import (
    PAIRS,
    YEAR_FLOOR,
    bin_tendency,
    cohort_alpha_xcorr,
    pair_name,
    return_pair_analysis,
    yearly_xcorr,
)

log = logging.getLogger(__name__)


class ConfigError(AnalysisError):
    """Invalid configuration or unusable input set; aborts the run."""


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    start: date | None = None
    end: date | None = None
    tail_fraction: float = 0.10
    significance: float = 0.01
    ks_coefficient: float | None = None
    dfa_order: int = 1
    dfa_points: int = 30
    max_lag: int = 20
    subsets: int = 10
    bins: int = 8
    seed: int = 0
    out_dir: str | None = None
    exclude_gaps: bool = False
    scan_xmin: bool = False
    dump_returns: str | None = None
    dump_dfa: str | None = None
    jobs: int = 1
    alpha_bin_width: float = 0.02
    xcorr_bin_width: float = 0.05
    year_floor: int = YEAR_FLOOR

    def validate(self) -> None:
        if not self.inputs:
            raise ConfigError("no input files given")
        missing = [p for p in self.inputs if not Path(p).is_file()]
        if missing:
            raise ConfigError(f"input file(s) not found: {', '.join(missing)}")
        if self.start and self.end and self.start > self.end:
            raise ConfigError(f"--from {self.start} is after --to {self.end}")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError("tail_fraction must lie in (0, 1]")
        if self.ks_coefficient is None and self.significance != 0.01:
            raise ConfigError("significance other than 0.01 needs ks_coefficient")
        if not 1 <= self.dfa_order <= 4:
            raise ConfigError("dfa_order must be 1..4")
        if self.dfa_points < 8:
            raise ConfigError("dfa_points must be at least 8")
        if self.max_lag < 1 or self.subsets < 1 or self.bins < 1 or self.jobs < 1:
            raise ConfigError("max_lag, subsets, bins and jobs must be positive")
        if self.alpha_bin_width <= 0 or self.xcorr_bin_width <= 0:
            raise ConfigError("histogram bin widths must be positive")

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("start", "end"):
            d[k] = d[k].isoformat() if d[k] else None
        return d


def _coerce(name: str, raw: str, typ: Any):
    raw = raw.strip()
    if name == "inputs":
        return [p.strip() for p in raw.split(",") if p.strip()]
    if name in ("start", "end"):
        return date.fromisoformat(raw) if raw else None
    if raw.lower() in ("", "none", "null"):
        return None
    typ = str(typ)
    if "bool" in typ:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {raw!r}")
    if "int" in typ:
        return int(raw)
    if "float" in typ:
        return float(raw)
    return raw


def load_config(path: str | Path) -> dict:
    """Read a ``key = value`` file (``#`` comments) into PipelineConfig fields.

    ``inputs`` takes a comma-separated list of paths; ``start``/``end`` take
    ISO dates.
    """
    known = {f.name: f.type for f in fields(PipelineConfig)}
    out: dict[str, Any] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, raw, known[key])
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: {exc}") from exc
    return out


# ---------------------------------------------------------------- per stock


def additivity_checks(r: SessionReturns) -> dict:
    """Max |R_T - (R_N + R_D)| and relative error of cov(T,N) = var(N) + cov(N,D)."""
    t, n, d = r.r_total, r.r_overnight, r.r_daytime
    max_abs = float(np.max(np.abs(t - (n + d)))) if len(r) else 0.0
    if len(r) < 2:
        return {"additivity_max_abs": max_abs, "covariance_rel_err": 0.0}

    def cov(a, b):
        return float(np.mean((a - a.mean()) * (b - b.mean())))

    lhs = cov(t, n)
    rhs = cov(n, n) + cov(n, d)
    scale = max(abs(lhs), abs(rhs), cov(n, n), cov(d, d), cov(t, t))
    rel = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return {"additivity_max_abs": max_abs, "covariance_rel_err": rel}


def _write_returns_csv(r: SessionReturns, directory: str) -> None:
    Path(directory).mkdir(parents=True, exist_ok=True)
    with open(Path(directory) / f"{r.ticker}_returns.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "r_total", "r_overnight", "r_daytime"])
        for i, day in enumerate(r.dates):
            w.writerow([day.isoformat(), repr(float(r.r_total[i])), repr(float(r.r_overnight[i])),
                        repr(float(r.r_daytime[i]))])


def _write_dfa_csv(ticker: str, label: str, curve, directory: str) -> None:
    Path(directory).mkdir(parents=True, exist_ok=True)
    with open(Path(directory) / f"{ticker}_{label}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scale", "F"])
        for s, f in zip(curve.scales, curve.fluctuations):
            w.writerow([int(s), repr(float(f))])


def tail_records(r: SessionReturns, cfg: PipelineConfig) -> tuple[list[dict], list[dict], list[str]]:
    records, scanned, problems = [], [], []
    for kind in KINDS:
        vol = np.abs(r.get(kind))
        try:
            tail = select_tail(vol, q=cfg.tail_fraction, kind=kind)
        except AnalysisError as exc:
            problems.append(f"tail {kind}: {exc}")
            records.extend(
                {"ticker": r.ticker, "kind": kind, "family": fam, "accepted": False, "error": str(exc)}
                for fam in FAMILIES
            )
            continue
        cmp = compare_families(tail, cfg.significance, cfg.ks_coefficient)
        best = cmp.best
        for fam in FAMILIES:
            fit = cmp.fits[fam]
            if fit is None:
                problems.append(f"tail {kind} {fam}: {cmp.errors[fam]}")
                records.append({"ticker": r.ticker, "kind": kind, "family": fam, "x_min": tail.x_min,
                                "n_tail": tail.n, "accepted": False, "error": cmp.errors[fam]})
            else:
                records.append({**fit.to_record(r.ticker, kind), "best": fam == best})
        if cfg.scan_xmin:
            try:
                stail, _ = scan_xmin(vol, kind=kind)
                scmp = compare_families(stail, cfg.significance, cfg.ks_coefficient)
                for fam in FAMILIES:
                    fit = scmp.fits[fam]
                    if fit is not None:
                        scanned.append({**fit.to_record(r.ticker, kind), "x_min_mode": "scan"})
            except AnalysisError as exc:
                problems.append(f"scan-xmin {kind}: {exc}")
    return records, scanned, problems


def analyze_series(series: PriceSeries, cfg: PipelineConfig) -> dict:
    """Full per-stock analysis of an adjusted, filtered series."""
    if len(series) < MIN_SERIES + 1:
        raise InsufficientDataError(f"{series.ticker}: {len(series)} bars, need at least {MIN_SERIES + 1}")
    r = compute_returns(series)
    if cfg.dump_returns:
        _write_returns_csv(r, cfg.dump_returns)
    checks = additivity_checks(r)
    if cfg.exclude_gaps:
        r = r.without_gaps()
        if len(r) < MIN_SERIES:
            raise InsufficientDataError(f"{series.ticker}: {len(r)} returns left after excluding gaps")

    tails, scanned, problems = tail_records(r, cfg)

    stock_dfa = analyze_stock_dfa(r, cfg.dfa_order, cfg.dfa_points)
    dfa_records = []
    for kind in KINDS:
        for group, prefix in ((stock_dfa.returns, "return"), (stock_dfa.volatility, "volatility")):
            ex = group.get(kind)
            if ex is not None:
                dfa_records.extend({**rec, "series": prefix} for rec in ex.to_records(r.ticker, kind))
    problems.extend(f"dfa {k}: {v}" for k, v in stock_dfa.errors.items())
    if cfg.dump_dfa:
        for label, curve in stock_dfa.curves.items():
            _write_dfa_csv(r.ticker, label, curve, cfg.dump_dfa)

    pairs = return_pair_analysis(r, cfg.max_lag, exclude_gaps=False)
    yearly = []
    for pair in PAIRS:
        try:
            yearly.append(yearly_xcorr(r, pair, cfg.year_floor).to_record())
        except AnalysisError as exc:
            problems.append(f"yearly {pair_name(pair)}: {exc}")

    return {
        "ticker": series.ticker,
        "n_bars": len(series),
        "n_returns": len(r),
        "n_gap_returns": int(np.sum(r.gap_flags)),
        "first_date": series.bars[0].date.isoformat(),
        "last_date": series.bars[-1].date.isoformat(),
        "std": {k: float(np.std(r.get(k))) for k in KINDS},
        "checks": checks,
        "tails": tails,
        "tails_scan": scanned,
        "dfa": dfa_records,
        "xcorr": [p.to_record() for p in pairs.values()],
        "yearly": yearly,
        "problems": problems,
    }


def _analyze_one(args: tuple[PriceSeries, PipelineConfig]) -> tuple[dict | None, dict | None]:
    series, cfg = args
    try:
        return analyze_series(series, cfg), None
    except AnalysisError as exc:
        return None, {"ticker": series.ticker, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------- aggregates


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    mean: float
    std: float
    n: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_record(self) -> dict:
        return {"edges": self.edges.tolist(), "density": self.density.tolist(),
                "centers": self.centers.tolist(), "n": self.n,
                "gaussian": {"mean": self.mean, "std": self.std}}


def histogram_pdf(values, bin_width: float) -> Histogram:
    """Equal-width histogram starting at min(values), normalised to unit area.

    Gaussian overlay parameters are the sample mean and sample (n-1) std.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("histogram of empty sample")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    lo, hi = float(v.min()), float(v.max())
    nbins = max(1, math.ceil((hi - lo) / bin_width))
    edges = lo + bin_width * np.arange(nbins + 1)
    if edges[-1] < hi:  # floating point shortfall
        edges = np.append(edges, edges[-1] + bin_width)
    counts, _ = np.histogram(v, bins=edges)
    density = counts / (v.size * bin_width)
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Histogram(edges, density, float(v.mean()), std, int(v.size))


def good_fit_table(tail_records: list[dict]) -> dict:
    """Accepted-fit counts per (family, kind) plus overlaps with the power law."""
    counts = {fam: {k: 0 for k in KINDS} for fam in FAMILIES}
    overlap = {f"{fam}&power_law": {k: 0 for k in KINDS} for fam in ("exponential", "power_law_cutoff")}
    by_stock: dict[tuple[str, str], dict[str, bool]] = {}
    for rec in tail_records:
        by_stock.setdefault((rec["ticker"], rec["kind"]), {})[rec["family"]] = bool(rec.get("accepted"))
    stocks = {t for t, _ in by_stock}
    for (_, kind), acc in by_stock.items():
        for fam in FAMILIES:
            counts[fam][kind] += acc.get(fam, False)
        for fam in ("exponential", "power_law_cutoff"):
            overlap[f"{fam}&power_law"][kind] += acc.get(fam, False) and acc.get("power_law", False)
    return {"counts": counts, "overlap": overlap, "n_stocks": len(stocks)}


def _dfa_vectors(stocks: list[dict]) -> dict[str, dict[str, dict[str, float]]]:
    # measure -> kind -> ticker -> alpha
    out: dict[str, dict[str, dict[str, float]]] = {m: {k: {} for k in KINDS} for m in ("return", "vol_short", "vol_long")}
    for s in stocks:
        for rec in s["dfa"]:
            if rec["series"] == "return" and rec["regime"] == "single":
                out["return"][rec["kind"]][s["ticker"]] = rec["alpha"]
            elif rec["series"] == "volatility" and rec["regime"] in ("short", "long"):
                out[f"vol_{rec['regime']}"][rec["kind"]][s["ticker"]] = rec["alpha"]
    return out


def aggregate(stocks: list[dict], cfg: PipelineConfig) -> dict:
    agg: dict[str, Any] = {"notes": []}
    all_tails = [t for s in stocks for t in s["tails"]]
    agg["table1"] = good_fit_table(all_tails) if stocks else {"counts": {}, "overlap": {}, "n_stocks": 0}
    expected = len(stocks) * len(FAMILIES) * len(KINDS)
    if len(all_tails) != expected:
        agg["notes"].append(f"tail record count {len(all_tails)} != {expected}")

    zeta = {k: {} for k in KINDS}
    for t in all_tails:
        if t["family"] == "power_law" and t.get("accepted") and t.get("zeta") is not None:
            zeta[t["kind"]][t["ticker"]] = t["zeta"]
    agg["zeta_summary"] = {
        k: {"mean": float(np.mean(list(v.values()))), "std": float(np.std(list(v.values()))), "n": len(v)}
        for k, v in zeta.items() if v
    }
    agg["zeta_binned"] = {}
    for comp in ("overnight", "daytime"):
        common = sorted(set(zeta["total"]) & set(zeta[comp]))
        if not common:
            agg["notes"].append(f"zeta_binned total-{comp}: no stock with both power-law fits accepted")
            continue
        x = [zeta["total"][t] for t in common]
        y = [zeta[comp][t] for t in common]
        agg["zeta_binned"][f"total-{comp}"] = bin_tendency(x, y, cfg.bins, measure=f"zeta total vs {comp}").to_record()

    vectors = _dfa_vectors(stocks)
    agg["alpha_hist"] = {}
    agg["table2"] = {}
    for measure, per_kind in vectors.items():
        agg["alpha_hist"][measure] = {
            kind: histogram_pdf(list(v.values()), cfg.alpha_bin_width).to_record()
            for kind, v in per_kind.items() if v
        }
        for pair in PAIRS:
            common = sorted(set(per_kind[pair[0]]) & set(per_kind[pair[1]]))
            key = f"{measure}:{pair_name(pair)}"
            if len(common) < 2 * cfg.subsets:
                agg["notes"].append(f"table2 {key}: {len(common)} stocks, need {2 * cfg.subsets}")
                continue
            a = [per_kind[pair[0]][t] for t in common]
            b = [per_kind[pair[1]][t] for t in common]
            try:
                agg["table2"][key] = cohort_alpha_xcorr(a, b, cfg.subsets, cfg.seed, measure=key).to_record()
            except AnalysisError as exc:
                agg["notes"].append(f"table2 {key}: {exc}")

    czero: dict[str, list[float]] = {pair_name(p): [] for p in PAIRS}
    for s in stocks:
        for rec in s["xcorr"]:
            czero[rec["pair"]].append(rec["c_zero"])
    agg["xcorr_dist"] = {
        p: {**histogram_pdf(v, cfg.xcorr_bin_width).to_record(), "mean": float(np.mean(v)), "std": float(np.std(v))}
        for p, v in czero.items() if v
    }

    yearly: dict[str, dict[int, list[float]]] = {pair_name(p): {} for p in PAIRS}
    for s in stocks:
        for rec in s["yearly"]:
            for yr, c in zip(rec["years"], rec["C"]):
                yearly[rec["pair"]].setdefault(yr, []).append(c)
    agg["yearly"] = {
        p: [{"year": yr, "mean": float(np.mean(v)), "std": float(np.std(v)), "n_stocks": len(v)}
            for yr, v in sorted(d.items())]
        for p, d in yearly.items()
    }

    checks = [s["checks"] for s in stocks]
    agg["checks"] = {
        "additivity_max_abs": max((c["additivity_max_abs"] for c in checks), default=0.0),
        "covariance_rel_err": max((c["covariance_rel_err"] for c in checks), default=0.0),
    }
    return agg


# ---------------------------------------------------------------- driver


@dataclass
class CohortReport:
    stocks: list[dict]
    errors: list[dict]
    aggregates: dict
    metadata: dict
    ingest: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "ingest": self.ingest, "errors": self.errors,
                "aggregates": self.aggregates, "stocks": self.stocks}


def _versions() -> dict:
    out = {"sessionstats": __version__, "prng": PRNG_NAME}
    for pkg in ("numpy", "scipy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def load_series(cfg: PipelineConfig) -> tuple[list[PriceSeries], dict]:
    """Read, split-adjust and date-filter every input file."""
    series: dict[str, PriceSeries] = {}
    ingest = {"skipped_rows": {}, "issues": [], "files": list(cfg.inputs)}
    for path in cfg.inputs:
        try:
            parsed = read_price_csv(path)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        for s in parsed.series:
            if s.ticker in series:
                raise DuplicateRowError(f"ticker {s.ticker} appears in more than one input file")
            series[s.ticker] = s
        ingest["skipped_rows"].update(parsed.skipped)
        ingest["issues"].extend({"file": str(path), **asdict(i)} for i in parsed.issues)
    lo = cfg.start or date.min
    hi = cfg.end or date.max
    out = []
    for ticker in sorted(series):
        s = filter_date_range(apply_split_adjustment(series[ticker]), lo, hi)
        if len(s):
            out.append(s)
    if not out:
        what = f"--from {cfg.start} --to {cfg.end}" if (cfg.start or cfg.end) else "(no date filter)"
        raise ConfigError(f"no ticker has price rows after filtering {what}")
    return out, ingest


def run_pipeline(cfg: PipelineConfig) -> CohortReport:
    cfg.validate()
    series, ingest = load_series(cfg)
    work = [(s, cfg) for s in series]
    if cfg.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_analyze_one, work, chunksize=max(1, len(work) // (4 * cfg.jobs))))
    else:
        results = [_analyze_one(w) for w in work]
    stocks = [rec for rec, _ in results if rec is not None]
    errors = [err for _, err in results if err is not None]
    for err in errors:
        log.warning("%s failed: %s", err["ticker"], err["error"])
    meta = {
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": _versions(),
        "n_tickers": len(series),
        "n_success": len(stocks),
        "n_errors": len(errors),
        "ks_note": "verdicts use the asymptotic critical value c/sqrt(n_tail) with fitted parameters",
    }
    return CohortReport(stocks, errors, aggregate(stocks, cfg), meta, ingest)


# ---------------------------------------------------------------- output


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def report_json(report: CohortReport | dict) -> str:
    data = report.to_dict() if isinstance(report, CohortReport) else report
    return json.dumps(_clean(data), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_views(data: dict) -> dict[str, list[list]]:
    agg = data["aggregates"]
    views: dict[str, list[list]] = {}

    t1 = agg.get("table1", {})
    rows: list[list] = [["family", *KINDS]]
    for fam in FAMILIES:
        rows.append([fam, *(t1.get("counts", {}).get(fam, {}).get(k, 0) for k in KINDS)])
    for key, per in t1.get("overlap", {}).items():
        rows.append([key, *(per.get(k, 0) for k in KINDS)])
    views["table1.csv"] = rows

    rows = [["measure", "pair", "mean", "std", "shuffled", "subsets", "n_stocks", "seed"]]
    for key, s in sorted(agg.get("table2", {}).items()):
        measure, pair = key.split(":")
        rows.append([measure, pair, s["mean"], s["std"], s["shuffled"], len(s["counts"]), sum(s["counts"]), s["seed"]])
    views["table2.csv"] = rows

    for measure in ("return", "vol_short", "vol_long"):
        rows = [["kind", "bin_left", "bin_right", "center", "density"]]
        for kind, h in sorted(agg.get("alpha_hist", {}).get(measure, {}).items()):
            for i, dens in enumerate(h["density"]):
                rows.append([kind, h["edges"][i], h["edges"][i + 1], h["centers"][i], dens])
        views[f"alpha_hist_{measure}.csv"] = rows

    rows = [["component", "bin_left", "bin_right", "center", "mean", "std", "count", "merged"]]
    for comp, s in sorted(agg.get("zeta_binned", {}).items()):
        for i, m in enumerate(s["means"]):
            rows.append([comp, s["edges"][i], s["edges"][i + 1], s["centers"][i], m, s["stds"][i],
                         s["counts"][i], s["merged"][i]])
    views["zeta_binned.csv"] = rows

    rows = [["pair", "bin_left", "bin_right", "center", "density"]]
    for pair, h in sorted(agg.get("xcorr_dist", {}).items()):
        for i, dens in enumerate(h["density"]):
            rows.append([pair, h["edges"][i], h["edges"][i + 1], h["centers"][i], dens])
    views["xcorr_dist.csv"] = rows

    rows = [["year", "pair", "mean", "std", "n_stocks"]]
    years = sorted({e["year"] for series in agg.get("yearly", {}).values() for e in series})
    for yr in years:
        for pair in (pair_name(p) for p in PAIRS):
            for e in agg.get("yearly", {}).get(pair, []):
                if e["year"] == yr:
                    rows.append([yr, pair, e["mean"], e["std"], e["n_stocks"]])
    views["yearly_xcorr.csv"] = rows
    return views


def emit_report(report: CohortReport | dict, directory: str | Path) -> list[Path]:
    """Write report.json and the derived CSV views; on failure remove what was written."""
    directory = Path(directory)
    data = json.loads(report_json(report))
    written: list[Path] = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / "report.json"
        target.write_text(json.dumps(data, sort_keys=True, indent=1, allow_nan=False) + "\n", encoding="utf-8")
        written.append(target)
        for name, rows in _csv_views(data).items():
            target = directory / name
            with open(target, "w", newline="", encoding="utf-8") as fh:
                written.append(target)
                w = csv.writer(fh, lineterminator="\n")
                for row in rows:
                    w.writerow([_num(v) for v in row])
    except OSError:
        for p in written:
            try:
                os.remove(p)
            except OSError:
                pass
        raise
    return written
