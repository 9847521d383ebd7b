"""Daily open/close price ingestion, split adjustment and date filtering.

Input CSV layout (UTF-8, comma separated, ISO dates)::

    ticker,date,open,close[,split_factor]

A ``split_factor`` of ``s`` on a row means every price strictly before that
date is divided by ``s``. Rows with a missing or non-positive price are
skipped and tallied per ticker; their dates are remembered so that returns
spanning them can be flagged downstream.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable

from .errors import DataFormatError, DuplicateRowError

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("ticker", "date", "open", "close")
OPTIONAL_COLUMNS = ("split_factor",)


@dataclass(frozen=True)
class PriceBar:
    date: date
    open: float
    close: float
    split_factor: float = 1.0

    def __post_init__(self):
        if not (self.open > 0 and self.close > 0):
            raise ValueError(f"{self.date}: prices must be positive (open={self.open}, close={self.close})")
        if not self.split_factor > 0:
            raise ValueError(f"{self.date}: split_factor must be positive, got {self.split_factor}")


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    bars: tuple[PriceBar, ...] = ()
    # dates of rows skipped at ingestion; used only for gap flagging
    dropped_dates: tuple[date, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        object.__setattr__(self, "dropped_dates", tuple(sorted(self.dropped_dates)))
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise ValueError(f"{self.ticker}: dates not strictly increasing at {cur.date}")

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[date]:
        return [b.date for b in self.bars]

    @property
    def opens(self) -> list[float]:
        return [b.open for b in self.bars]

    @property
    def closes(self) -> list[float]:
        return [b.close for b in self.bars]


@dataclass
class RowIssue:
    line: int
    ticker: str
    message: str


@dataclass
class ParseResult:
    """Series built from one CSV plus the per-ticker skip tally."""

    series: list[PriceSeries]
    skipped: dict[str, int] = field(default_factory=dict)
    issues: list[RowIssue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.series)

    def __len__(self) -> int:
        return len(self.series)


def _parse_price(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if not raw or raw.lower() in ("na", "nan", "null"):
        return None
    value = float(raw)
    return None if math.isnan(value) else value


def parse_price_csv(text: str | Iterable[str]) -> ParseResult:
    """Parse CSV text into per-ticker series sorted by date.

    Raises DataFormatError on a bad header or unparseable field and
    DuplicateRowError when a (ticker, date) pair occurs twice.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise DataFormatError("empty input: missing header") from None
    if header[:4] != list(REQUIRED_COLUMNS) or header[4:] not in ([], list(OPTIONAL_COLUMNS)):
        raise DataFormatError(
            f"malformed header {header!r}; expected ticker,date,open,close[,split_factor]"
        )
    has_split = len(header) == 5

    rows: dict[str, dict[date, PriceBar]] = {}
    dropped: dict[str, list[date]] = {}
    orphan_splits: dict[str, dict[date, float]] = {}
    skipped: dict[str, int] = {}
    issues: list[RowIssue] = []

    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) not in (4, 5) or (len(row) == 5 and not has_split):
            raise DataFormatError(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
        ticker = row[0].strip()
        try:
            day = date.fromisoformat(row[1].strip())
            op = _parse_price(row[2])
            cl = _parse_price(row[3])
            split = _parse_price(row[4]) if len(row) == 5 else None
        except ValueError as exc:
            raise DataFormatError(f"line {line_no}: {exc}") from exc
        split = 1.0 if split is None else split

        per_ticker = rows.setdefault(ticker, {})
        skipped.setdefault(ticker, 0)
        if day in per_ticker or day in dropped.get(ticker, ()):
            raise DuplicateRowError(f"duplicate row for ({ticker}, {day.isoformat()}) at line {line_no}")

        problem = None
        if op is None or cl is None:
            problem = "missing open or close"
        elif op <= 0 or cl <= 0:
            problem = f"non-positive price (open={op}, close={cl})"
        elif split <= 0:
            problem = f"non-positive split_factor {split}"
        if problem is not None:
            if split > 0 and split != 1.0:
                orphan_splits.setdefault(ticker, {})[day] = split
            skipped[ticker] += 1
            dropped.setdefault(ticker, []).append(day)
            issues.append(RowIssue(line_no, ticker, problem))
            log.warning("line %d (%s): %s; row skipped", line_no, ticker, problem)
            continue
        per_ticker[day] = PriceBar(day, op, cl, split)

    series = []
    for t, bars in sorted(rows.items()):
        ordered = [bars[d] for d in sorted(bars)]
        ordered = _fold_orphan_splits(ordered, orphan_splits.get(t, {}))
        series.append(PriceSeries(t, tuple(ordered), tuple(dropped.get(t, ()))))
    return ParseResult(series, skipped, issues)


def _fold_orphan_splits(bars: list[PriceBar], splits: dict[date, float]) -> list[PriceBar]:
    # a split on a skipped row moves to the next retained bar: the set of
    # retained prices strictly before either date is the same
    if not splits:
        return bars
    out = []
    pending = sorted(splits.items())
    for bar in bars:
        factor = bar.split_factor
        while pending and pending[0][0] < bar.date:
            factor *= pending.pop(0)[1]
        out.append(replace(bar, split_factor=factor) if factor != bar.split_factor else bar)
    return out


def read_price_csv(path: str | Path) -> ParseResult:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_price_csv(fh)


def apply_split_adjustment(series: PriceSeries) -> PriceSeries:
    """Divide prices before each split date by the cumulative split factor."""
    bars = series.bars
    adjusted = []
    factor = 1.0
    # walk backwards so each bar sees the product of all later splits
    for i in range(len(bars) - 1, -1, -1):
        bar = bars[i]
        adjusted.append(PriceBar(bar.date, bar.open / factor, bar.close / factor, 1.0))
        factor *= bar.split_factor
    adjusted.reverse()
    return replace(series, bars=tuple(adjusted))


def filter_date_range(series: PriceSeries, start: date, end: date) -> PriceSeries:
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    return replace(
        series,
        bars=tuple(b for b in series.bars if start <= b.date <= end),
        dropped_dates=tuple(d for d in series.dropped_dates if start <= d <= end),
    )


def write_price_csv(series: Iterable[PriceSeries], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS + OPTIONAL_COLUMNS)
    for s in series:
        for b in s.bars:
            writer.writerow([s.ticker, b.date.isoformat(), repr(b.open), repr(b.close), repr(b.split_factor)])
