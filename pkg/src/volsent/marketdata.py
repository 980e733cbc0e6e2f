"""Price ingestion, the squared-log-return volatility proxy, and calendar plumbing."""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    DuplicateDate,
    EmptyFile,
    EmptyIntersection,
    MalformedRow,
    NonPositivePrice,
    SeriesTooShort,
)


def _check_dates(dates: Sequence[dt.date]) -> None:
    for a, b in zip(dates, dates[1:]):
        if not a < b:
            raise ValueError(f"dates not strictly increasing at {b}")


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "closes", closes)
        if len(self.dates) != len(closes):
            raise ValueError("dates and closes differ in length")
        if len(closes) < 2:
            raise SeriesTooShort("a price series needs at least two closes")
        _check_dates(self.dates)
        bad = np.flatnonzero(~(closes > 0))
        if bad.size:
            raise NonPositivePrice(self.dates[bad[0]])

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class VolatilitySeries:
    """Dated squared log returns."""

    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", values)
        if len(self.dates) != len(values):
            raise ValueError("dates and values differ in length")
        _check_dates(self.dates)
        if np.any(values < 0):
            raise ValueError("volatility values must be nonnegative")

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, VolatilitySeries):
            return NotImplemented
        return self.dates == other.dates and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SentimentSeries:
    """One sentiment score in [0, 1] per date."""

    dates: tuple
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "scores", scores)
        if len(self.dates) != len(scores):
            raise ValueError("dates and scores differ in length")
        _check_dates(self.dates)
        if np.any((scores < 0) | (scores > 1)):
            raise ValueError("sentiment scores must lie in [0, 1]")

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, SentimentSeries):
            return NotImplemented
        return self.dates == other.dates and np.array_equal(self.scores, other.scores)


@dataclass(frozen=True)
class SplitSpec:
    """Exactly one of ``boundary_date`` (last training date) or ``train_fraction``."""

    boundary_date: dt.date | None = None
    train_fraction: float | None = None

    def __post_init__(self):
        if (self.boundary_date is None) == (self.train_fraction is None):
            raise ValueError("set exactly one of boundary_date or train_fraction")
        if self.train_fraction is not None and not 0 < self.train_fraction <= 1:
            # 1.0 is accepted here and rejected by chronological_split as degenerate
            raise ValueError("train_fraction must lie in (0, 1)")


def parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def load_prices(path, format: str = "date,close") -> PriceSeries:
    """Read a ``date,close`` CSV with a header row; rows may be in any order."""
    if format != "date,close":
        raise ValueError(f"unknown price format {format!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["date", "close"]:
        raise MalformedRow(1, "expected header 'date,close'")
    seen = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise MalformedRow(lineno, f"expected 2 fields, got {len(row)}")
        try:
            date = parse_date(row[0])
            close = float(row[1])
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        if not np.isfinite(close) or close <= 0:
            raise NonPositivePrice(date)
        if date in seen:
            raise DuplicateDate(date)
        seen[date] = close
    if not seen:
        raise EmptyFile(f"{path} has no data rows")
    dates = sorted(seen)
    return PriceSeries(dates, np.array([seen[d] for d in dates]))


def log_returns(p: PriceSeries) -> tuple[tuple, np.ndarray]:
    """Log returns dated by the later close."""
    if len(p) < 2:
        raise SeriesTooShort("need at least two closes")
    return p.dates[1:], np.diff(np.log(p.closes))


def squared_log_returns(p: PriceSeries) -> VolatilitySeries:
    dates, r = log_returns(p)
    return VolatilitySeries(dates, r * r)


def split_index(dates: Sequence[dt.date], s: SplitSpec) -> int:
    """Number of leading observations that belong to the training side."""
    n = len(dates)
    if s.train_fraction is not None:
        k = int(np.floor(n * s.train_fraction + 1e-9))
    else:
        k = sum(1 for d in dates if d <= s.boundary_date)
    if k <= 0 or k >= n:
        raise DegenerateSplit(f"split leaves {k} training and {n - k} test observations")
    return k


def chronological_split(v: VolatilitySeries, s: SplitSpec) -> tuple[VolatilitySeries, VolatilitySeries]:
    k = split_index(v.dates, s)
    return (VolatilitySeries(v.dates[:k], v.values[:k]),
            VolatilitySeries(v.dates[k:], v.values[k:]))


def align_calendars(v: VolatilitySeries, s: SentimentSeries) -> tuple[VolatilitySeries, SentimentSeries]:
    common = set(v.dates) & set(s.dates)
    if not common:
        raise EmptyIntersection("volatility and sentiment calendars do not overlap")
    vi = [i for i, d in enumerate(v.dates) if d in common]
    si = [i for i, d in enumerate(s.dates) if d in common]
    return (VolatilitySeries([v.dates[i] for i in vi], v.values[vi]),
            SentimentSeries([s.dates[i] for i in si], s.scores[si]))


def write_prices(path, p: PriceSeries) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for d, c in zip(p.dates, p.closes):
            w.writerow([d.isoformat(), repr(float(c))])
