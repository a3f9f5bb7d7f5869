"""Date-indexed monthly return panels and descriptive statistics.

All return values are decimal per month (0.01 = 1%). Panels are immutable
after construction and all operations here are pure functions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import GapInSeries, MissingSeries, NoOverlap, ShapeError, TooShort


@functools.total_ordering
@dataclass(frozen=True)
class MonthStamp:
    """A Gregorian year-month, with exact integer month arithmetic."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @property
    def index(self) -> int:
        """Months elapsed since 0000-01; differences are exact month counts."""
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_index(cls, idx: int) -> "MonthStamp":
        return cls(idx // 12, idx % 12 + 1)

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse 'YYYY-MM' or a 6-digit 'YYYYMM' key."""
        s = text.strip()
        if "-" in s:
            y, m = s.split("-")
        elif len(s) == 6 and s.isdigit():
            y, m = s[:4], s[4:]
        else:
            raise ValueError(f"unparseable month stamp: {text!r}")
        return cls(int(y), int(m))

    def successor(self) -> "MonthStamp":
        return MonthStamp.from_index(self.index + 1)

    def __sub__(self, other: "MonthStamp") -> int:
        return self.index - other.index

    def __lt__(self, other: "MonthStamp") -> bool:
        return self.index < other.index

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: MonthStamp, end: MonthStamp) -> tuple[MonthStamp, ...]:
    """Inclusive contiguous range of months."""
    if end < start:
        raise ValueError(f"end {end} precedes start {start}")
    return tuple(MonthStamp.from_index(i) for i in range(start.index, end.index + 1))


@dataclass(frozen=True)
class ReturnPanel:
    """T x n matrix of monthly decimal returns with a contiguous date index.

    ``mask`` is True where a value is observed; masked-out cells carry NaN.
    """

    dates: tuple[MonthStamp, ...]
    names: tuple[str, ...]
    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError("values must be a 2-D array")
        if values.shape != (len(self.dates), len(self.names)):
            raise ShapeError(
                f"values shape {values.shape} != ({len(self.dates)}, {len(self.names)})"
            )
        mask = self.mask
        if mask is None:
            mask = np.isfinite(values)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ShapeError("mask shape does not match values")
        if not np.all(np.isfinite(values[mask])):
            raise ShapeError("non-finite value in an observed cell")
        idx = [d.index for d in self.dates]
        if any(b - a != 1 for a, b in zip(idx, idx[1:])):
            raise GapInSeries("dates must be strictly increasing and contiguous")
        values = values.copy()
        values[~mask] = np.nan
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def n_rows(self) -> int:
        return len(self.dates)

    @property
    def start(self) -> MonthStamp:
        return self.dates[0]

    @property
    def end(self) -> MonthStamp:
        return self.dates[-1]

    def column(self, name: str) -> np.ndarray:
        if name not in self.names:
            raise MissingSeries(f"series {name!r} not in panel")
        return self.values[:, self.names.index(name)]

    def select(self, names: Sequence[str]) -> "ReturnPanel":
        cols = []
        for name in names:
            if name not in self.names:
                raise MissingSeries(f"series {name!r} not in panel")
            cols.append(self.names.index(name))
        return ReturnPanel(
            self.dates, tuple(names), self.values[:, cols], self.mask[:, cols]
        )

    def window(self, start: MonthStamp | None, end: MonthStamp | None) -> "ReturnPanel":
        """Restrict to [start, end]; ``None`` leaves the endpoint open."""
        lo = self.start if start is None else max(start, self.start)
        hi = self.end if end is None else min(end, self.end)
        if hi < lo:
            raise NoOverlap(f"window [{lo}, {hi}] is empty")
        i = lo - self.start
        j = hi - self.start + 1
        return ReturnPanel(self.dates[i:j], self.names, self.values[i:j], self.mask[i:j])


@dataclass(frozen=True)
class SummaryStats:
    """Sample mean/SD (divisor n-1), min, max and observation count."""

    mean: float
    sd: float
    min: float
    max: float
    n: int


def align(panels: Iterable[ReturnPanel]) -> ReturnPanel:
    """Intersect date ranges and concatenate columns into one complete panel.

    Rows with any missing cell are trimmed from the front and back only;
    missing cells in the interior of the common window raise ``GapInSeries``.
    """
    panels = list(panels)
    if not panels:
        raise ValueError("align requires at least one panel")
    seen: set[str] = set()
    for p in panels:
        dup = seen.intersection(p.names)
        if dup:
            raise ShapeError(f"duplicate series labels across panels: {sorted(dup)}")
        seen.update(p.names)

    lo = max(p.start for p in panels)
    hi = min(p.end for p in panels)
    if hi < lo:
        raise NoOverlap(f"no common date range (latest start {lo}, earliest end {hi})")

    windows = [p.window(lo, hi) for p in panels]
    values = np.hstack([w.values for w in windows])
    mask = np.hstack([w.mask for w in windows])
    names = tuple(n for w in windows for n in w.names)
    dates = windows[0].dates

    complete = mask.all(axis=1)
    if not complete.any():
        raise NoOverlap("every row in the common window has a missing cell")
    first = int(np.argmax(complete))
    last = len(complete) - int(np.argmax(complete[::-1]))
    if not complete[first:last].all():
        bad = first + int(np.argmin(complete[first:last]))
        raise GapInSeries(f"interior missing cell at {dates[bad]}")
    return ReturnPanel(dates[first:last], names, values[first:last], mask[first:last])


def excess_returns(panel: ReturnPanel, riskfree_label: str = "RF") -> ReturnPanel:
    """Subtract the risk-free column row-wise and drop it from the panel."""
    if riskfree_label not in panel.names:
        raise MissingSeries(f"risk-free series {riskfree_label!r} not in panel")
    rf = panel.column(riskfree_label)
    keep = [i for i, n in enumerate(panel.names) if n != riskfree_label]
    values = panel.values[:, keep] - rf[:, None]
    mask = panel.mask[:, keep] & np.isfinite(rf)[:, None]
    names = tuple(panel.names[i] for i in keep)
    return ReturnPanel(panel.dates, names, values, mask)


def describe(series: np.ndarray) -> SummaryStats:
    """Sample statistics of one fully observed series."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise TooShort(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise GapInSeries("series contains missing values")
    return SummaryStats(
        mean=float(x.mean()),
        sd=float(x.std(ddof=1)),
        min=float(x.min()),
        max=float(x.max()),
        n=int(x.size),
    )
