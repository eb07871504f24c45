"""Historical daily price data: parsing, validation, windowing, start-date draws.

The price file is a local CSV snapshot (``date,close``). "Day" always means
"consecutive entry in the series"; calendar gaps between entries are
irrelevant, so there is no calendar arithmetic anywhere below.
"""

from __future__ import annotations

import datetime as _dt
import io
import random
from dataclasses import dataclass

from .errors import (
    InsufficientHistory,
    MalformedRow,
    NonMonotonicDates,
    NonPositivePrice,
    SeriesTooShort,
)

CSV_HEADER = "date,close"


@dataclass(frozen=True)
class PricePoint:
    date: _dt.date
    close: float


@dataclass(frozen=True)
class PriceSeries:
    points: tuple[PricePoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def closes(self) -> tuple[float, ...]:
        return tuple(p.close for p in self.points)

    def close_at(self, index: int) -> float:
        return self.points[index].close

    def date_at(self, index: int) -> _dt.date:
        return self.points[index].date


@dataclass(frozen=True)
class ChartWindow:
    """Exactly ``lookback`` consecutive closes ending the day before a decision."""

    closes: tuple[float, ...]
    dates: tuple[_dt.date, ...]
    end_date: _dt.date


def _parse_row(lineno: int, line: str) -> PricePoint:
    parts = line.split(",")
    if len(parts) != 2:
        raise MalformedRow(f"line {lineno}: expected 'date,close', got {line!r}")
    raw_date, raw_close = parts[0].strip(), parts[1].strip()
    try:
        date = _dt.date.fromisoformat(raw_date)
    except ValueError:
        raise MalformedRow(f"line {lineno}: bad date {raw_date!r}") from None
    try:
        close = float(raw_close)
    except ValueError:
        raise MalformedRow(f"line {lineno}: bad close {raw_close!r}") from None
    if not close > 0:
        raise NonPositivePrice(f"line {lineno}: close must be > 0, got {raw_close}")
    return PricePoint(date=date, close=close)


def parse_price_csv(stream) -> PriceSeries:
    """Parse ``date,close`` CSV text (header required, rows already chronological).

    Accepts a text stream or a string.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = [ln.rstrip("\r\n") for ln in stream]
    if not lines or lines[0].strip().lower() != CSV_HEADER:
        raise MalformedRow("missing 'date,close' header")
    points: list[PricePoint] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        point = _parse_row(lineno, line)
        if points and point.date <= points[-1].date:
            raise NonMonotonicDates(
                f"line {lineno}: {point.date} does not follow {points[-1].date}"
            )
        points.append(point)
    return PriceSeries(points=tuple(points))


def serialize_price_csv(series: PriceSeries) -> str:
    """Inverse of :func:`parse_price_csv` for valid series."""
    out = [CSV_HEADER]
    for p in series.points:
        close = repr(p.close)
        if close.endswith(".0"):
            close = close[:-2]
        out.append(f"{p.date.isoformat()},{close}")
    return "\n".join(out) + "\n"


def load_price_csv(path) -> PriceSeries:
    with open(path, encoding="utf-8") as fh:
        return parse_price_csv(fh)


def draw_session_start(
    series: PriceSeries, lookback: int, horizon: int, rng: random.Random
) -> int:
    """Draw the first trading day, uniform over ``[lookback, len - horizon]``.

    The caller must persist the drawn index; replay reads it back and never
    re-draws.
    """
    last_valid = len(series) - horizon
    if last_valid < lookback:
        raise SeriesTooShort(
            f"need at least {lookback + horizon} points, have {len(series)}"
        )
    return rng.randint(lookback, last_valid)


def chart_window(series: PriceSeries, decision_day: int, lookback: int) -> ChartWindow:
    """The ``lookback`` closes a subject sees before deciding on ``decision_day``.

    The window covers indices ``[decision_day - lookback, decision_day)``: it
    ends the day before the decision and slides forward by one each day.
    """
    if decision_day < lookback:
        raise InsufficientHistory(
            f"decision day {decision_day} has fewer than {lookback} prior closes"
        )
    lo = decision_day - lookback
    window = series.points[lo:decision_day]
    return ChartWindow(
        closes=tuple(p.close for p in window),
        dates=tuple(p.date for p in window),
        end_date=window[-1].date,
    )
