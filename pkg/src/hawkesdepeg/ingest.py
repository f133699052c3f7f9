"""Turn one-minute OHLC bars into percentile-banded jump arrival times.

A bar's jump magnitude is its high-low range as a percentage of a reference
price (the open by default). Arrival times are hours since the first bar.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

DENOMINATORS = ("open", "low", "close")
HEADER = ("timestamp", "open", "high", "low", "close")


class IngestError(ValueError):
    """Malformed or inconsistent market data."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class OhlcBar:
    timestamp: float  # minutes since the Unix epoch
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        o, h, l, c = self.open, self.high, self.low, self.close
        if min(o, h, l, c) <= 0:
            raise ValueError("prices must be positive")
        if not (l <= min(o, c) and max(o, c) <= h):
            raise ValueError(f"OHLC ordering violated: open={o} high={h} low={l} close={c}")


@dataclass(frozen=True)
class JumpEvent:
    time: float  # hours
    magnitude: float  # percent


@dataclass(frozen=True)
class PercentileBand:
    """Quantile band ``[q(lower), q(upper))``; closed above when ``upper == 1``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower < self.upper <= 1.0):
            raise ValueError(f"band needs 0 <= lower < upper <= 1, got {self.lower}:{self.upper}")

    @classmethod
    def parse(cls, text: str) -> "PercentileBand":
        try:
            a, b = text.split(":")
            return cls(float(a), float(b))
        except ValueError as e:
            raise ValueError(f"bad band {text!r}, expected 'lower:upper' e.g. 0.9:1.0 ({e})") from None

    @property
    def label(self) -> str:
        return f"{self.lower:.1f}-{self.upper:.1f}"


DECILE_BANDS = tuple(PercentileBand(k / 10, (k + 1) / 10) for k in range(10))


def parse_timestamp(text: str) -> float:
    """ISO-8601 (naive means UTC) or a plain number of minutes since the epoch."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    s = text[:-1] + "+00:00" if text.endswith("Z") else text
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp() / 60.0


def parse_ohlc_csv(stream: Union[TextIO, str], source: str | None = None) -> list[OhlcBar]:
    """Read ``timestamp,open,high,low,close`` rows.

    Timestamps must be strictly increasing. Any malformed row raises
    :class:`IngestError` carrying its 1-based line number.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty input (no header row)", source=source) from None
    if tuple(h.strip().lower() for h in header) != HEADER:
        raise IngestError(f"expected header {','.join(HEADER)}, got {','.join(header)}",
                          line=1, source=source)
    bars: list[OhlcBar] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise IngestError(f"expected 5 fields, got {len(row)}", line, source)
        try:
            ts = parse_timestamp(row[0])
            o, h, l, c = (float(x) for x in row[1:])
        except ValueError as e:
            raise IngestError(f"cannot parse row: {e}", line, source) from None
        try:
            bar = OhlcBar(ts, o, h, l, c)
        except ValueError as e:
            raise IngestError(str(e), line, source) from None
        if bars and bar.timestamp <= bars[-1].timestamp:
            raise IngestError("timestamps must be strictly increasing", line, source)
        bars.append(bar)
    return bars


def jump_magnitudes(bars: Sequence[OhlcBar], denominator: str = "open",
                    origin: float | None = None) -> list[JumpEvent]:
    """Percentage high-low range of every bar, timed in hours.

    ``origin`` (minutes since epoch) defaults to the first bar's timestamp;
    pass a shared origin to align several series.
    """
    if not bars:
        raise IngestError("empty input: no bars")
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    t0 = bars[0].timestamp if origin is None else origin
    return [JumpEvent((b.timestamp - t0) / 60.0,
                      100.0 * (b.high - b.low) / getattr(b, denominator))
            for b in bars]


def quantile(values: Iterable[float], p: float) -> float:
    """Empirical quantile with linear interpolation between order statistics
    (``q(0)`` is the minimum, ``q(1)`` the maximum)."""
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("quantile of an empty list")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return float(np.quantile(x, p, method="linear"))


def band_mask(magnitudes, band: PercentileBand, population) -> np.ndarray:
    """Boolean mask of ``magnitudes`` inside ``band`` of ``population``'s quantiles.

    Zero magnitudes (flat bars) are never selected.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    pop = np.asarray(population, dtype=np.float64)
    if pop.size == 0:
        return np.zeros(mags.shape, dtype=bool)
    lo = quantile(pop, band.lower)
    hi = quantile(pop, band.upper)
    upper_ok = mags <= hi if band.upper == 1.0 else mags < hi
    return (mags > 0) & (mags >= lo) & upper_ok


def extract_events(bars: Sequence[OhlcBar], band: PercentileBand,
                   threshold_source: Union[str, Sequence[float]] = "self",
                   denominator: str = "open", origin: float | None = None) -> list[JumpEvent]:
    """Jump events whose magnitude falls inside ``band``.

    With ``threshold_source="self"`` the quantiles come from the nonzero
    magnitudes of ``bars`` themselves; otherwise from the given magnitude list
    (e.g. a longer history window). An empty result is valid.
    """
    jumps = jump_magnitudes(bars, denominator, origin)
    mags = np.array([j.magnitude for j in jumps])
    if isinstance(threshold_source, str):
        if threshold_source != "self":
            raise ValueError("threshold_source must be 'self' or a list of magnitudes")
        population = mags[mags > 0]
    else:
        population = np.asarray(threshold_source, dtype=np.float64)
        if population.size == 0:
            raise ValueError("threshold_source is empty")
    keep = band_mask(mags, band, population)
    return [j for j, k in zip(jumps, keep) if k]


def read_magnitudes_csv(stream: Union[TextIO, str]) -> list[float]:
    """Single-column magnitudes, optional non-numeric header line."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = []
    for i, row in enumerate(csv.reader(stream), start=1):
        if not row or not row[0].strip():
            continue
        try:
            out.append(float(row[0]))
        except ValueError:
            if i == 1:
                continue
            raise IngestError(f"not a number: {row[0]!r}", i) from None
    return out


def write_events_csv(events: Sequence[JumpEvent], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["time_hours", "magnitude_pct"])
    for e in events:
        w.writerow([repr(e.time), repr(e.magnitude)])


def read_events_csv(stream: Union[TextIO, str]) -> list[JumpEvent]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["time_hours", "magnitude_pct"]:
        raise IngestError("expected header time_hours,magnitude_pct", 1)
    out = []
    for row in reader:
        if not row:
            continue
        try:
            out.append(JumpEvent(float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            raise IngestError(f"bad row {row!r}", reader.line_num) from None
    return out
