"""Daily market records: CSV contract, response coding, phase and tau filters.

One row per trading day::

    date,volume,anger,disgust,joy,sadness,fear,r01,...,r49,open_return

``open_return`` must already be aligned to the *next* day's opening return,
so that the predictors of row i explain the response of row i.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from . import simplex
from .errors import EmptySubsample, InputError, ParseError, SchemaError, ZeroPart
from .mixmodel import MixedDataset

EMOTIONS = ("anger", "disgust", "joy", "sadness", "fear")
N_INTRADAY = 49
INTRADAY = tuple(f"r{k:02d}" for k in range(1, N_INTRADAY + 1))
COLUMNS = ("date", "volume", *EMOTIONS, *INTRADAY, "open_return")
MIN_SUBSAMPLE = 20

PHASES = {
    "phase1": (dt.date(2014, 12, 2), dt.date(2015, 6, 18)),
    "phase2": (dt.date(2015, 6, 19), dt.date(2015, 10, 14)),
    "phase3": (dt.date(2015, 10, 15), dt.date(2016, 4, 29)),
}


def intraday_times() -> tuple[str, ...]:
    """Clock labels of the 49 five-minute returns (09:35-11:30, 13:00-15:00)."""
    morning = [dt.datetime(2000, 1, 1, 9, 35) + dt.timedelta(minutes=5 * k) for k in range(24)]
    afternoon = [dt.datetime(2000, 1, 1, 13, 0) + dt.timedelta(minutes=5 * k) for k in range(25)]
    return tuple(t.strftime("%H:%M") for t in morning + afternoon)


def intraday_grid() -> np.ndarray:
    """Abstract equally spaced time points for the 49 intraday returns."""
    return np.linspace(0.0, 1.0, N_INTRADAY)


@dataclass(frozen=True, eq=False)
class MarketRecord:
    date: dt.date
    volume: float
    emotions: np.ndarray  # closed shares, strictly positive
    intraday: np.ndarray
    open_return: float


def _float(text, row, column) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"not a number: {text!r}", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", row, column)
    return value


def _parse_row(raw: dict, row: int) -> MarketRecord:
    try:
        date = dt.date.fromisoformat(raw["date"].strip())
    except (AttributeError, ValueError):
        raise ParseError(f"bad date {raw['date']!r} (expected YYYY-MM-DD)", row, "date") from None
    volume = _float(raw["volume"], row, "volume")
    if volume <= 0:
        raise ParseError("volume must be positive", row, "volume")
    counts = []
    for name in EMOTIONS:
        v = _float(raw[name], row, name)
        if v == 0:
            raise ZeroPart(f"row {row}: emotion {name!r} is zero; zero parts are not supported")
        if v < 0:
            raise ParseError("emotion values must be positive", row, name)
        counts.append(v)
    intraday = np.array([_float(raw[c], row, c) for c in INTRADAY])
    open_return = _float(raw["open_return"], row, "open_return")
    return MarketRecord(date, volume, simplex.closure(counts), intraday, open_return)


def ingest(path) -> list[MarketRecord]:
    """Read and validate a market CSV; records come back sorted by date.

    Raises
    ------
    SchemaError
        Missing or unexpected columns.
    ParseError
        A malformed row, with its 1-based line number and column.
    ZeroPart
        An emotion count of zero.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns: {', '.join(missing)}")
        extra = [c for c in header if c not in COLUMNS]
        if extra:
            raise SchemaError(f"{path}: unexpected columns: {', '.join(extra)}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names")
        for fields in reader:
            line_no = reader.line_num
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(fields)}", line_no
                )
            records.append(_parse_row(dict(zip(header, fields)), line_no))
    if not records:
        raise SchemaError(f"{path}: no data rows")
    records.sort(key=lambda r: r.date)
    for prev, cur in zip(records, records[1:]):
        if prev.date == cur.date:
            raise InputError(f"duplicate date {cur.date.isoformat()}")
    return records


def write_records(records, path) -> None:
    """Write records in the ingest schema (shares, full-precision reals)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow(
                [r.date.isoformat(), repr(float(r.volume))]
                + [repr(float(v)) for v in r.emotions]
                + [repr(float(v)) for v in r.intraday]
                + [repr(float(r.open_return))]
            )


def make_response(records) -> np.ndarray:
    """1 where the open return is strictly positive, else 0."""
    return np.array([1 if r.open_return > 0 else 0 for r in records], dtype=int)


def select_dates(records, start: dt.date | None = None, end: dt.date | None = None):
    """Records with ``start <= date <= end`` (either bound may be open)."""
    return [
        r for r in records
        if (start is None or r.date >= start) and (end is None or r.date <= end)
    ]


def select_phase(records, phase: str):
    if phase in (None, "", "all"):
        return list(records)
    try:
        start, end = PHASES[phase]
    except KeyError:
        raise InputError(f"unknown phase {phase!r}; choose from {', '.join(PHASES)} or 'all'") from None
    return select_dates(records, start, end)


def threshold_subsample(records, tau: float, min_size: int = MIN_SUBSAMPLE):
    """Keep days whose open return exceeds ``tau`` in magnitude.

    ``tau == 0`` keeps every day, including zero returns (which code as 0).
    """
    if tau < 0:
        raise InputError("tau must be non-negative")
    kept = list(records) if tau == 0 else [r for r in records if abs(r.open_return) > tau]
    if len(kept) < min_size:
        raise EmptySubsample(
            f"only {len(kept)} observations with |open return| > {tau:g}; need {min_size}"
        )
    return kept


def to_dataset(records) -> MixedDataset:
    records = list(records)
    if not records:
        raise InputError("no records")
    return MixedDataset(
        np.array([r.volume for r in records]),
        np.vstack([r.emotions for r in records]),
        np.vstack([r.intraday for r in records]),
        intraday_grid(),
        make_response(records),
    )
