"""Synthetic market files in the ingest schema.

The predictors imitate the real inputs (a positive daily volume, five emotion
counts, a smooth 49-point intraday return curve); the next-day open return is
drawn from one of three response mechanisms:

``signal``
    sign of a latent linear index in all three predictor types plus mild noise.
``noise``
    independent of every predictor.
``sweep``
    the sign follows the latent index with a probability that grows with the
    size of the move, so small moves are close to coin flips.
"""

from __future__ import annotations

import csv
import datetime as dt
import os

import numpy as np

from . import market, simplex

KINDS = ("signal", "noise", "sweep", "sample")
DEFAULT_START = dt.date(2014, 12, 2)
DEFAULT_END = dt.date(2016, 4, 29)
_COMPONENT_SD = np.array([2.0e-3, 1.2e-3, 7.0e-4, 4.0e-4])
_WHITE_SD = 5.0e-5


def business_days(start: dt.date, count: int | None = None, end: dt.date | None = None):
    days = []
    d = start
    while (count is None or len(days) < count) and (end is None or d <= end):
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def _predictors(rng, n):
    grid = market.intraday_grid()
    k = np.arange(1, _COMPONENT_SD.size + 1)
    basis = np.sqrt(2.0) * np.cos(np.pi * np.outer(k, grid))
    comp_scores = rng.standard_normal((n, k.size))
    curves = (comp_scores * _COMPONENT_SD) @ basis + _WHITE_SD * rng.standard_normal((n, grid.size))

    volume = 2.5e8 * np.exp(0.35 * rng.standard_normal(n))
    mood = rng.standard_normal((n, len(market.EMOTIONS))) * 0.6 + np.array([0.2, -0.3, 0.5, 0.1, -0.2])
    counts = np.maximum(1.0, np.round(400.0 * simplex.closure(np.exp(mood))))

    z = (np.log(volume) - np.log(volume).mean()) / np.log(volume).std()
    u = simplex.ilr(simplex.closure(counts))[:, 0]
    u = (u - u.mean()) / u.std()
    index = 1.0 * z + 0.8 * u + 1.5 * comp_scores[:, 0] - 1.0 * comp_scores[:, 1]
    return volume, counts, curves, index


def _draw(kind: str, n: int | None, seed: int, start: dt.date):
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}")
    if n is None:
        n = {"noise": 200, "sweep": 600, "sample": 20}.get(kind)
    dates = business_days(start, n) if n is not None else business_days(start, end=DEFAULT_END)
    n = len(dates)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(KINDS.index(kind),)))
    volume, counts, curves, index = _predictors(rng, n)

    if kind in ("signal", "sample"):
        y_star = 0.003 * (index + 0.5 * rng.standard_normal(n))
    elif kind == "noise":
        y_star = 0.004 * rng.standard_normal(n)
    else:
        size = np.abs(0.004 * rng.standard_normal(n))
        p_follow = 0.5 + 0.48 * np.minimum(1.0, size / 0.006)
        follow = rng.uniform(size=n) < p_follow
        sign = np.where(index > 0, 1.0, -1.0)
        y_star = np.where(follow, sign, -sign) * size
    return dates, volume, counts, curves, y_star


def synthetic_records(kind: str, n: int | None = None, seed: int = 0, start: dt.date = DEFAULT_START):
    """Generate a deterministic list of MarketRecord.

    ``n`` defaults to 200 for ``noise``, 600 for ``sweep``, 20 for ``sample``
    and to every business day from 2014-12-02 to 2016-04-29 for ``signal``.
    """
    dates, volume, counts, curves, y_star = _draw(kind, n, seed, start)
    return [
        market.MarketRecord(
            date=d,
            volume=float(volume[i]),
            emotions=simplex.closure(counts[i]),
            intraday=curves[i],
            open_return=float(y_star[i]),
        )
        for i, d in enumerate(dates)
    ]


def write_fixture(kind: str, path, n: int | None = None, seed: int = 0) -> None:
    """Write a fixture CSV with raw integer emotion counts."""
    dates, volume, counts, curves, y_star = _draw(kind, n, seed, DEFAULT_START)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(market.COLUMNS)
        for i, d in enumerate(dates):
            w.writerow(
                [d.isoformat(), repr(float(volume[i]))]
                + [str(int(v)) for v in counts[i]]
                + [repr(float(v)) for v in curves[i]]
                + [repr(float(y_star[i]))]
            )


def write_all(out_dir, seed: int = 0) -> list[str]:
    """Write every fixture kind to ``out_dir``; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for kind in KINDS:
        path = os.path.join(out_dir, f"{kind}.csv")
        write_fixture(kind, path, seed=seed)
        paths.append(path)
    return paths
