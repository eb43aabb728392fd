"""Date-indexed price/return series, differencing, chronological splits and RMSE."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

ReturnKind = Literal["simple", "log"]


def _as_dates(dates: Sequence[dt.date]) -> tuple[dt.date, ...]:
    out = tuple(dates)
    for a, b in zip(out, out[1:]):
        if b == a:
            raise ValueError(f"duplicate date {b.isoformat()}")
        if b < a:
            raise ValueError(f"dates not ascending at {b.isoformat()}")
    return out


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Daily close prices indexed by strictly ascending calendar dates."""

    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self):
        dates = _as_dates(self.dates)
        closes = _frozen(self.closes)
        if closes.ndim != 1 or len(closes) != len(dates):
            raise ValueError("closes must be 1-D and match dates in length")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise ValueError("closes must be finite and positive")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Per-day returns; each date is the later date of the price pair."""

    dates: tuple[dt.date, ...]
    values: np.ndarray
    kind: ReturnKind = "simple"

    def __post_init__(self):
        dates = _as_dates(self.dates)
        values = _frozen(self.values)
        if values.ndim != 1 or len(values) != len(dates):
            raise ValueError("values must be 1-D and match dates in length")
        if self.kind not in ("simple", "log"):
            raise ValueError(f"unknown return kind {self.kind!r}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.dates)

    def slice(self, start: int, stop: int | None = None) -> ReturnSeries:
        return ReturnSeries(self.dates[start:stop], self.values[start:stop], self.kind)


@dataclass(frozen=True)
class SplitSeries:
    train: ReturnSeries
    test: ReturnSeries
    train_fraction: float


def compute_returns(prices: PriceSeries, kind: ReturnKind = "simple") -> ReturnSeries:
    """Turn a price series into simple (p_t/p_{t-1} - 1) or log returns."""
    if len(prices) < 2:
        raise ValueError("need at least 2 prices to compute returns")
    p = prices.closes
    if np.any(p <= 0):
        raise ValueError("non-positive price encountered")
    ratio = p[1:] / p[:-1]
    if kind == "simple":
        values = ratio - 1.0
    elif kind == "log":
        values = np.log(ratio)
    else:
        raise ValueError(f"unknown return kind {kind!r}")
    return ReturnSeries(prices.dates[1:], values, kind)


def difference(series, d: int) -> np.ndarray:
    """Apply first differences ``d`` times; ``d == 0`` returns a copy."""
    x = np.asarray(series, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be non-negative")
    if len(x) <= d:
        raise ValueError(f"series of length {len(x)} too short for d={d}")
    return np.diff(x, n=d) if d else x.copy()


def difference_heads(series, d: int) -> list[float]:
    """Initial values needed by :func:`undifference` to invert ``difference``."""
    x = np.asarray(series, dtype=np.float64)
    return [float(np.diff(x, n=k)[0]) for k in range(d)]


def undifference(diffed, heads: Sequence[float]) -> np.ndarray:
    """Integrate differenced values back using stored initial values."""
    x = np.asarray(diffed, dtype=np.float64)
    for head in reversed(heads):
        x = np.concatenate([[head], head + np.cumsum(x)])
    return x


def train_test_split(series: ReturnSeries, train_fraction: float = 0.75) -> SplitSeries:
    """Chronological cut: the first ``floor(n * train_fraction)`` points train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(series)
    n_train = int(np.floor(n * train_fraction))
    if n_train < 1 or n - n_train < 1:
        raise ValueError(f"series of length {n} too short to split at {train_fraction}")
    return SplitSeries(series.slice(0, n_train), series.slice(n_train), train_fraction)


def rmse(predicted, actual) -> float:
    """Root mean squared error between two equal-length sequences."""
    yhat = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if yhat.shape != y.shape:
        raise ValueError(f"length mismatch: {yhat.shape} vs {y.shape}")
    if yhat.size == 0:
        raise ValueError("rmse of empty inputs")
    return float(np.sqrt(np.mean((yhat - y) ** 2)))
