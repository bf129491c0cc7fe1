"""OHLCV loading, alignment, train/test splitting, and feature tensors.

Input files are one CSV per asset with header ``date,open,high,low,close,volume``
and strictly increasing ISO dates. Prices become per-channel log-differences;
the volume channel uses ln((v_t + eps) / (v_{t-1} + eps)) so zero-volume days
stay finite. Standardization statistics are fitted per asset and channel on
the training split only and then applied unchanged to the test split.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

CSV_HEADER = ["date", "open", "high", "low", "close", "volume"]
CHANNELS = ["open", "high", "low", "close", "volume"]
N_CHANNELS = len(CHANNELS)
DEFAULT_VOLUME_EPS = 1.0


class MalformedRowError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class NonMonotoneDatesError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class InvariantViolationError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class EmptyIntersectionError(ValueError):
    """No common dates across assets."""


class TooShortError(ValueError):
    def __init__(self, asset: str, have: int, need: int):
        super().__init__(f"asset {asset!r} has {have} bars, needs at least {need}")
        self.asset = asset


class DateOutOfRangeError(ValueError):
    pass


class NonPositivePriceError(ValueError):
    def __init__(self, asset: str, day: date, channel: str):
        super().__init__(f"non-positive {channel} price for {asset} on {day}")
        self.asset = asset
        self.day = day
        self.channel = channel


class DegenerateChannelError(ValueError):
    def __init__(self, asset: str, channel: str):
        super().__init__(f"constant {channel} channel for {asset}: cannot standardize")
        self.asset = asset
        self.channel = channel


class IndexTooEarlyError(ValueError):
    pass


@dataclass(frozen=True)
class OhlcvBar:
    day: date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.open, self.high, self.low, self.close, self.volume)):
            raise ValueError("non-finite field")
        if self.low <= 0.0:
            raise ValueError("low must be positive")
        if not (self.low <= self.open <= self.high):
            raise ValueError("open outside [low, high]")
        if not (self.low <= self.close <= self.high):
            raise ValueError("close outside [low, high]")
        if self.volume < 0.0:
            raise ValueError("negative volume")


@dataclass(frozen=True)
class MarketFrame:
    """Aligned daily panel: values[asset, day, channel] on a shared date axis."""

    assets: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray  # (M, T, 5) float64

    def __post_init__(self):
        m, t, c = self.values.shape
        if m != len(self.assets) or t != len(self.dates) or c != N_CHANNELS:
            raise ValueError("frame shape does not match assets/dates")
        self.values.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def closes(self) -> np.ndarray:
        return self.values[:, :, CHANNELS.index("close")]


@dataclass(frozen=True)
class FeatureStats:
    """Per-asset, per-channel standardization moments fitted on training data."""

    mean: np.ndarray  # (M, 5)
    std: np.ndarray  # (M, 5)

    def __post_init__(self):
        self.mean.setflags(write=False)
        self.std.setflags(write=False)


@dataclass(frozen=True)
class FeatureWindow:
    """Standardized log-difference window: values[asset, step, channel] with
    shape (M, W-1, 5), ending at frame day index ``end_index``."""

    values: np.ndarray
    end_index: int

    def __post_init__(self):
        if not np.isfinite(self.values).all():
            raise ValueError("feature window contains non-finite entries")
        self.values.setflags(write=False)


def load_ohlcv_csv(path: str | Path, ticker: str) -> list[OhlcvBar]:
    """Parse one asset's CSV into date-ordered bars, validating every row."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no CSV for {ticker!r} at {path}")
    bars: list[OhlcvBar] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError(1, "empty file") from None
        if [h.strip().lower() for h in header] != CSV_HEADER:
            raise MalformedRowError(1, f"expected header {','.join(CSV_HEADER)}")
        prev_day: date | None = None
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise MalformedRowError(lineno, f"expected 6 fields, got {len(row)}")
            try:
                day = date.fromisoformat(row[0].strip())
            except ValueError:
                raise MalformedRowError(lineno, f"bad date {row[0]!r}") from None
            try:
                fields = [float(x) for x in row[1:]]
            except ValueError:
                raise MalformedRowError(lineno, "non-numeric field") from None
            if not all(math.isfinite(x) for x in fields):
                raise MalformedRowError(lineno, "non-finite field")
            if prev_day is not None and day <= prev_day:
                raise NonMonotoneDatesError(lineno, f"date {day} not after {prev_day}")
            prev_day = day
            try:
                bars.append(OhlcvBar(day, *fields))
            except ValueError as err:
                raise InvariantViolationError(lineno, str(err)) from None
    return bars


def align_frames(series: dict[str, list[OhlcvBar]], min_length: int = 2) -> MarketFrame:
    """Restrict all assets to their common date axis, preserving input order."""
    for ticker, bars in series.items():
        if len(bars) < min_length:
            raise TooShortError(ticker, len(bars), min_length)
    date_sets = [set(b.day for b in bars) for bars in series.values()]
    common = set.intersection(*date_sets)
    if not common:
        raise EmptyIntersectionError("assets share no common dates")
    dates = tuple(sorted(common))
    if len(dates) < min_length:
        raise TooShortError("<aligned frame>", len(dates), min_length)
    assets = tuple(series)
    values = np.empty((len(assets), len(dates), N_CHANNELS))
    for i, (ticker, bars) in enumerate(series.items()):
        by_day = {b.day: b for b in bars}
        for j, day in enumerate(dates):
            b = by_day[day]
            values[i, j] = (b.open, b.high, b.low, b.close, b.volume)
    return MarketFrame(assets, dates, values)


def split_by_date(frame: MarketFrame, train_end: date) -> tuple[MarketFrame, MarketFrame]:
    """Split into (dates <= train_end, the remainder); both halves nonempty."""
    if train_end < frame.dates[0] or train_end >= frame.dates[-1]:
        raise DateOutOfRangeError(
            f"train_end {train_end} not inside [{frame.dates[0]}, {frame.dates[-1]})"
        )
    cut = sum(1 for d in frame.dates if d <= train_end)
    train = MarketFrame(frame.assets, frame.dates[:cut], frame.values[:, :cut].copy())
    test = MarketFrame(frame.assets, frame.dates[cut:], frame.values[:, cut:].copy())
    return train, test


def compute_log_diffs(frame: MarketFrame, volume_eps: float = DEFAULT_VOLUME_EPS) -> np.ndarray:
    """Per-channel log-differences, shape (M, T-1, 5).

    Entry [i, k, c] = ln(x[i, k+1, c] / x[i, k, c]) for price channels; the
    volume channel adds ``volume_eps`` to numerator and denominator.
    """
    vol = CHANNELS.index("volume")
    prices = frame.values[:, :, :vol]
    if (prices <= 0.0).any():
        i, k, c = np.argwhere(prices <= 0.0)[0]
        raise NonPositivePriceError(frame.assets[i], frame.dates[k], CHANNELS[c])
    diffs = np.empty((frame.n_assets, frame.n_days - 1, N_CHANNELS))
    diffs[:, :, :vol] = np.log(prices[:, 1:] / prices[:, :-1])
    volumes = frame.values[:, :, vol] + volume_eps
    diffs[:, :, vol] = np.log(volumes[:, 1:] / volumes[:, :-1])
    return diffs


def fit_stats(train_diffs: np.ndarray, assets: tuple[str, ...] | None = None) -> FeatureStats:
    """Per-asset, per-channel mean/std (population) over the time axis."""
    if train_diffs.size == 0:
        raise ValueError("empty training diffs")
    mean = train_diffs.mean(axis=1)
    std = train_diffs.std(axis=1)
    degenerate = np.argwhere(std < 1e-12)
    if degenerate.size:
        i, c = degenerate[0]
        name = assets[i] if assets else f"asset{i}"
        raise DegenerateChannelError(name, CHANNELS[c])
    return FeatureStats(mean=mean, std=std)


def standardize(diffs: np.ndarray, stats: FeatureStats) -> np.ndarray:
    return (diffs - stats.mean[:, None, :]) / stats.std[:, None, :]


def make_window(features: np.ndarray, t: int, window: int) -> FeatureWindow:
    """Trailing window of W-1 standardized diff steps ending at day index t.

    ``features`` is the (M, T-1, 5) diff tensor; diff step k carries the move
    into day k+1, so the window covers diff indices [t-W+1, t-1].
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    if t < window - 1:
        raise IndexTooEarlyError(f"day index {t} needs at least {window - 1} prior diff steps")
    if t > features.shape[1]:
        raise ValueError(f"day index {t} beyond feature range {features.shape[1]}")
    # A view, not a copy: replay buffers hold many overlapping windows and
    # would otherwise duplicate the feature tensor thousands of times.
    return FeatureWindow(values=features[:, t - window + 1 : t, :], end_index=t)


def n_windows(n_days: int, window: int) -> int:
    """Number of valid window end indices for a frame of ``n_days`` days."""
    return max(0, n_days - window + 1)
