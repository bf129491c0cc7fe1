"""Shared fixtures and oracle helpers for the test suite."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

from rlfolio import data


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar-valued f() w.r.t. array x in place."""
    grad = np.zeros_like(x)
    flat, gflat = x.ravel(), grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """Max elementwise relative error with an absolute floor for near-zero grads."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())


def make_bars(closes, start=date(2021, 1, 1), volume=1000.0, vary_volume=True):
    """OHLCV bars with high/low bracketing a given close path."""
    bars = []
    prev = closes[0]
    for k, c in enumerate(closes):
        o = prev
        hi = max(o, c) * 1.01
        lo = min(o, c) * 0.99
        v = volume * (1.0 + 0.1 * (k % 5)) if vary_volume else volume
        bars.append(data.OhlcvBar(start + timedelta(days=k), o, hi, lo, c, v))
        prev = c
    return bars


def synthetic_frame(n_days=60, n_assets=2, seed=0, drift=None):
    """Random-walk close prices wrapped into an aligned MarketFrame."""
    rng = np.random.default_rng(seed)
    series = {}
    for i in range(n_assets):
        mu = 0.0 if drift is None else drift[i]
        closes = 100.0 * np.cumprod(1.0 + rng.normal(mu, 0.02, n_days))
        series[f"A{i}"] = make_bars(closes)
    return data.align_frames(series)


def frame_features(frame):
    diffs = data.compute_log_diffs(frame)
    stats = data.fit_stats(diffs, frame.assets)
    return data.standardize(diffs, stats)


def write_market_csvs(data_dir, tickers=("AAA", "BBB"), n_days=46, seed=0,
                      start=date(2021, 1, 1)):
    """Random-walk OHLCV CSV per ticker, in the ingest file format."""
    data_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for k, ticker in enumerate(tickers):
        closes = 100.0 * np.cumprod(1.0 + rng.normal(0.001 * k, 0.02, n_days))
        lines = ["date,open,high,low,close,volume"]
        prev = closes[0]
        for i, c in enumerate(closes):
            day = start + timedelta(days=i)
            hi, lo = max(prev, c) * 1.02, min(prev, c) * 0.98
            vol = 1000.0 * (1.0 + 0.2 * ((i + k) % 7))
            lines.append(f"{day.isoformat()},{prev},{hi},{lo},{c},{vol}")
            prev = c
        (data_dir / f"{ticker}.csv").write_text("\n".join(lines) + "\n")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_frame():
    return synthetic_frame(n_days=40, n_assets=2, seed=3)
