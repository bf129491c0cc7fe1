#!/usr/bin/env python3
"""Generate synthetic daily OHLCV CSVs for trying out the pipeline.

Prices follow geometric Brownian motion with per-asset drift/volatility and
light cross-correlation; volumes are log-normal. Output format matches the
ingest contract: date,open,high,low,close,volume with strictly increasing
dates.

Usage: python3 scripts/generate_demo_data.py --out data --days 1200 --seed 7
"""

import argparse
import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

ASSETS = {
    # ticker: (annualized drift, annualized vol, start price)
    "BTC": (0.35, 0.65, 20_000.0),
    "ETH": (0.30, 0.80, 1_500.0),
    "LTC": (0.10, 0.90, 90.0),
    "DOGE": (0.05, 1.10, 0.08),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--days", type=int, default=1200)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--start", default="2021-01-01", help="first date (ISO)")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = date.fromisoformat(args.start)

    n = len(ASSETS)
    corr = np.full((n, n), 0.4) + 0.6 * np.eye(n)
    chol = np.linalg.cholesky(corr)
    shocks = rng.standard_normal((args.days, n)) @ chol.T

    for j, (ticker, (drift, vol, p0)) in enumerate(ASSETS.items()):
        mu_d = drift / 365.0
        sig_d = vol / np.sqrt(365.0)
        log_rets = mu_d - 0.5 * sig_d**2 + sig_d * shocks[:, j]
        closes = p0 * np.exp(np.cumsum(log_rets))
        with open(out / f"{ticker}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "open", "high", "low", "close", "volume"])
            prev_close = p0
            for k in range(args.days):
                c = closes[k]
                o = prev_close * float(np.exp(rng.normal(0.0, 0.2 * sig_d)))
                spread = abs(rng.normal(0.0, 0.6 * sig_d))
                hi = max(o, c) * (1.0 + spread)
                lo = min(o, c) * (1.0 - spread)
                v = float(np.exp(rng.normal(13.0, 0.6)))
                writer.writerow([
                    (start + timedelta(days=k)).isoformat(),
                    f"{o:.8f}", f"{hi:.8f}", f"{lo:.8f}", f"{c:.8f}", f"{v:.2f}",
                ])
                prev_close = c
        print(f"wrote {out / f'{ticker}.csv'} ({args.days} days)")


if __name__ == "__main__":
    main()
