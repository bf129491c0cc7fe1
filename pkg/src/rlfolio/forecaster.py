"""Supervised next-day return forecaster over the shared feature extractor.

A diagnostic, not a trading input: if the LSTM features cannot even regress
tomorrow's close log-return, the RL agents have nothing to work with. The
loss is the per-asset RMSE averaged across assets, so each asset contributes
on its own return scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import networks as nets
from . import nn
from .data import FeatureWindow, MarketFrame


class EmptyDatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ForecastSample:
    window: FeatureWindow
    target: np.ndarray  # (M,) next-day close log-returns

    def __post_init__(self):
        if not np.isfinite(self.target).all():
            raise ValueError("non-finite target")
        self.target.setflags(write=False)


def build_forecast_dataset(frame: MarketFrame, features: np.ndarray,
                           window: int) -> tuple[np.ndarray, np.ndarray]:
    """All (window, next-day log-return) pairs of a frame.

    Returns (windows, targets) with shapes (N, M, W-1, C) and (N, M), where
    the window ending at day t is paired with ln(close_{t+1} / close_t).
    """
    n_days = frame.n_days
    if n_days <= window:
        raise EmptyDatasetError(f"{n_days} days yield no window-target pairs at W={window}")
    closes = frame.closes
    log_rets = np.log(closes[:, 1:] / closes[:, :-1])  # (M, T-1), index t = move into t+1
    ts = range(window - 1, n_days - 1)
    windows = np.stack([features[:, t - window + 1 : t, :] for t in ts])
    targets = np.stack([log_rets[:, t] for t in ts])
    return windows, targets


def forecast(params: nn.ParamSet, window: FeatureWindow, cfg: nets.NetConfig) -> np.ndarray:
    """Point forecast for a single feature window; unconstrained reals."""
    with ad.no_grad():
        out = nets.forecaster_predict(params, window.values[None], cfg)
    return out.data[0].copy()


def mean_rmse_loss(preds: ad.Tensor, targets) -> ad.Tensor:
    """(1/M) sum_i sqrt((1/N) sum_t (pred - target)^2): per-asset RMSE, averaged."""
    t = ad.as_tensor(targets)
    if preds.shape != t.shape:
        raise ad.ShapeMismatchError(f"preds {preds.shape} vs targets {t.shape}")
    per_asset_mse = ad.tmean(ad.square(preds - t), axis=0)
    return ad.tmean(ad.sqrt(per_asset_mse))


def directional_accuracy(preds, targets) -> float:
    """Fraction of entries whose sign matches (zeros only match zeros)."""
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.size == 0 or p.shape != t.shape:
        raise ValueError("preds and targets must be nonempty and the same shape")
    return float((np.sign(p) == np.sign(t)).mean())


def train_forecaster(
    windows: np.ndarray,
    targets: np.ndarray,
    cfg: nets.NetConfig,
    rng: np.random.Generator,
    epochs: int = 1000,
    batch_size: int = 128,
    lr: float = 3e-4,
    val_fraction: float = 0.1,
    params: nn.ParamSet | None = None,
) -> tuple[nn.ParamSet, list[dict]]:
    """Minibatch Adam on the mean-RMSE loss; trailing split for validation.

    Returns the trained ParamSet and one record per epoch:
    {"epoch", "train_loss", "val_loss"} (val_loss is NaN when the trailing
    split is empty).
    """
    n = len(windows)
    if n == 0:
        raise EmptyDatasetError("no training samples")
    if len(targets) != n:
        raise ValueError("windows and targets disagree on sample count")
    n_val = int(n * val_fraction)
    n_train = n - n_val
    if n_train == 0:
        raise EmptyDatasetError("validation split consumed every sample")
    train_w, val_w = windows[:n_train], windows[n_train:]
    train_y, val_y = targets[:n_train], targets[n_train:]

    if params is None:
        params = nets.build_forecaster(cfg, rng)
    opt = nn.Adam(params, lr=lr)
    curve: list[dict] = []
    for epoch in range(epochs):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, batch_size):
            idx = order[start : start + batch_size]
            preds = nets.forecaster_predict(params, train_w[idx], cfg)
            loss = mean_rmse_loss(preds, train_y[idx])
            params.zero_grad()
            ad.backward(loss)
            opt.step()
            batch_losses.append(loss.item())
        if n_val:
            with ad.no_grad():
                val_preds = nets.forecaster_predict(params, val_w, cfg)
                val_loss = mean_rmse_loss(val_preds, val_y).item()
        else:
            val_loss = float("nan")
        curve.append({
            "epoch": epoch,
            "train_loss": float(np.mean(batch_losses)),
            "val_loss": val_loss,
        })
    return params, curve
