"""Network assemblies shared by the agents and the forecaster.

Every network follows the same recipe: a per-asset feature extractor (one
dense embedding layer feeding a stacked LSTM, weights shared across assets)
whose last hidden states are concatenated, then small dense heads. Cash has
no price history, so when enabled it contributes an all-zero feature block.

Each network owns a full ParamSet including its private copy of the
extractor, so actor and critic gradients never interact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from . import nn

LOG_STD_HEAD_INIT_SCALE = 1.0  # log_std head uses the same fan-in rule as other layers


@dataclass(frozen=True)
class NetConfig:
    """Shapes and sizes shared by every network in a run."""

    n_assets: int
    window: int
    n_channels: int = 5
    hidden: int = 64
    lstm_layers: int = 3
    include_cash: bool = True
    leaky_slope: float = 0.01
    squash_scale: float = 5.0  # k in softmax(k * tanh(z)) for the SAC projection

    def __post_init__(self):
        if self.n_assets < 1:
            raise ValueError("need at least one asset")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.hidden < 1 or self.lstm_layers < 1:
            raise ValueError("hidden size and layer count must be positive")

    @property
    def n_components(self) -> int:
        """Length of a portfolio weight vector (assets plus optional cash)."""
        return self.n_assets + (1 if self.include_cash else 0)

    @property
    def seq_len(self) -> int:
        return self.window - 1

    @property
    def feature_dim(self) -> int:
        return self.n_components * self.hidden


def _init_extractor(pset: nn.ParamSet, cfg: NetConfig, rng: np.random.Generator) -> None:
    nn.init_dense(pset, "extractor.embed", cfg.n_channels, cfg.hidden, rng)
    nn.init_lstm(pset, "extractor.lstm", cfg.hidden, cfg.hidden, cfg.lstm_layers, rng)


def extract_features(params: nn.ParamSet, windows, cfg: NetConfig, with_cash: bool = True) -> Tensor:
    """Run the shared extractor over each asset's window.

    windows: array or Tensor of shape (B, M, S, C) with S = window - 1.
    Returns (B, K*H) where K = n_components if ``with_cash`` and cash is
    enabled (zero block first), else M.
    """
    x = ad.as_tensor(windows)
    b, m, s, c = x.shape
    if m != cfg.n_assets or s != cfg.seq_len or c != cfg.n_channels:
        raise ad.ShapeMismatchError(
            f"window batch {x.shape} does not match config "
            f"(M={cfg.n_assets}, S={cfg.seq_len}, C={cfg.n_channels})"
        )
    flat = ad.reshape(x, (b * m * s, c))
    emb = nn.dense_forward(
        flat, params["extractor.embed.w"], params["extractor.embed.b"],
        activation="leaky_relu", slope=cfg.leaky_slope,
    )
    seq = ad.reshape(emb, (b * m, s, cfg.hidden))
    h = nn.lstm_forward(seq, params, prefix="extractor.lstm",
                        layers=cfg.lstm_layers, hidden=cfg.hidden)  # (B*M, H)
    feats = ad.reshape(h, (b, m * cfg.hidden))
    if with_cash and cfg.include_cash:
        cash = Tensor(np.zeros((b, cfg.hidden)))
        feats = ad.concat([cash, feats], axis=1)
    return feats


def _trunk(params: nn.ParamSet, x: Tensor, cfg: NetConfig) -> Tensor:
    h = nn.dense_forward(x, params["trunk1.w"], params["trunk1.b"],
                         activation="leaky_relu", slope=cfg.leaky_slope)
    return nn.dense_forward(h, params["trunk2.w"], params["trunk2.b"],
                            activation="leaky_relu", slope=cfg.leaky_slope)


def _init_trunk(pset: nn.ParamSet, in_dim: int, cfg: NetConfig, rng: np.random.Generator) -> None:
    nn.init_dense(pset, "trunk1", in_dim, cfg.hidden, rng)
    nn.init_dense(pset, "trunk2", cfg.hidden, cfg.hidden, rng)


# ---------------------------------------------------------------------------
# deterministic (DDPG-style) actor


def build_ddpg_actor(cfg: NetConfig, rng: np.random.Generator) -> nn.ParamSet:
    pset = nn.ParamSet()
    _init_extractor(pset, cfg, rng)
    _init_trunk(pset, cfg.feature_dim + cfg.n_components, cfg, rng)
    nn.init_dense(pset, "head", cfg.hidden, cfg.n_components, rng)
    return pset


def ddpg_actor_logits(params: nn.ParamSet, windows, weights, cfg: NetConfig) -> Tensor:
    """Pre-softmax allocation logits, shape (B, K)."""
    feats = extract_features(params, windows, cfg)
    x = ad.concat([feats, ad.as_tensor(weights)], axis=1)
    h = _trunk(params, x, cfg)
    return nn.dense_forward(h, params["head.w"], params["head.b"], activation="linear")


def ddpg_actor_action(params: nn.ParamSet, windows, weights, cfg: NetConfig,
                      noise: np.ndarray | None = None) -> Tensor:
    logits = ddpg_actor_logits(params, windows, weights, cfg)
    if noise is not None:
        logits = logits + Tensor(np.asarray(noise))
    return nn.softmax(logits)


# ---------------------------------------------------------------------------
# stochastic (SAC-style) actor


def build_sac_actor(cfg: NetConfig, rng: np.random.Generator) -> nn.ParamSet:
    pset = nn.ParamSet()
    _init_extractor(pset, cfg, rng)
    _init_trunk(pset, cfg.feature_dim + cfg.n_components, cfg, rng)
    nn.init_dense(pset, "mean_head", cfg.hidden, cfg.n_components, rng)
    nn.init_dense(pset, "log_std_head", cfg.hidden, cfg.n_components, rng)
    return pset


def sac_actor_dist(params: nn.ParamSet, windows, weights, cfg: NetConfig) -> tuple[Tensor, Tensor]:
    """Gaussian policy head: (mean, log_std), each (B, K)."""
    feats = extract_features(params, windows, cfg)
    x = ad.concat([feats, ad.as_tensor(weights)], axis=1)
    h = _trunk(params, x, cfg)
    mean = nn.dense_forward(h, params["mean_head.w"], params["mean_head.b"], activation="linear")
    log_std = nn.dense_forward(h, params["log_std_head.w"], params["log_std_head.b"],
                               activation="linear")
    return mean, log_std


def sac_actor_sample(params: nn.ParamSet, windows, weights, cfg: NetConfig,
                     noise: np.ndarray) -> tuple[Tensor, Tensor]:
    """Reparameterized action on the simplex plus its (pre-projection) log-prob.

    The tanh-squashed draw u lands in (-1, 1)^K; the executable portfolio is
    softmax(k*u). log_prob covers the squashed Gaussian only — the simplex
    projection is treated as a deterministic post-processing step, not part
    of the density.
    """
    mean, log_std = sac_actor_dist(params, windows, weights, cfg)
    squashed, log_prob = nn.reparam_sample(mean, log_std, noise)
    action = nn.softmax(squashed * cfg.squash_scale)
    return action, log_prob


def sac_actor_mean_action(params: nn.ParamSet, windows, weights, cfg: NetConfig) -> Tensor:
    """Deterministic evaluation path: squash the Gaussian mean, then project."""
    mean, _ = sac_actor_dist(params, windows, weights, cfg)
    return nn.softmax(ad.tanh(mean) * cfg.squash_scale)


# ---------------------------------------------------------------------------
# critics and state-value network


def build_critic(cfg: NetConfig, rng: np.random.Generator) -> nn.ParamSet:
    """Q(s, a): extractor features + current weights + action -> scalar."""
    pset = nn.ParamSet()
    _init_extractor(pset, cfg, rng)
    _init_trunk(pset, cfg.feature_dim + 2 * cfg.n_components, cfg, rng)
    nn.init_dense(pset, "head", cfg.hidden, 1, rng)
    return pset


def critic_q(params: nn.ParamSet, windows, weights, action, cfg: NetConfig) -> Tensor:
    """Action value, shape (B, 1). ``action`` may be a Tensor to let actor
    gradients flow through the critic."""
    feats = extract_features(params, windows, cfg)
    x = ad.concat([feats, ad.as_tensor(weights), ad.as_tensor(action)], axis=1)
    h = _trunk(params, x, cfg)
    return nn.dense_forward(h, params["head.w"], params["head.b"], activation="linear")


def build_value_net(cfg: NetConfig, rng: np.random.Generator) -> nn.ParamSet:
    """V(s): extractor features + current weights -> scalar."""
    pset = nn.ParamSet()
    _init_extractor(pset, cfg, rng)
    _init_trunk(pset, cfg.feature_dim + cfg.n_components, cfg, rng)
    nn.init_dense(pset, "head", cfg.hidden, 1, rng)
    return pset


def value_v(params: nn.ParamSet, windows, weights, cfg: NetConfig) -> Tensor:
    feats = extract_features(params, windows, cfg)
    x = ad.concat([feats, ad.as_tensor(weights)], axis=1)
    h = _trunk(params, x, cfg)
    return nn.dense_forward(h, params["head.w"], params["head.b"], activation="linear")


# ---------------------------------------------------------------------------
# forecaster head (no weights input, no softmax)


def build_forecaster(cfg: NetConfig, rng: np.random.Generator) -> nn.ParamSet:
    pset = nn.ParamSet()
    _init_extractor(pset, cfg, rng)
    _init_trunk(pset, cfg.n_assets * cfg.hidden, cfg, rng)
    nn.init_dense(pset, "head", cfg.hidden, cfg.n_assets, rng)
    return pset


def forecaster_predict(params: nn.ParamSet, windows, cfg: NetConfig) -> Tensor:
    """Next-day per-asset log-return estimates, shape (B, M); unconstrained."""
    feats = extract_features(params, windows, cfg, with_cash=False)
    h = _trunk(params, feats, cfg)
    return nn.dense_forward(h, params["head.w"], params["head.b"], activation="linear")
