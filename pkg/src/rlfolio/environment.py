"""Daily-rebalanced portfolio simulation with proportional transaction costs.

The environment walks a MarketFrame one day at a time. A state at day t
carries a trailing feature window (standardized log-diffs up to the move
into day t) and the incumbent weights. Acting with an allocation vector a
earns the close-to-close simple returns of day t -> t+1, pays
c * sum(|a - w|) in turnover costs, and compounds the portfolio value
arithmetically: v_{t+1} = v_t * (1 + gross - cost).

step() is a pure function of (state, action); the environment object only
holds the immutable market data and configuration, so one instance can
replay many episodes or serve several agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FeatureWindow, MarketFrame, make_window

SIMPLEX_ATOL = 1e-9
DSR_GUARD = 1e-12

REWARD_KINDS = ("log_return", "dsr")


class FrameTooShortError(ValueError):
    pass


class InvalidActionError(ValueError):
    pass


class BankruptError(RuntimeError):
    def __init__(self, value: float):
        super().__init__(f"portfolio value dropped to {value} (<= 0)")
        self.value = value


class NonPositiveValueError(ValueError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    cost_rate: float = 0.001
    window: int = 50
    include_cash: bool = True
    reward_kind: str = "log_return"
    dsr_eta: float = 0.01
    initial_value: float = 1.0
    discount: float = 0.99

    def __post_init__(self):
        if not 0.0 <= self.cost_rate < 1.0:
            raise ValueError("cost_rate must lie in [0, 1)")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.reward_kind not in REWARD_KINDS:
            raise ValueError(f"reward_kind must be one of {REWARD_KINDS}")
        if not 0.0 < self.dsr_eta <= 1.0:
            raise ValueError("dsr_eta must lie in (0, 1]")
        if self.initial_value <= 0.0:
            raise ValueError("initial_value must be positive")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")


@dataclass(frozen=True)
class DsrState:
    """EWMA moment estimates feeding the differential-Sharpe reward."""

    a: float = 0.0  # first moment of net returns
    b: float = 0.0  # second moment


@dataclass(frozen=True)
class EnvState:
    t: int
    window: FeatureWindow
    weights: np.ndarray
    value: float
    dsr: DsrState

    def __post_init__(self):
        self.weights.setflags(write=False)


def validate_simplex(weights: np.ndarray, n: int) -> None:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise InvalidActionError(f"expected {n} weights, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise InvalidActionError("non-finite weight")
    if (w < -SIMPLEX_ATOL).any():
        raise InvalidActionError(f"negative weight {w.min()}")
    total = float(w.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise InvalidActionError(f"weights sum to {total}, not 1")


def action_from_logits(raw: np.ndarray) -> np.ndarray:
    """Map unconstrained logits onto the simplex (stable softmax)."""
    raw = np.asarray(raw, dtype=float)
    if not np.isfinite(raw).all():
        raise InvalidActionError("non-finite logits")
    z = np.exp(raw - raw.max())
    return z / z.sum()


def reward_log(v_t: float, v_next: float) -> float:
    if v_t <= 0.0 or v_next <= 0.0:
        raise NonPositiveValueError(f"values must be positive, got {v_t}, {v_next}")
    return math.log(v_next / v_t)


def reward_dsr(dsr: DsrState, rho: float, eta: float) -> tuple[float, DsrState]:
    """Differential Sharpe ratio of one net return, plus updated moments.

    The reward uses the PRE-update moments; the EWMA update happens after.
    A degenerate variance (including the very first step) yields reward 0.
    """
    variance = dsr.b - dsr.a * dsr.a
    if variance <= DSR_GUARD:
        reward = 0.0
    else:
        numer = dsr.b * (rho - dsr.a) - 0.5 * dsr.a * (rho * rho - dsr.b)
        reward = numer / variance**1.5
    updated = DsrState(a=dsr.a + eta * (rho - dsr.a), b=dsr.b + eta * (rho * rho - dsr.b))
    return reward, updated


def initial_weights(n_assets: int, include_cash: bool) -> np.ndarray:
    if include_cash:
        w = np.zeros(n_assets + 1)
        w[0] = 1.0
        return w
    return np.full(n_assets, 1.0 / n_assets)


class PortfolioEnv:
    """Immutable market data + config; states flow through reset()/step()."""

    def __init__(self, frame: MarketFrame, features: np.ndarray, config: EnvConfig):
        if features.shape != (frame.n_assets, frame.n_days - 1, frame.values.shape[2]):
            raise ValueError(
                f"features shape {features.shape} does not match frame "
                f"({frame.n_assets} assets, {frame.n_days} days)"
            )
        self.frame = frame
        self.features = features
        self.config = config
        closes = frame.closes
        # simple_returns[:, t] is the close-to-close move from day t to t+1
        self.simple_returns = closes[:, 1:] / closes[:, :-1] - 1.0
        self.n_components = frame.n_assets + (1 if config.include_cash else 0)

    @property
    def first_t(self) -> int:
        return self.config.window - 1

    @property
    def last_t(self) -> int:
        """Final day index at which a step can still be taken."""
        return self.frame.n_days - 2

    @property
    def n_steps(self) -> int:
        return self.frame.n_days - self.config.window

    def reset(self) -> EnvState:
        if self.frame.n_days <= self.config.window:
            raise FrameTooShortError(
                f"{self.frame.n_days} days cannot fit window {self.config.window} plus a step"
            )
        return EnvState(
            t=self.first_t,
            window=make_window(self.features, self.first_t, self.config.window),
            weights=initial_weights(self.frame.n_assets, self.config.include_cash),
            value=self.config.initial_value,
            dsr=DsrState(),
        )

    def step(self, state: EnvState, action: np.ndarray) -> tuple[EnvState, float, bool, dict]:
        validate_simplex(action, self.n_components)
        if state.t > self.last_t:
            raise IndexError(f"no step available at day index {state.t}")
        action = np.asarray(action, dtype=float)

        asset_returns = self.simple_returns[:, state.t]
        risky = action[1:] if self.config.include_cash else action
        gross = float(risky @ asset_returns)
        cost = self.config.cost_rate * float(np.abs(action - state.weights).sum())
        net = gross - cost
        new_value = state.value * (1.0 + net)
        if new_value <= 0.0:
            raise BankruptError(new_value)

        if self.config.reward_kind == "dsr":
            reward, new_dsr = reward_dsr(state.dsr, net, self.config.dsr_eta)
        else:
            reward = reward_log(state.value, new_value)
            new_dsr = state.dsr

        t_next = state.t + 1
        next_state = EnvState(
            t=t_next,
            window=make_window(self.features, t_next, self.config.window),
            weights=action.copy(),
            value=new_value,
            dsr=new_dsr,
        )
        done = t_next > self.last_t
        info = {
            "date": self.frame.dates[t_next],
            "gross_return": gross,
            "cost": cost,
            "net_return": net,
            "value": new_value,
            "asset_returns": asset_returns.copy(),
        }
        return next_state, reward, done, info
