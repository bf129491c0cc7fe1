"""Mean-variance benchmark agent: re-optimizes weights from rolling moments.

Learns nothing — observe() and update() are no-ops — so it doubles as the
null hypothesis the RL agents must beat.
"""

from __future__ import annotations

import numpy as np

from ..data import MarketFrame
from ..environment import EnvState
from ..markowitz import estimate_moments, solve_constrained
from .base import BaseAgent


class MptAgent(BaseAgent):
    name = "mpt"

    def __init__(self, frame: MarketFrame, include_cash: bool = True,
                 lookback: int = 60, lam: float = 1.0):
        if lookback < 2:
            raise ValueError("lookback must be at least 2")
        self.frame = frame
        self.include_cash = include_cash
        self.lookback = lookback
        self.lam = lam

    def act(self, state: EnvState, explore: bool = False) -> np.ndarray:
        # Early in the frame there may be fewer than `lookback` trailing
        # returns; shrink the estimation window rather than refuse to trade.
        effective = min(self.lookback, state.t)
        if effective < 2:
            raise ValueError(f"day index {state.t} leaves fewer than 2 trailing returns")
        moments = estimate_moments(self.frame, state.t, effective)
        solution = solve_constrained(moments.mu, moments.cov, self.lam)
        if self.include_cash:
            return np.concatenate(([0.0], solution.weights))
        return solution.weights.copy()
