"""rlfolio: reinforcement-learning portfolio management on daily OHLCV data.

A small, numpy-only stack: a reverse-mode autodiff kernel, LSTM feature
extraction, DDPG and SAC trading agents, a mean-variance benchmark, and the
backtest/report tooling that ties them together.
"""

__version__ = "0.1.0"

from . import autodiff
from .nn import ParamSet, Adam

__all__ = ["autodiff", "ParamSet", "Adam", "__version__"]
