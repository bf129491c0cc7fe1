"""Single deterministic evaluation pass over a data split.

The agent acts greedily (explore=False) with fixed parameters; every step is
recorded so metrics and plots can be rebuilt from the trace alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .agents.base import BaseAgent
from .environment import PortfolioEnv
from .metrics import MetricsReport, build_report


@dataclass(frozen=True)
class BacktestResult:
    dates: list[date]  # date of each post-step day
    weights: np.ndarray  # (N, K) action taken at each step
    gross_returns: np.ndarray
    costs: np.ndarray
    net_returns: np.ndarray
    values: np.ndarray  # (N,) portfolio value after each step
    rewards: np.ndarray
    start_date: date  # day the first window ends (value = v_0 here)
    initial_value: float

    @property
    def n_steps(self) -> int:
        return len(self.dates)

    def value_path(self) -> np.ndarray:
        """Value series including the starting point."""
        return np.concatenate(([self.initial_value], self.values))


def run_backtest(env: PortfolioEnv, agent: BaseAgent) -> BacktestResult:
    state = env.reset()
    agent.begin_episode()
    start_date = env.frame.dates[state.t]
    v0 = state.value
    dates, weights, gross, costs, nets_, values, rewards = [], [], [], [], [], [], []
    done = False
    while not done:
        action = agent.act(state, explore=False)
        state, reward, done, info = env.step(state, action)
        dates.append(info["date"])
        weights.append(action)
        gross.append(info["gross_return"])
        costs.append(info["cost"])
        nets_.append(info["net_return"])
        values.append(info["value"])
        rewards.append(reward)
    return BacktestResult(
        dates=dates,
        weights=np.array(weights),
        gross_returns=np.array(gross),
        costs=np.array(costs),
        net_returns=np.array(nets_),
        values=np.array(values),
        rewards=np.array(rewards),
        start_date=start_date,
        initial_value=v0,
    )


def component_names(tickers: tuple[str, ...], include_cash: bool) -> list[str]:
    return (["CASH"] if include_cash else []) + list(tickers)


def write_trace_csv(path: str | Path, result: BacktestResult, names: list[str]) -> None:
    header = ["date"] + [f"w_{n}" for n in names] + [
        "gross_return", "cost", "net_return", "value", "reward"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, day in enumerate(result.dates):
            row = [day.isoformat()]
            row += [repr(float(w)) for w in result.weights[i]]
            row += [repr(float(x)) for x in (
                result.gross_returns[i], result.costs[i],
                result.net_returns[i], result.values[i], result.rewards[i])]
            writer.writerow(row)


def result_report(result: BacktestResult, names: list[str],
                  r_f: float = 0.0, lam: float = 1.0) -> MetricsReport:
    return build_report(
        net_returns=result.net_returns,
        values=result.value_path(),
        weight_rows=result.weights,
        component_names=names,
        r_f=r_f,
        lam=lam,
    )
