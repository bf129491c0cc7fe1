"""Episode loop for the learning agents.

One update per environment step once the buffer can fill a batch; episodes
end at data exhaustion or the configured step cap, whichever comes first.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .agents.base import BaseAgent, NotEnoughSamplesError, transition_from
from .environment import PortfolioEnv


def run_episode(env: PortfolioEnv, agent: BaseAgent, max_steps: int | None = None,
                explore: bool = True, learn: bool = True) -> dict:
    """Roll one episode; returns reward sum, step count, and mean losses."""
    state = env.reset()
    agent.begin_episode()
    reward_sum = 0.0
    steps = 0
    loss_sums: dict[str, float] = {}
    n_updates = 0
    done = False
    while not done and (max_steps is None or steps < max_steps):
        action = agent.act(state, explore=explore)
        next_state, reward, done, _ = env.step(state, action)
        if learn:
            agent.observe(transition_from(state, action, reward, next_state, done))
            try:
                losses = agent.update()
            except NotEnoughSamplesError:
                losses = {}
            for key, value in losses.items():
                loss_sums[key] = loss_sums.get(key, 0.0) + value
            if losses:
                n_updates += 1
        state = next_state
        reward_sum += reward
        steps += 1
    record = {"steps": steps, "reward_sum": reward_sum, "final_value": state.value}
    for key, total in loss_sums.items():
        record[f"mean_{key}"] = total / n_updates
    return record


def train_agent(env: PortfolioEnv, agent: BaseAgent, episodes: int,
                steps_per_episode: int | None = None) -> list[dict]:
    log = []
    for episode in range(episodes):
        record = run_episode(env, agent, max_steps=steps_per_episode)
        record["episode"] = episode
        log.append(record)
    return log


def write_training_log(path: str | Path, log: list[dict]) -> None:
    """Training curve as CSV; full-precision floats so reruns diff cleanly."""
    keys: list[str] = ["episode", "steps", "reward_sum", "final_value"]
    extra = sorted({k for row in log for k in row} - set(keys))
    keys += extra
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in log:
            writer.writerow([_fmt(row.get(k, "")) for k in keys])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
