"""Shared agent machinery: transitions, replay buffer, OU noise, soft updates.

All agents expose the same act/observe/update surface so the training and
backtest loops never branch on the agent kind.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from ..data import FeatureWindow
from ..environment import EnvState
from ..nn import ParamSet, ParamMismatchError


class NotEnoughSamplesError(RuntimeError):
    def __init__(self, have: int, want: int):
        super().__init__(f"buffer holds {have} transitions, batch needs {want}")
        self.have = have
        self.want = want


@dataclass(frozen=True)
class Transition:
    window: FeatureWindow
    weights: np.ndarray
    action: np.ndarray
    reward: float
    next_window: FeatureWindow
    next_weights: np.ndarray
    done: bool

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError("non-finite reward")


def transition_from(state: EnvState, action: np.ndarray, reward: float,
                    next_state: EnvState, done: bool) -> Transition:
    return Transition(
        window=state.window,
        weights=state.weights,
        action=np.asarray(action, dtype=float),
        reward=float(reward),
        next_window=next_state.window,
        next_weights=next_state.weights,
        done=done,
    )


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform sampling (with replacement)."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._storage)

    def push(self, transition: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
        else:
            self._storage[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        if len(self._storage) < batch:
            raise NotEnoughSamplesError(len(self._storage), batch)
        idx = rng.integers(0, len(self._storage), size=batch)
        return [self._storage[i] for i in idx]

    def items(self) -> list[Transition]:
        """Current contents, oldest first."""
        return self._storage[self._cursor:] + self._storage[: self._cursor]


def batch_arrays(batch: list[Transition]) -> dict[str, np.ndarray]:
    """Stack a sampled minibatch into the dense arrays the networks expect."""
    return {
        "windows": np.stack([t.window.values for t in batch]),
        "weights": np.stack([t.weights for t in batch]),
        "actions": np.stack([t.action for t in batch]),
        "rewards": np.array([t.reward for t in batch]),
        "next_windows": np.stack([t.next_window.values for t in batch]),
        "next_weights": np.stack([t.next_weights for t in batch]),
        "dones": np.array([float(t.done) for t in batch]),
    }


class OuNoise:
    """Ornstein-Uhlenbeck noise, stepped with the exact Gauss-Markov update.

    x_{t+dt} = mu + (x_t - mu) e^{-theta dt} + sigma sqrt((1 - e^{-2 theta dt}) / (2 theta)) eps

    so the discrete chain has the continuous process's stationary variance
    sigma^2 / (2 theta) regardless of dt (an Euler step overshoots it).
    """

    def __init__(self, dim: int, mu: float = 0.0, sigma: float = 0.3,
                 theta: float = 0.20, dt: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        if theta < 0.0 or sigma < 0.0 or dt <= 0.0:
            raise ValueError("theta and sigma must be >= 0, dt > 0")
        self.dim = dim
        self.mu = mu
        self.sigma = sigma
        self.theta = theta
        self.dt = dt
        if theta > 0.0:
            self._decay = math.exp(-theta * dt)
            self._scale = sigma * math.sqrt((1.0 - self._decay**2) / (2.0 * theta))
        else:
            self._decay = 1.0
            self._scale = sigma * math.sqrt(dt)
        self.x = np.full(dim, mu)

    def reset(self) -> None:
        self.x = np.full(self.dim, self.mu)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        eps = rng.standard_normal(self.dim)
        self.x = self.mu + (self.x - self.mu) * self._decay + self._scale * eps
        return self.x.copy()

    def state_manifest(self) -> dict:
        return {"x": self.x.tolist()}

    def load_state(self, manifest: dict) -> None:
        x = np.array(manifest["x"], dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"noise state has shape {x.shape}, expected ({self.dim},)")
        self.x = x


def soft_update(target: ParamSet, online: ParamSet, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, element-wise and in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if target.names() != online.names():
        raise ParamMismatchError("parameter names differ between target and online sets")
    for name in target.names():
        t, o = target[name], online[name]
        if t.data.shape != o.data.shape:
            raise ParamMismatchError(f"shape mismatch for {name!r}")
        t.data *= 1.0 - tau
        t.data += tau * o.data


class BaseAgent(abc.ABC):
    """Common act/observe/update contract for every portfolio agent."""

    name: str = "base"

    @abc.abstractmethod
    def act(self, state: EnvState, explore: bool = False) -> np.ndarray:
        """Return a simplex-valid weight vector for the given state."""

    def begin_episode(self) -> None:
        """Hook called at each episode start (e.g. to reset exploration noise)."""

    def observe(self, transition: Transition) -> None:
        """Record a transition; no-op for agents that do not learn."""

    def update(self) -> dict[str, float]:
        """One optimization step; returns named losses (empty if not learning)."""
        return {}

    def checkpoint_manifest(self) -> dict:
        """JSON-serializable snapshot of all learnable state."""
        return {}

    def load_manifest(self, manifest: dict) -> None:
        if manifest:
            raise ValueError(f"agent {self.name!r} does not accept checkpoint data")
