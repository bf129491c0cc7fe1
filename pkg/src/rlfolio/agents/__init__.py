"""Trading agents: shared machinery plus DDPG, SAC, and a mean-variance baseline."""

from .base import (
    BaseAgent,
    NotEnoughSamplesError,
    OuNoise,
    ReplayBuffer,
    Transition,
    batch_arrays,
    soft_update,
    transition_from,
)

__all__ = [
    "BaseAgent",
    "NotEnoughSamplesError",
    "OuNoise",
    "ReplayBuffer",
    "Transition",
    "batch_arrays",
    "soft_update",
    "transition_from",
]
