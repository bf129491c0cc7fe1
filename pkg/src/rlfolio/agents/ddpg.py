"""Deterministic policy-gradient agent: one actor, one critic, target copies.

Exploration adds OU noise to the actor's pre-softmax logits, so even noisy
actions land on the simplex by construction. Updates follow the classic
recipe: critic regresses to r + gamma * Q'(s', mu'(s')), actor ascends
Q(s, mu(s)), then both targets take a soft step toward the online nets.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .. import networks as nets
from .. import nn
from ..environment import EnvState
from .base import BaseAgent, OuNoise, ReplayBuffer, Transition, batch_arrays, soft_update


class DdpgAgent(BaseAgent):
    name = "ddpg"

    def __init__(
        self,
        net_config: nets.NetConfig,
        rng: np.random.Generator,
        gamma: float = 0.99,
        tau: float = 1e-3,
        actor_lr: float = 3e-4,
        critic_lr: float = 3e-4,
        batch_size: int = 64,
        buffer_capacity: int = 100_000,
        ou_mu: float = 0.0,
        ou_sigma: float = 0.3,
        ou_theta: float = 0.20,
    ):
        self.cfg = net_config
        self.rng = rng
        self.gamma = gamma
        self.tau = tau
        self.batch_size = batch_size

        self.actor = nets.build_ddpg_actor(net_config, rng)
        self.critic = nets.build_critic(net_config, rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()

        self.actor_opt = nn.Adam(self.actor, lr=actor_lr)
        self.critic_opt = nn.Adam(self.critic, lr=critic_lr)

        self.noise = OuNoise(net_config.n_components, mu=ou_mu, sigma=ou_sigma, theta=ou_theta)
        self.buffer = ReplayBuffer(buffer_capacity)

    def begin_episode(self) -> None:
        self.noise.reset()

    def act(self, state: EnvState, explore: bool = False) -> np.ndarray:
        windows = state.window.values[None]
        weights = state.weights[None]
        noise = self.noise.sample(self.rng)[None] if explore else None
        with ad.no_grad():
            action = nets.ddpg_actor_action(self.actor, windows, weights, self.cfg, noise=noise)
        return action.data[0].copy()

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def update(self) -> dict[str, float]:
        batch = batch_arrays(self.buffer.sample(self.batch_size, self.rng))

        # Bootstrapped critic target from the frozen copies.
        with ad.no_grad():
            next_action = nets.ddpg_actor_action(
                self.target_actor, batch["next_windows"], batch["next_weights"], self.cfg)
            q_next = nets.critic_q(
                self.target_critic, batch["next_windows"], batch["next_weights"],
                next_action.data, self.cfg)
            y = batch["rewards"] + self.gamma * (1.0 - batch["dones"]) * q_next.data[:, 0]

        q = nets.critic_q(self.critic, batch["windows"], batch["weights"],
                          batch["actions"], self.cfg)
        critic_loss = ad.tmean(ad.square(q - ad.Tensor(y[:, None])))
        self.critic.zero_grad()
        ad.backward(critic_loss)
        self.critic_opt.step()

        # Actor ascends the critic's value of its own action; the critic's
        # parameters pick up gradients here too, so they are re-zeroed after.
        action = nets.ddpg_actor_action(self.actor, batch["windows"], batch["weights"], self.cfg)
        q_pi = nets.critic_q(self.critic, batch["windows"], batch["weights"], action, self.cfg)
        actor_loss = -ad.tmean(q_pi)
        self.actor.zero_grad()
        ad.backward(actor_loss)
        self.actor_opt.step()
        self.critic.zero_grad()

        soft_update(self.target_actor, self.actor, self.tau)
        soft_update(self.target_critic, self.critic, self.tau)

        return {"critic_loss": critic_loss.item(), "actor_loss": actor_loss.item()}

    def checkpoint_manifest(self) -> dict:
        return {
            "kind": self.name,
            "actor": self.actor.to_manifest(),
            "critic": self.critic.to_manifest(),
            "target_actor": self.target_actor.to_manifest(),
            "target_critic": self.target_critic.to_manifest(),
            "actor_opt": self.actor_opt.state.to_manifest(),
            "critic_opt": self.critic_opt.state.to_manifest(),
            "noise": self.noise.state_manifest(),
        }

    def load_manifest(self, manifest: dict) -> None:
        if manifest.get("kind") != self.name:
            raise ValueError(f"checkpoint kind {manifest.get('kind')!r} is not {self.name!r}")
        self.actor.copy_from(nn.ParamSet.from_manifest(manifest["actor"]))
        self.critic.copy_from(nn.ParamSet.from_manifest(manifest["critic"]))
        self.target_actor.copy_from(nn.ParamSet.from_manifest(manifest["target_actor"]))
        self.target_critic.copy_from(nn.ParamSet.from_manifest(manifest["target_critic"]))
        self.actor_opt.state = nn.AdamState.from_manifest(manifest["actor_opt"])
        self.critic_opt.state = nn.AdamState.from_manifest(manifest["critic_opt"])
        self.noise.load_state(manifest["noise"])
