"""Soft actor-critic with twin Q-networks, a state-value network, and a
learnable entropy temperature.

The actor is a tanh-squashed Gaussian whose output is projected onto the
simplex with a scaled softmax; its log-density covers the squash but not the
projection. One reparameterized sample per update serves three purposes:
detached, it builds the value target min_j Q_j(s, a~) - alpha * log pi; live,
it carries the actor loss; its log-prob alone drives the temperature loss.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .. import networks as nets
from .. import nn
from ..environment import EnvState
from .base import BaseAgent, ReplayBuffer, Transition, batch_arrays, soft_update


class SacAgent(BaseAgent):
    name = "sac"

    def __init__(
        self,
        net_config: nets.NetConfig,
        rng: np.random.Generator,
        gamma: float = 0.99,
        tau: float = 1e-3,
        actor_lr: float = 3e-4,
        critic_lr: float = 3e-4,
        value_lr: float = 3e-4,
        alpha_lr: float = 1e-3,
        initial_alpha: float = 1.0,
        target_entropy: float | None = None,
        batch_size: int = 64,
        buffer_capacity: int = 100_000,
    ):
        if initial_alpha <= 0.0:
            raise ValueError("initial_alpha must be positive")
        self.cfg = net_config
        self.rng = rng
        self.gamma = gamma
        self.tau = tau
        self.batch_size = batch_size
        self.target_entropy = (
            float(target_entropy) if target_entropy is not None
            else -float(net_config.n_components)
        )

        self.actor = nets.build_sac_actor(net_config, rng)
        self.critic1 = nets.build_critic(net_config, rng)
        self.critic2 = nets.build_critic(net_config, rng)
        self.value = nets.build_value_net(net_config, rng)
        self.target_value = self.value.copy()

        self.log_alpha = nn.ParamSet()
        self.log_alpha.add("log_alpha",
                           ad.Tensor(np.array(np.log(initial_alpha)), requires_grad=True))

        self.actor_opt = nn.Adam(self.actor, lr=actor_lr)
        self.critic1_opt = nn.Adam(self.critic1, lr=critic_lr)
        self.critic2_opt = nn.Adam(self.critic2, lr=critic_lr)
        self.value_opt = nn.Adam(self.value, lr=value_lr)
        self.alpha_opt = nn.Adam(self.log_alpha, lr=alpha_lr)

        self.buffer = ReplayBuffer(buffer_capacity)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha["log_alpha"].data))

    def act(self, state: EnvState, explore: bool = False) -> np.ndarray:
        windows = state.window.values[None]
        weights = state.weights[None]
        with ad.no_grad():
            if explore:
                noise = self.rng.standard_normal((1, self.cfg.n_components))
                action, _ = nets.sac_actor_sample(self.actor, windows, weights, self.cfg, noise)
            else:
                action = nets.sac_actor_mean_action(self.actor, windows, weights, self.cfg)
        return action.data[0].copy()

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def update(self) -> dict[str, float]:
        batch = batch_arrays(self.buffer.sample(self.batch_size, self.rng))
        alpha_now = self.alpha

        # Critic target: bootstrap through the slow value copy.
        with ad.no_grad():
            v_next = nets.value_v(self.target_value, batch["next_windows"],
                                  batch["next_weights"], self.cfg)
            y_q = batch["rewards"] + self.gamma * (1.0 - batch["dones"]) * v_next.data[:, 0]

        # One live sample from the current policy.
        noise = self.rng.standard_normal((self.batch_size, self.cfg.n_components))
        action_new, log_prob = nets.sac_actor_sample(
            self.actor, batch["windows"], batch["weights"], self.cfg, noise)
        q1_new = nets.critic_q(self.critic1, batch["windows"], batch["weights"],
                               action_new, self.cfg)
        q2_new = nets.critic_q(self.critic2, batch["windows"], batch["weights"],
                               action_new, self.cfg)
        q_min = ad.minimum(q1_new, q2_new)

        # Detached snapshots for the value and temperature targets.
        log_prob_d = log_prob.data.copy()
        y_v = q_min.data[:, 0] - alpha_now * log_prob_d

        actor_loss = ad.tmean(alpha_now * log_prob - ad.reshape(q_min, (self.batch_size,)))
        self.actor.zero_grad()
        ad.backward(actor_loss)
        self.actor_opt.step()
        # The actor pass routed gradients through both critics; discard them.
        self.critic1.zero_grad()
        self.critic2.zero_grad()

        q1 = nets.critic_q(self.critic1, batch["windows"], batch["weights"],
                           batch["actions"], self.cfg)
        q1_loss = ad.tmean(ad.square(q1 - ad.Tensor(y_q[:, None])))
        ad.backward(q1_loss)
        self.critic1_opt.step()

        q2 = nets.critic_q(self.critic2, batch["windows"], batch["weights"],
                           batch["actions"], self.cfg)
        q2_loss = ad.tmean(ad.square(q2 - ad.Tensor(y_q[:, None])))
        ad.backward(q2_loss)
        self.critic2_opt.step()

        v = nets.value_v(self.value, batch["windows"], batch["weights"], self.cfg)
        value_loss = ad.tmean(ad.square(v - ad.Tensor(y_v[:, None])))
        self.value.zero_grad()
        ad.backward(value_loss)
        self.value_opt.step()

        entropy_gap = float(np.mean(log_prob_d + self.target_entropy))
        alpha_loss = -(self.log_alpha["log_alpha"] * entropy_gap)
        self.log_alpha.zero_grad()
        ad.backward(alpha_loss)
        self.alpha_opt.step()

        soft_update(self.target_value, self.value, self.tau)

        return {
            "q1_loss": q1_loss.item(),
            "q2_loss": q2_loss.item(),
            "value_loss": value_loss.item(),
            "actor_loss": actor_loss.item(),
            "alpha_loss": alpha_loss.item(),
            "alpha": self.alpha,
        }

    def checkpoint_manifest(self) -> dict:
        return {
            "kind": self.name,
            "actor": self.actor.to_manifest(),
            "critic1": self.critic1.to_manifest(),
            "critic2": self.critic2.to_manifest(),
            "value": self.value.to_manifest(),
            "target_value": self.target_value.to_manifest(),
            "log_alpha": self.log_alpha.to_manifest(),
            "actor_opt": self.actor_opt.state.to_manifest(),
            "critic1_opt": self.critic1_opt.state.to_manifest(),
            "critic2_opt": self.critic2_opt.state.to_manifest(),
            "value_opt": self.value_opt.state.to_manifest(),
            "alpha_opt": self.alpha_opt.state.to_manifest(),
        }

    def load_manifest(self, manifest: dict) -> None:
        if manifest.get("kind") != self.name:
            raise ValueError(f"checkpoint kind {manifest.get('kind')!r} is not {self.name!r}")
        self.actor.copy_from(nn.ParamSet.from_manifest(manifest["actor"]))
        self.critic1.copy_from(nn.ParamSet.from_manifest(manifest["critic1"]))
        self.critic2.copy_from(nn.ParamSet.from_manifest(manifest["critic2"]))
        self.value.copy_from(nn.ParamSet.from_manifest(manifest["value"]))
        self.target_value.copy_from(nn.ParamSet.from_manifest(manifest["target_value"]))
        self.log_alpha.copy_from(nn.ParamSet.from_manifest(manifest["log_alpha"]))
        self.actor_opt.state = nn.AdamState.from_manifest(manifest["actor_opt"])
        self.critic1_opt.state = nn.AdamState.from_manifest(manifest["critic1_opt"])
        self.critic2_opt.state = nn.AdamState.from_manifest(manifest["critic2_opt"])
        self.value_opt.state = nn.AdamState.from_manifest(manifest["value_opt"])
        self.alpha_opt.state = nn.AdamState.from_manifest(manifest["alpha_opt"])
