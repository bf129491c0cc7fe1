"""Replay buffer, exploration noise, target tracking, and the three agents."""

import math

import numpy as np
import pytest

from conftest import frame_features, synthetic_frame
from rlfolio import networks as nets
from rlfolio import nn
from rlfolio.data import FeatureWindow
from rlfolio.agents import (
    NotEnoughSamplesError,
    OuNoise,
    ReplayBuffer,
    Transition,
    soft_update,
    transition_from,
)
from rlfolio.agents.ddpg import DdpgAgent
from rlfolio.agents.mpt import MptAgent
from rlfolio.agents.sac import SacAgent
from rlfolio.environment import EnvConfig, PortfolioEnv, validate_simplex

WINDOW = 6
NET = nets.NetConfig(n_assets=2, window=WINDOW, hidden=8, lstm_layers=1)


def _make_env(n_days=24, seed=0):
    frame = synthetic_frame(n_days=n_days, n_assets=2, seed=seed)
    env = PortfolioEnv(frame, frame_features(frame), EnvConfig(window=WINDOW))
    return frame, env


def _fake_transition(k, n_assets=2, seq=WINDOW - 1, done=False):
    rng = np.random.default_rng(k)
    win = FeatureWindow(values=rng.normal(size=(n_assets, seq, 5)), end_index=seq)
    nxt = FeatureWindow(values=rng.normal(size=(n_assets, seq, 5)), end_index=seq + 1)
    w = np.full(n_assets + 1, 1.0 / (n_assets + 1))
    return Transition(
        window=win, weights=w, action=w.copy(), reward=float(k),
        next_window=nxt, next_weights=w.copy(), done=done,
    )


def _rollout(env, agent, n, rng):
    state = env.reset()
    out = []
    for _ in range(n):
        action = agent.act(state, explore=True)
        nxt, reward, done, _ = env.step(state, action)
        out.append(transition_from(state, action, reward, nxt, done))
        state = env.reset() if done else nxt
    return out


# ---------------------------------------------------------------------------
# replay buffer


def test_buffer_fifo_eviction():
    buf = ReplayBuffer(capacity=3)
    for k in range(4):
        buf.push(_fake_transition(k))
    assert len(buf) == 3
    assert [t.reward for t in buf.items()] == [1.0, 2.0, 3.0]  # oldest first


def test_buffer_sample_requires_enough():
    buf = ReplayBuffer(capacity=10)
    buf.push(_fake_transition(0))
    with pytest.raises(NotEnoughSamplesError):
        buf.sample(2, np.random.default_rng(0))
    got = buf.sample(1, np.random.default_rng(0))
    assert got[0] is buf.items()[0]


def test_buffer_sample_draws_with_replacement():
    buf = ReplayBuffer(capacity=4)
    for k in range(4):
        buf.push(_fake_transition(k))
    rng = np.random.default_rng(1)
    batches = [buf.sample(4, rng) for _ in range(16)]
    seen = {t.reward for batch in batches for t in batch}
    assert seen == {0.0, 1.0, 2.0, 3.0}
    assert any(len({id(t) for t in batch}) < 4 for batch in batches)  # repeats occur


def test_transition_rejects_nonfinite_reward():
    with pytest.raises(ValueError):
        t = _fake_transition(0)
        Transition(window=t.window, weights=t.weights, action=t.action,
                   reward=float("nan"), next_window=t.next_window,
                   next_weights=t.next_weights, done=False)


def test_transition_from_env_state():
    _, env = _make_env()
    state = env.reset()
    action = np.array([0.2, 0.3, 0.5])
    nxt, reward, done, _ = env.step(state, action)
    tr = transition_from(state, action, reward, nxt, done)
    assert tr.window is state.window  # shares the view, no copy
    assert tr.next_window is nxt.window
    np.testing.assert_array_equal(tr.action, action)
    assert tr.reward == reward and tr.done == done


# ---------------------------------------------------------------------------
# soft target updates


def _two_paramsets():
    rng = np.random.default_rng(5)
    online, target = nn.ParamSet(), nn.ParamSet()
    for pset in (online, target):
        nn.init_dense(pset, "d", 3, 2, rng)
    return target, online


@pytest.mark.parametrize("tau", [0.0, 1e-3, 1.0])
def test_soft_update_exact_blend(tau):
    target, online = _two_paramsets()
    before = {n: t.data.copy() for n, t in target.items()}
    soft_update(target, online, tau)
    for name, tensor in target.items():
        expected = (1.0 - tau) * before[name] + tau * online[name].data
        np.testing.assert_allclose(tensor.data, expected, atol=1e-16, rtol=0.0)
    if tau == 1.0:
        for name, tensor in target.items():
            assert np.array_equal(tensor.data, online[name].data)
    if tau == 0.0:
        for name, tensor in target.items():
            assert np.array_equal(tensor.data, before[name])


def test_soft_update_rejects_mismatched_sets():
    rng = np.random.default_rng(6)
    a, b = nn.ParamSet(), nn.ParamSet()
    nn.init_dense(a, "x", 2, 2, rng)
    nn.init_dense(b, "y", 2, 2, rng)
    with pytest.raises(nn.ParamMismatchError):
        soft_update(a, b, 0.5)


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck noise


def test_ou_deterministic_decay_matches_exponential():
    noise = OuNoise(dim=1, mu=0.0, sigma=0.0, theta=0.2, dt=1.0)
    noise.load_state({"x": [1.0]})
    x1 = noise.sample(np.random.default_rng(0))
    assert x1[0] == pytest.approx(math.exp(-0.2), abs=1e-15)
    x2 = noise.sample(np.random.default_rng(0))
    assert x2[0] == pytest.approx(math.exp(-0.4), abs=1e-15)


def test_ou_reset_returns_to_mean():
    noise = OuNoise(dim=3, mu=0.5, sigma=0.3)
    noise.sample(np.random.default_rng(1))
    noise.reset()
    np.testing.assert_array_equal(noise.x, np.full(3, 0.5))


def test_ou_stationary_spread_sanity():
    noise = OuNoise(dim=1, mu=0.0, sigma=0.3, theta=0.2)
    rng = np.random.default_rng(2)
    draws = np.array([noise.sample(rng)[0] for _ in range(20_000)])
    target = 0.3 / math.sqrt(2 * 0.2)
    assert draws[1000:].std() == pytest.approx(target, rel=0.05)


def test_ou_zero_theta_is_random_walk_step():
    noise = OuNoise(dim=1, mu=0.0, sigma=0.7, theta=0.0, dt=1.0)
    rng = np.random.default_rng(3)
    first = noise.sample(rng)[0]
    eps = np.random.default_rng(3).standard_normal(1)[0]
    assert first == pytest.approx(0.7 * eps, abs=1e-15)


def test_ou_manifest_roundtrip():
    noise = OuNoise(dim=2)
    noise.sample(np.random.default_rng(4))
    saved = noise.state_manifest()
    other = OuNoise(dim=2)
    other.load_state(saved)
    np.testing.assert_array_equal(other.x, noise.x)


# ---------------------------------------------------------------------------
# DDPG agent


def test_ddpg_act_is_valid_and_deterministic_when_greedy():
    _, env = _make_env()
    agent = DdpgAgent(NET, np.random.default_rng(0))
    state = env.reset()
    a1 = agent.act(state)
    a2 = agent.act(state)
    validate_simplex(a1, 3)
    np.testing.assert_array_equal(a1, a2)


def test_ddpg_exploration_perturbs_action():
    _, env = _make_env()
    agent = DdpgAgent(NET, np.random.default_rng(0), ou_sigma=0.5)
    state = env.reset()
    greedy = agent.act(state, explore=False)
    noisy = agent.act(state, explore=True)
    validate_simplex(noisy, 3)
    assert not np.allclose(greedy, noisy)


def test_ddpg_update_needs_batch():
    agent = DdpgAgent(NET, np.random.default_rng(0), batch_size=4)
    with pytest.raises(NotEnoughSamplesError):
        agent.update()


def test_ddpg_update_trains_and_tracks_targets():
    _, env = _make_env()
    agent = DdpgAgent(NET, np.random.default_rng(1), batch_size=4, tau=0.5)
    for tr in _rollout(env, agent, 6, np.random.default_rng(2)):
        agent.observe(tr)
    actor_before = {n: t.data.copy() for n, t in agent.actor.items()}
    losses = agent.update()
    assert set(losses) >= {"critic_loss", "actor_loss"}
    assert all(np.isfinite(v) for v in losses.values())
    moved = any(not np.array_equal(agent.actor[n].data, actor_before[n])
                for n in agent.actor.names())
    assert moved
    for name, tensor in agent.target_critic.items():
        assert not tensor.requires_grad or tensor.grad is None or not tensor.grad.any()
    # with tau=0.5 the target nets must sit strictly between old target and online
    for name, tensor in agent.target_actor.items():
        online = agent.actor[name].data
        assert not np.array_equal(tensor.data, online)


def test_ddpg_update_leaves_no_critic_grad_pollution():
    _, env = _make_env()
    agent = DdpgAgent(NET, np.random.default_rng(3), batch_size=4)
    for tr in _rollout(env, agent, 5, np.random.default_rng(4)):
        agent.observe(tr)
    agent.update()
    for tensor in agent.critic.tensors():
        assert tensor.grad is None or not np.asarray(tensor.grad).any()


def test_ddpg_checkpoint_roundtrip():
    _, env = _make_env()
    agent = DdpgAgent(NET, np.random.default_rng(5), batch_size=4)
    for tr in _rollout(env, agent, 5, np.random.default_rng(6)):
        agent.observe(tr)
    agent.update()
    state = env.reset()
    clone = DdpgAgent(NET, np.random.default_rng(99), batch_size=4)
    clone.load_manifest(agent.checkpoint_manifest())
    np.testing.assert_array_equal(clone.act(state), agent.act(state))


# ---------------------------------------------------------------------------
# SAC agent


def test_sac_act_greedy_deterministic_and_exploring_stochastic():
    _, env = _make_env()
    agent = SacAgent(NET, np.random.default_rng(0))
    state = env.reset()
    g1, g2 = agent.act(state), agent.act(state)
    np.testing.assert_array_equal(g1, g2)
    validate_simplex(g1, 3)
    e1, e2 = agent.act(state, explore=True), agent.act(state, explore=True)
    validate_simplex(e1, 3)
    validate_simplex(e2, 3)
    assert not np.allclose(e1, e2)


def test_sac_default_target_entropy_and_alpha():
    agent = SacAgent(NET, np.random.default_rng(0))
    assert agent.target_entropy == -3.0
    assert agent.alpha == pytest.approx(1.0, abs=1e-15)


def test_sac_update_adjusts_all_heads():
    _, env = _make_env()
    agent = SacAgent(NET, np.random.default_rng(1), batch_size=4, tau=0.1)
    for tr in _rollout(env, agent, 6, np.random.default_rng(2)):
        agent.observe(tr)
    alpha_before = agent.alpha
    losses = agent.update()
    expected = {"q1_loss", "q2_loss", "value_loss", "actor_loss", "alpha_loss", "alpha"}
    assert expected <= set(losses)
    assert all(np.isfinite(v) for v in losses.values())
    assert agent.alpha != alpha_before  # log-alpha is trained
    for name, tensor in agent.target_value.items():
        assert not np.array_equal(tensor.data, agent.value[name].data)


def test_sac_checkpoint_roundtrip_preserves_alpha_and_policy():
    _, env = _make_env()
    agent = SacAgent(NET, np.random.default_rng(3), batch_size=4)
    for tr in _rollout(env, agent, 5, np.random.default_rng(4)):
        agent.observe(tr)
    agent.update()
    clone = SacAgent(NET, np.random.default_rng(77), batch_size=4)
    clone.load_manifest(agent.checkpoint_manifest())
    assert clone.alpha == pytest.approx(agent.alpha, abs=1e-15)
    state = env.reset()
    np.testing.assert_array_equal(clone.act(state), agent.act(state))


def test_checkpoint_kind_is_checked():
    ddpg = DdpgAgent(NET, np.random.default_rng(0))
    sac = SacAgent(NET, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sac.load_manifest(ddpg.checkpoint_manifest())


# ---------------------------------------------------------------------------
# mean-variance benchmark agent


def test_mpt_agent_emits_simplex_with_idle_cash():
    frame, env = _make_env(n_days=40)
    agent = MptAgent(frame, include_cash=True, lookback=10)
    state = env.reset()
    action = agent.act(state)
    validate_simplex(action, 3)
    assert action[0] == 0.0  # never parks value in cash
    assert agent.update() == {}  # nothing to learn


def test_mpt_agent_shrinks_early_lookback():
    frame, env = _make_env(n_days=40)
    agent = MptAgent(frame, include_cash=True, lookback=1000)
    action = agent.act(env.reset())  # fewer days than lookback are available
    validate_simplex(action, 3)
