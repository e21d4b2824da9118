import math

import numpy as np
import pytest

from src.core.errors import ConfigError
from src.core.rl.actor_critic import ActorCriticModel, gaussian_log_prob
from src.core.rl.ppo import PPOTrainer, TrainConfig, ppo_loss_and_grads
from src.core.rl.rollout_buffer import RolloutBuffer, compute_gae
from src.core.service.explorer_env import ExplorerEnv
from src.utils.vector_utils import STREAM_TRAIN_ENVS, VectorUtils


def test_gae_with_zero_lambda_is_one_step_td(rng):
    rewards = rng.uniform(size=(10, 3))
    values = rng.normal(size=(10, 3))
    dones = (rng.uniform(size=(10, 3)) < 0.3).astype(float)
    last = rng.normal(size=3)
    advantages, returns = compute_gae(rewards, values, dones, last, 0.9, 0.0)

    next_values = np.vstack([values[1:], last])
    np.testing.assert_allclose(advantages, rewards + 0.9 * next_values * (1 - dones) - values, rtol=1e-12)
    np.testing.assert_allclose(returns, advantages + values, rtol=1e-12)


def test_gae_zero_inputs():
    advantages, returns = compute_gae(np.zeros((5, 2)), np.zeros((5, 2)), np.zeros((5, 2)), np.zeros(2), 0.99, 0.95)
    np.testing.assert_array_equal(advantages, 0.0)
    np.testing.assert_array_equal(returns, 0.0)


def test_gae_hand_computed():
    rewards = np.array([1.0, 0.0, 1.0])
    values = np.array([0.5, 0.2, 0.1])
    dones = np.array([0.0, 0.0, 1.0])
    advantages, returns = compute_gae(rewards, values, dones, np.array(0.7), 0.9, 0.8)
    np.testing.assert_allclose(advantages, [1.06736, 0.538, 0.9], atol=1e-12)
    np.testing.assert_allclose(returns, [1.56736, 0.738, 1.0], atol=1e-12)


def test_gae_done_blocks_bootstrap():
    rewards = np.array([0.0, 1.0])
    values = np.array([0.3, 0.4])
    dones = np.array([1.0, 1.0])
    first, _ = compute_gae(rewards, values, dones, np.array(100.0), 0.99, 0.95)
    second, _ = compute_gae(rewards, values, dones, np.array(-100.0), 0.99, 0.95)
    np.testing.assert_array_equal(first, second)
    np.testing.assert_allclose(first, [-0.3, 0.6], atol=1e-12)


def test_rollout_buffer_flatten():
    buffer = RolloutBuffer(n_steps=2, n_envs=3, input_dim=2)
    for t in range(2):
        buffer.add(np.full((3, 2), t), np.zeros((3, 2)), np.zeros(3), np.ones(3), np.zeros(3), np.zeros(3))
    assert buffer.full
    buffer.finalize(np.zeros(3), 1.0, 1.0)
    data = buffer.flatten()
    assert data["states"].shape == (6, 2)
    np.testing.assert_allclose(data["advantages"], [2, 2, 2, 1, 1, 1])
    with pytest.raises(RuntimeError):
        buffer.add(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))


def _random_batch(model, rng, batch=6):
    states = rng.uniform(-3.0, 3.0, size=(batch, model.input_dim))
    mean, log_std = model.policy_forward(states)
    actions = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    old_log_probs = gaussian_log_prob(actions, mean, log_std) + rng.normal(scale=0.3, size=batch)
    advantages = rng.normal(size=batch)
    returns = rng.normal(size=batch)
    return states, actions, old_log_probs, advantages, returns


@pytest.mark.parametrize("trial", range(20))
def test_analytic_gradient_matches_finite_differences(trial):
    rng = np.random.default_rng(1000 + trial)
    model = ActorCriticModel.initialize(2, 1.0, rng, (5, 4))
    for name, value in model.params.items():
        model.params[name] = value + rng.normal(scale=0.3, size=value.shape)
    batch = _random_batch(model, rng)
    coefs = {"clip_range": 0.2, "value_coef": 0.5, "entropy_coef": 0.01}

    _, grads = ppo_loss_and_grads(model, *batch, **coefs)

    h = 1e-5
    analytic, numeric = [], []
    for name, value in model.params.items():
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + h
            plus = ppo_loss_and_grads(model, *batch, **coefs)[0].total_loss
            value[index] = original - h
            minus = ppo_loss_and_grads(model, *batch, **coefs)[0].total_loss
            value[index] = original
            analytic.append(grads[name][index])
            numeric.append((plus - minus) / (2 * h))

    analytic, numeric = np.array(analytic), np.array(numeric)
    error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    assert error < 1e-4


def test_loss_diagnostics_at_identical_policy(rng):
    model = ActorCriticModel.initialize(1, 1.0, rng, (4, 4))
    states, actions, _, advantages, returns = _random_batch(model, rng)
    old_log_probs = gaussian_log_prob(actions, *model.policy_forward(states))
    stats, _ = ppo_loss_and_grads(model, states, actions, old_log_probs, advantages, returns, 0.2, 0.5, 0.0)
    assert stats.clip_fraction == 0.0
    assert stats.approx_kl == pytest.approx(0.0, abs=1e-12)
    assert stats.policy_loss == pytest.approx(-advantages.mean(), abs=1e-12)


def test_zero_clip_range_blocks_policy_gradient(rng):
    model = ActorCriticModel.initialize(1, 1.0, rng, (4, 4))
    model.params["policy.w2"] = rng.normal(scale=0.5, size=model.params["policy.w2"].shape)
    states, actions, _, advantages, returns = _random_batch(model, rng, batch=32)
    current = gaussian_log_prob(actions, *model.policy_forward(states))

    # старая политика совпадает с текущей: при ε = 0 градиент политики ещё есть
    _, grads = ppo_loss_and_grads(model, states, actions, current, advantages, returns, 0.0, 0.5, 0.0)
    assert np.abs(grads["policy.w2"]).sum() > 0

    # каждое отношение вероятностей сдвинуто от 1 в выгодную сторону: все члены обрезаны
    shifted = current - np.sign(advantages) * 0.1
    stats, grads = ppo_loss_and_grads(model, states, actions, shifted, advantages, returns, 0.0, 0.5, 0.0)
    assert stats.clip_fraction == 1.0
    assert all(not np.any(grads[name]) for name in grads if name.startswith("policy."))
    assert stats.policy_loss == pytest.approx(-advantages.mean())


def _small_config(**overrides):
    values = {
        "total_timesteps": 128, "n_envs": 1, "n_steps": 64, "batch_size": 32,
        "n_epochs": 2, "hidden_sizes": (8, 8), "seed": 7,
    }
    values.update(overrides)
    return TrainConfig(**values)


def _env_factory(system, seed):
    def factory(index):
        return ExplorerEnv(system, 1.0, 20, VectorUtils.make_rng(seed, STREAM_TRAIN_ENVS, index))
    return factory


def test_update_count_and_metrics(system_1):
    config = _small_config()
    assert config.n_updates == 2
    seen = []
    result = PPOTrainer(_env_factory(system_1, 7), config, on_rollout=seen.append, progress=False).train()
    assert [m.timesteps for m in result.metrics] == [64, 128]
    assert seen == result.metrics
    assert result.model.is_finite()
    assert all(math.isfinite(m.policy_loss) and m.clip_fraction >= 0 for m in result.metrics)


def test_partial_rollout_rounds_up(system_1):
    config = _small_config(total_timesteps=100)
    assert config.n_updates == 2
    result = PPOTrainer(_env_factory(system_1, 7), config, progress=False).train()
    assert result.timesteps == 128
    assert result.metrics[-1].timesteps == result.timesteps


def test_training_is_deterministic(system_2):
    config = _small_config(n_envs=2, n_steps=32)
    first = PPOTrainer(_env_factory(system_2, 7), config, progress=False).train()
    second = PPOTrainer(_env_factory(system_2, 7), config, progress=False).train()
    threaded = PPOTrainer(
        _env_factory(system_2, 7), _small_config(n_envs=2, n_steps=32, rollout_workers=2), progress=False,
    ).train()
    for name, value in first.model.params.items():
        np.testing.assert_array_equal(value, second.model.params[name])
        np.testing.assert_array_equal(value, threaded.model.params[name])


def test_nothing_to_train():
    with pytest.raises(ConfigError, match="nothing to train"):
        _small_config(total_timesteps=0).validate()


@pytest.mark.parametrize("overrides", [
    {"total_timesteps": 10},
    {"batch_size": 0},
    {"gamma": 0.0},
    {"hidden_sizes": ()},
])
def test_invalid_train_config(overrides):
    with pytest.raises(ConfigError):
        _small_config(**overrides).validate()
