import math

import numpy as np
import pytest

from src.core.errors import DimensionMismatchError
from src.core.rl.actor_critic import ActorCriticModel, gaussian_entropy, gaussian_log_prob, orthogonal
from src.core.rl.adam import Adam, clip_grad_norm


def test_orthogonal_columns(rng):
    w = orthogonal(5, 3, 2.0, rng)
    np.testing.assert_allclose(w.T @ w, 4.0 * np.eye(3), atol=1e-12)
    w = orthogonal(3, 5, 1.0, rng)
    np.testing.assert_allclose(w @ w.T, np.eye(3), atol=1e-12)


def test_log_prob_integrates_to_one():
    grid = np.linspace(-12.0, 12.0, 200_001)
    log_std = np.array([math.log(1.7)])
    density = np.exp(gaussian_log_prob(grid[:, None], np.array([0.3]), log_std))
    assert density.sum() * (grid[1] - grid[0]) == pytest.approx(1.0, abs=1e-6)


def test_log_prob_sums_over_components():
    actions = np.array([[0.5, -1.0]])
    mean = np.array([[0.0, 0.0]])
    log_std = np.array([0.0, math.log(2.0)])
    expected = (-0.125 - 0.5 * math.log(2 * math.pi)) + (-0.125 - math.log(2.0) - 0.5 * math.log(2 * math.pi))
    assert gaussian_log_prob(actions, mean, log_std)[0] == pytest.approx(expected, abs=1e-12)


def test_entropy_of_standard_normal():
    assert gaussian_entropy(np.zeros(1)) == pytest.approx(0.5 * math.log(2 * math.pi * math.e))


def test_initialization_shapes(rng):
    model = ActorCriticModel.initialize(2, 1.0, rng, (64, 64))
    assert model.params["policy.w0"].shape == (2, 64)
    assert model.params["policy.w2"].shape == (64, 2)
    assert model.params["value.w2"].shape == (64, 1)
    np.testing.assert_array_equal(model.log_std, np.zeros(2))
    # голова политики почти нулевая, поэтому начальное среднее близко к нулю
    assert np.all(np.abs(model.policy_forward(np.array([3.0, -3.0]))[0]) < 0.1)


def test_single_and_batch_forward_agree(rng):
    model = ActorCriticModel.initialize(2, 1.0, rng, (8, 8))
    states = rng.uniform(-5.0, 5.0, size=(6, 2))
    batch_mean, _ = model.policy_forward(states)
    batch_values = model.value_forward(states)
    for i, state in enumerate(states):
        np.testing.assert_allclose(model.policy_forward(state)[0], batch_mean[i], rtol=1e-12)
        assert model.value_forward(state) == pytest.approx(batch_values[i], rel=1e-12)


def test_sampling_statistics(rng):
    model = ActorCriticModel.initialize(1, 1.0, rng, (8, 8))
    model.params["policy.log_std"] = np.array([math.log(0.5)])
    states = np.zeros((20_000, 1))
    actions, log_probs = model.sample_action(states, rng)
    mean, _ = model.policy_forward(states[0])
    assert actions.mean() == pytest.approx(mean[0], abs=0.02)
    assert actions.std() == pytest.approx(0.5, abs=0.02)
    np.testing.assert_allclose(log_probs, gaussian_log_prob(actions, mean, model.log_std), rtol=1e-12)


def test_deterministic_action_is_clipped(rng):
    model = ActorCriticModel.initialize(1, 0.5, rng, (4, 4))
    model.params["policy.b2"] = np.array([3.0])
    assert model.predict_deterministic(np.array([0.0])) == pytest.approx([0.5])


def test_dimension_checked(rng):
    model = ActorCriticModel.initialize(2, 1.0, rng, (4,))
    with pytest.raises(DimensionMismatchError):
        model.policy_forward(np.zeros(3))


def test_clip_grad_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_grad_norm(grads, 0.5) == pytest.approx(5.0)
    total = math.sqrt(float(grads["a"][0] ** 2 + grads["b"][0] ** 2))
    assert total == pytest.approx(0.5, rel=1e-5)

    small = {"a": np.array([0.1])}
    clip_grad_norm(small, 0.5)
    assert small["a"][0] == 0.1


def test_adam_first_step_moves_by_learning_rate():
    params = {"w": np.array([1.0, -1.0])}
    Adam(params, learning_rate=0.01).step({"w": np.array([2.0, -0.5])})
    np.testing.assert_allclose(params["w"], [0.99, -0.99], atol=1e-6)
