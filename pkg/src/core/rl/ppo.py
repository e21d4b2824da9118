import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from tqdm import tqdm

from config import (
    BATCH_SIZE,
    CLIP_RANGE,
    DEFAULT_SEED,
    ENTROPY_COEF,
    GAE_LAMBDA,
    GAMMA,
    HIDDEN_SIZES,
    LEARNING_RATE,
    MAX_GRAD_NORM,
    N_ENVS,
    N_EPOCHS,
    N_STEPS,
    ROLLOUT_WORKERS,
    TOTAL_TIMESTEPS,
    VALUE_COEF,
)
from src.core.errors import ConfigError, TrainingAbortedError
from src.core.rl.actor_critic import ActorCriticModel, Params, gaussian_entropy, gaussian_log_prob
from src.core.rl.adam import Adam, clip_grad_norm
from src.core.rl.rollout_buffer import RolloutBuffer
from src.core.service.explorer_env import ExplorerEnv, StepResult
from src.utils.vector_utils import STREAM_INIT, STREAM_POLICY, VectorUtils

logger = logging.getLogger(__name__)

EnvFactory = Callable[[int], ExplorerEnv]


@dataclass(frozen=True)
class TrainConfig:
    """Гиперпараметры PPO."""

    total_timesteps: int = TOTAL_TIMESTEPS
    n_envs: int = N_ENVS
    n_steps: int = N_STEPS
    batch_size: int = BATCH_SIZE
    n_epochs: int = N_EPOCHS
    learning_rate: float = LEARNING_RATE
    gamma: float = GAMMA
    gae_lambda: float = GAE_LAMBDA
    clip_range: float = CLIP_RANGE
    value_coef: float = VALUE_COEF
    entropy_coef: float = ENTROPY_COEF
    max_grad_norm: float = MAX_GRAD_NORM
    hidden_sizes: tuple[int, ...] = HIDDEN_SIZES
    rollout_workers: int = ROLLOUT_WORKERS
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.total_timesteps <= 0:
            msg = "nothing to train: total_timesteps must be positive"
            raise ConfigError(msg)
        if self.seed < 0:
            msg = f"seed must be a non-negative integer, got {self.seed}"
            raise ConfigError(msg)
        if min(self.n_envs, self.n_steps, self.batch_size, self.n_epochs, self.rollout_workers) < 1:
            msg = "n_envs, n_steps, batch_size, n_epochs and rollout_workers must be positive"
            raise ConfigError(msg)
        if self.total_timesteps < self.n_envs * self.n_steps:
            msg = (f"total_timesteps={self.total_timesteps} is less than one rollout "
                   f"(n_envs * n_steps = {self.n_envs * self.n_steps})")
            raise ConfigError(msg)
        if min(self.learning_rate, self.clip_range, self.value_coef, self.entropy_coef, self.max_grad_norm) < 0:
            msg = "learning_rate, clip_range, value_coef, entropy_coef and max_grad_norm must be non-negative"
            raise ConfigError(msg)
        if not (0.0 < self.gamma <= 1.0) or not (0.0 <= self.gae_lambda <= 1.0):
            msg = f"gamma must be in (0, 1] and gae_lambda in [0, 1], got {self.gamma}, {self.gae_lambda}"
            raise ConfigError(msg)
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            msg = f"hidden_sizes must be positive, got {self.hidden_sizes}"
            raise ConfigError(msg)

    @property
    def n_updates(self) -> int:
        """Число фаз обновления: rollout-ы собираются, пока не исчерпан бюджет шагов."""
        return math.ceil(self.total_timesteps / (self.n_envs * self.n_steps))

    def to_dict(self) -> dict[str, object]:
        data = asdict(self)
        data["hidden_sizes"] = list(self.hidden_sizes)
        return data


@dataclass(frozen=True)
class LossStats:
    """Диагностика одного вычисления функции потерь PPO."""

    total_loss: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


@dataclass(frozen=True)
class RolloutMetrics:
    rollout_idx: int
    timesteps: int
    mean_ep_reward: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


def ppo_loss_and_grads(
        model: ActorCriticModel,
        states: np.ndarray,
        actions: np.ndarray,
        old_log_probs: np.ndarray,
        advantages: np.ndarray,
        returns: np.ndarray,
        clip_range: float,
        value_coef: float,
        entropy_coef: float,
) -> tuple[LossStats, Params]:
    """Обрезанная суррогатная функция потерь PPO и её аналитический градиент.

    total = -mean(min(ρ·A, clip(ρ, 1-ε, 1+ε)·A)) + c_v·mean((V - R)^2) - c_e·H,
    где ρ = exp(log π_new - log π_old).

    Returns:
        tuple[LossStats, Params]: Значения потерь и градиенты по всем параметрам модели.

    """
    batch = states.shape[0]
    mean, policy_acts = model.mlp_forward("policy", states)
    log_std = model.log_std
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean

    log_probs = gaussian_log_prob(actions, mean, log_std)
    log_ratio = log_probs - old_log_probs
    ratio = np.exp(log_ratio)
    clipped = np.clip(ratio, 1.0 - clip_range, 1.0 + clip_range)
    surrogate = ratio * advantages
    surrogate_clipped = clipped * advantages
    policy_loss = -float(np.mean(np.minimum(surrogate, surrogate_clipped)))

    entropy = gaussian_entropy(log_std)

    values, value_acts = model.mlp_forward("value", states)
    values = values[:, 0]
    value_error = values - returns
    value_loss = float(np.mean(value_error ** 2))

    total_loss = policy_loss + value_coef * value_loss - entropy_coef * entropy

    # Обрезанная ветвь не зависит от параметров, градиент идёт только через необрезанную
    use_unclipped = surrogate <= surrogate_clipped
    d_log_prob = np.where(use_unclipped, -advantages * ratio / batch, 0.0)

    d_mean = d_log_prob[:, None] * diff * inv_var
    d_log_std = np.sum(d_log_prob[:, None] * (diff * diff * inv_var - 1.0), axis=0) - entropy_coef

    grads = model.mlp_backward("policy", policy_acts, d_mean)
    grads["policy.log_std"] = d_log_std
    d_values = (value_coef * 2.0 / batch) * value_error
    grads.update(model.mlp_backward("value", value_acts, d_values[:, None]))

    stats = LossStats(
        total_loss=float(total_loss),
        policy_loss=policy_loss,
        value_loss=value_loss,
        entropy=entropy,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_range)),
        approx_kl=float(np.mean((ratio - 1.0) - log_ratio)),
    )
    return stats, grads


def ppo_update(
        model: ActorCriticModel,
        buffer: RolloutBuffer,
        config: TrainConfig,
        optimizer: Adam,
        rng: np.random.Generator,
) -> LossStats:
    """Несколько эпох градиентных шагов по перемешанным мини-пакетам буфера.

    Returns:
        LossStats: Средние по всем мини-пакетам значения диагностики.

    """
    data = buffer.flatten()
    size = data["states"].shape[0]
    batch_size = min(config.batch_size, size)
    collected: list[LossStats] = []

    for epoch in range(config.n_epochs):
        order = rng.permutation(size)
        for start in range(0, size, batch_size):
            idx = order[start:start + batch_size]
            advantages = data["advantages"][idx]
            if idx.shape[0] > 1:
                advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

            stats, grads = ppo_loss_and_grads(
                model,
                data["states"][idx],
                data["actions"][idx],
                data["log_probs"][idx],
                advantages,
                data["returns"][idx],
                config.clip_range,
                config.value_coef,
                config.entropy_coef,
            )
            if not math.isfinite(stats.total_loss):
                msg = f"non-finite PPO loss at epoch {epoch}"
                raise TrainingAbortedError(msg, asdict(stats))

            clip_grad_norm(grads, config.max_grad_norm)
            optimizer.step(grads)
            collected.append(stats)

    if not model.is_finite():
        msg = "non-finite model parameters after update"
        raise TrainingAbortedError(msg, asdict(collected[-1]))

    return LossStats(**{
        name: float(np.mean([getattr(s, name) for s in collected]))
        for name in LossStats.__dataclass_fields__
    })


@dataclass
class TrainingResult:
    model: ActorCriticModel
    metrics: list[RolloutMetrics]
    timesteps: int  # фактически сделанные шаги: последний rollout собирается целиком


class PPOTrainer:
    """Обучение актор-критика PPO на нескольких независимых средах."""

    def __init__(
            self,
            env_factory: EnvFactory,
            config: TrainConfig,
            on_rollout: Callable[[RolloutMetrics], None] | None = None,
            progress: bool = True,
    ) -> None:
        config.validate()
        self.config = config
        self.envs = [env_factory(i) for i in range(config.n_envs)]
        self.on_rollout = on_rollout
        self.progress = progress

        input_dim = self.envs[0].input_dim
        self.model = ActorCriticModel.initialize(
            input_dim,
            self.envs[0].action_scale,
            VectorUtils.make_rng(config.seed, STREAM_INIT),
            config.hidden_sizes,
        )
        self.optimizer = Adam(self.model.params, config.learning_rate)
        self.rng = VectorUtils.make_rng(config.seed, STREAM_POLICY)

    def train(self) -> TrainingResult:
        """Чередует сбор rollout-ов и обновления PPO до исчерпания total_timesteps.

        Returns:
            TrainingResult: Обученная модель и метрики по каждому rollout.

        """
        config = self.config
        states = np.stack([env.reset() for env in self.envs])
        episode_rewards = np.zeros(config.n_envs)
        metrics: list[RolloutMetrics] = []
        timesteps = 0

        logger.info(
            "Training PPO: %d updates of %d envs x %d steps",
            config.n_updates, config.n_envs, config.n_steps,
        )

        with ThreadPoolExecutor(max_workers=config.rollout_workers) as executor:
            for rollout_idx in tqdm(range(config.n_updates), desc="PPO updates", disable=not self.progress):
                buffer = RolloutBuffer(config.n_steps, config.n_envs, self.model.input_dim)
                finished: list[float] = []

                for _ in range(config.n_steps):
                    actions, log_probs = self.model.sample_action(states, self.rng)
                    values = self.model.value_forward(states)
                    results = self._step_envs(executor, actions)

                    rewards = np.array([r.reward for r in results])
                    dones = np.array([float(r.done) for r in results])
                    buffer.add(states, actions, log_probs, rewards, values, dones)

                    episode_rewards += rewards
                    next_states = []
                    for i, (env, result) in enumerate(zip(self.envs, results)):
                        if result.done:
                            finished.append(float(episode_rewards[i]))
                            episode_rewards[i] = 0.0
                            next_states.append(env.reset())
                        else:
                            next_states.append(result.next_state)
                    states = np.stack(next_states)

                timesteps += config.n_envs * config.n_steps
                buffer.finalize(np.asarray(self.model.value_forward(states)), config.gamma, config.gae_lambda)
                stats = ppo_update(self.model, buffer, config, self.optimizer, self.rng)

                entry = RolloutMetrics(
                    rollout_idx=rollout_idx,
                    timesteps=timesteps,
                    mean_ep_reward=VectorUtils.nan_mean(finished),
                    policy_loss=stats.policy_loss,
                    value_loss=stats.value_loss,
                    entropy=stats.entropy,
                    clip_fraction=stats.clip_fraction,
                    approx_kl=stats.approx_kl,
                )
                metrics.append(entry)
                logger.debug("Rollout %d: %s", rollout_idx, entry)
                if self.on_rollout is not None:
                    self.on_rollout(entry)

        logger.info("Training finished after %d timesteps (budget %d)", timesteps, config.total_timesteps)
        return TrainingResult(model=self.model, metrics=metrics, timesteps=timesteps)

    def _step_envs(self, executor: ThreadPoolExecutor, actions: np.ndarray) -> list[StepResult]:
        # map сохраняет порядок сред, поэтому результат не зависит от числа потоков
        if self.config.rollout_workers == 1:
            return [env.step(action) for env, action in zip(self.envs, actions)]
        return list(executor.map(lambda pair: pair[0].step(pair[1]), zip(self.envs, actions)))
