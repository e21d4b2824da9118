import numpy as np

from src.core.errors import TrainingAbortedError


def compute_gae(
        rewards: np.ndarray,
        values: np.ndarray,
        dones: np.ndarray,
        last_values: np.ndarray,
        gamma: float,
        gae_lambda: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation по оси времени (первая ось).

    dones[t] - эпизод закончился на шаге t, поэтому V(s_{t+1}) и хвост
    преимущества не переносятся через границу эпизода.

    Args:
        rewards: Награды формы (T, ...).
        values: Оценки V(s_t) той же формы.
        dones: Флаги окончания эпизода после шага t.
        last_values: V(s_T) для состояния после последнего шага.
        gamma: Коэффициент дисконтирования.
        gae_lambda: Параметр λ.

    Returns:
        tuple[np.ndarray, np.ndarray]: Преимущества и целевые значения (A + V).

    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    not_done = 1.0 - np.asarray(dones, dtype=np.float64)
    advantages = np.zeros_like(rewards)
    next_values = np.asarray(last_values, dtype=np.float64)
    last_gae = np.zeros_like(rewards[0])

    for t in reversed(range(rewards.shape[0])):
        delta = rewards[t] + gamma * next_values * not_done[t] - values[t]
        last_gae = delta + gamma * gae_lambda * not_done[t] * last_gae
        advantages[t] = last_gae
        next_values = values[t]

    return advantages, advantages + values


class RolloutBuffer:
    """Буфер одного rollout: массивы формы (n_steps, n_envs[, input_dim])."""

    def __init__(self, n_steps: int, n_envs: int, input_dim: int) -> None:
        self.n_steps = n_steps
        self.n_envs = n_envs
        self.input_dim = input_dim
        self.states = np.zeros((n_steps, n_envs, input_dim))
        self.actions = np.zeros((n_steps, n_envs, input_dim))
        self.log_probs = np.zeros((n_steps, n_envs))
        self.rewards = np.zeros((n_steps, n_envs))
        self.values = np.zeros((n_steps, n_envs))
        self.dones = np.zeros((n_steps, n_envs))
        self.advantages = np.zeros((n_steps, n_envs))
        self.returns = np.zeros((n_steps, n_envs))
        self.pos = 0

    @property
    def full(self) -> bool:
        return self.pos == self.n_steps

    def add(
            self,
            states: np.ndarray,
            actions: np.ndarray,
            log_probs: np.ndarray,
            rewards: np.ndarray,
            values: np.ndarray,
            dones: np.ndarray,
    ) -> None:
        if self.full:
            msg = "rollout buffer is full"
            raise RuntimeError(msg)
        self.states[self.pos] = states
        self.actions[self.pos] = actions
        self.log_probs[self.pos] = log_probs
        self.rewards[self.pos] = rewards
        self.values[self.pos] = values
        self.dones[self.pos] = dones
        self.pos += 1

    def finalize(self, last_values: np.ndarray, gamma: float, gae_lambda: float) -> None:
        """Вычисляет преимущества и целевые значения после заполнения буфера."""
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.dones, last_values, gamma, gae_lambda,
        )
        if not np.all(np.isfinite(self.advantages)):
            msg = "non-finite advantages in rollout buffer"
            raise TrainingAbortedError(msg)

    def flatten(self) -> dict[str, np.ndarray]:
        """Сплющивает оси (шаг, среда) в одну ось пакета."""
        size = self.n_steps * self.n_envs
        return {
            "states": self.states.reshape(size, self.input_dim),
            "actions": self.actions.reshape(size, self.input_dim),
            "log_probs": self.log_probs.reshape(size),
            "advantages": self.advantages.reshape(size),
            "returns": self.returns.reshape(size),
            "values": self.values.reshape(size),
        }
