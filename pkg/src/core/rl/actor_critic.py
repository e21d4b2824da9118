import logging
import math
from dataclasses import dataclass, field

import numpy as np

from config import HIDDEN_SIZES
from src.core.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Коэффициенты ортогональной инициализации
HIDDEN_GAIN = math.sqrt(2.0)
POLICY_HEAD_GAIN = 0.01
VALUE_HEAD_GAIN = 1.0

Params = dict[str, np.ndarray]


def orthogonal(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    """Ортогональная матрица rows x cols, умноженная на gain."""
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def gaussian_log_prob(actions: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Логарифм плотности диагонального гауссиана, суммированный по компонентам."""
    z = (actions - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - HALF_LOG_2PI, axis=-1)


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 + HALF_LOG_2PI))


@dataclass
class ActorCriticModel:
    """MLP актор-критик с гауссовой политикой.

    Политика: input_dim -> hidden -> hidden -> input_dim (среднее) и
    независимый от состояния вектор log_std. Критик: input_dim -> hidden ->
    hidden -> 1. Скрытые слои с tanh, выходные линейные.
    """

    input_dim: int
    action_scale: float
    hidden_sizes: tuple[int, ...] = HIDDEN_SIZES
    params: Params = field(default_factory=dict)

    @classmethod
    def initialize(
            cls,
            input_dim: int,
            action_scale: float,
            rng: np.random.Generator,
            hidden_sizes: tuple[int, ...] = HIDDEN_SIZES,
    ) -> "ActorCriticModel":
        """Создаёт модель с ортогональной инициализацией весов и нулевыми смещениями."""
        model = cls(input_dim=input_dim, action_scale=action_scale, hidden_sizes=tuple(hidden_sizes))
        model._init_mlp("policy", input_dim, rng, POLICY_HEAD_GAIN)
        model.params["policy.log_std"] = np.zeros(input_dim)
        model._init_mlp("value", 1, rng, VALUE_HEAD_GAIN)
        return model

    def _init_mlp(self, prefix: str, out_dim: int, rng: np.random.Generator, head_gain: float) -> None:
        sizes = [self.input_dim, *self.hidden_sizes, out_dim]
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = head_gain if i == len(sizes) - 2 else HIDDEN_GAIN
            self.params[f"{prefix}.w{i}"] = orthogonal(fan_in, fan_out, gain, rng)
            self.params[f"{prefix}.b{i}"] = np.zeros(fan_out)

    @property
    def n_layers(self) -> int:
        return len(self.hidden_sizes) + 1

    @property
    def log_std(self) -> np.ndarray:
        return self.params["policy.log_std"]

    def copy(self) -> "ActorCriticModel":
        return ActorCriticModel(
            input_dim=self.input_dim,
            action_scale=self.action_scale,
            hidden_sizes=self.hidden_sizes,
            params={name: value.copy() for name, value in self.params.items()},
        )

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(value))) for value in self.params.values())

    def _check_states(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.shape[-1] != self.input_dim:
            raise DimensionMismatchError(self.input_dim, states.shape[-1], "state")
        return states

    def mlp_forward(self, prefix: str, states: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Прямой проход MLP; возвращает выход и активации для обратного прохода."""
        h = np.atleast_2d(states)
        activations = [h]
        for i in range(self.n_layers):
            z = h @ self.params[f"{prefix}.w{i}"] + self.params[f"{prefix}.b{i}"]
            h = np.tanh(z) if i < self.n_layers - 1 else z
            activations.append(h)
        return h, activations

    def mlp_backward(self, prefix: str, activations: list[np.ndarray], grad_out: np.ndarray) -> Params:
        """Обратный проход MLP по сохранённым активациям."""
        grads: Params = {}
        delta = grad_out
        for i in reversed(range(self.n_layers)):
            grads[f"{prefix}.w{i}"] = activations[i].T @ delta
            grads[f"{prefix}.b{i}"] = delta.sum(axis=0)
            if i > 0:
                # производная tanh через её выход
                delta = (delta @ self.params[f"{prefix}.w{i}"].T) * (1.0 - activations[i] ** 2)
        return grads

    def policy_forward(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Среднее действия и log_std для состояния (или пакета состояний)."""
        states = self._check_states(states)
        mean, _ = self.mlp_forward("policy", states)
        if states.ndim == 1:
            mean = mean[0]
        return mean, self.log_std.copy()

    def value_forward(self, states: np.ndarray) -> np.ndarray | float:
        """Оценка ценности состояния (скаляр для одного состояния)."""
        states = self._check_states(states)
        values, _ = self.mlp_forward("value", states)
        values = values[:, 0]
        return float(values[0]) if states.ndim == 1 else values

    def sample_action(self, states: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray | float]:
        """Сэмплирует действие из N(mean, exp(log_std)) и его log-вероятность."""
        mean, log_std = self.policy_forward(states)
        actions = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        log_prob = gaussian_log_prob(actions, mean, log_std)
        return actions, (float(log_prob) if np.ndim(log_prob) == 0 else log_prob)

    def predict_deterministic(self, states: np.ndarray) -> np.ndarray:
        """Детерминированное действие: среднее политики, ограниченное action_scale."""
        mean, _ = self.policy_forward(states)
        return np.clip(mean, -self.action_scale, self.action_scale)
