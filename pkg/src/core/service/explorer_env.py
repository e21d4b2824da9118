import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from config import ACTION_SCALE, TRAIN_MAX_STEPS
from src.core.errors import ConfigError
from src.core.system.black_box import OutputValue, SystemUnderTest
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

Policy = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StepResult:
    """Результат одного шага среды."""

    state: np.ndarray
    action: np.ndarray  # фактически применённое (ограниченное) возмущение
    next_state: np.ndarray
    reward: float
    done: bool
    prev_output: OutputValue
    curr_output: OutputValue


class ExplorerEnv:
    """Эпизодическая среда поиска границ: награда 1.0, когда выход системы меняется.

    Состояние - текущий вход системы, действие - возмущение Δx. Каждая
    компонента действия ограничивается [-action_scale, action_scale], затем
    новое состояние зажимается в границы системы. Эпизод длится ровно
    max_steps шагов.
    """

    def __init__(
            self,
            system: SystemUnderTest,
            action_scale: float = ACTION_SCALE,
            max_steps: int = TRAIN_MAX_STEPS,
            rng: np.random.Generator | None = None,
    ) -> None:
        if action_scale <= 0:
            msg = f"action_scale must be positive, got {action_scale}"
            raise ConfigError(msg)
        if max_steps < 1:
            msg = f"max_steps must be positive, got {max_steps}"
            raise ConfigError(msg)
        self.system = system
        self.bounds = system.bounds
        self.action_scale = float(action_scale)
        self.max_steps = int(max_steps)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.step_count = 0
        self.state = self.bounds.clamp(np.zeros(system.input_dim))
        self.last_output = system.evaluate(self.state)

    @property
    def input_dim(self) -> int:
        return self.system.input_dim

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Начинает эпизод из равномерной точки внутри границ.

        Args:
            rng: Источник случайности; по умолчанию собственный генератор среды.

        Returns:
            np.ndarray: Начальное состояние.

        """
        generator = rng if rng is not None else self.rng
        self.state = self.bounds.sample(generator)
        self.last_output = self.system.evaluate(self.state)
        self.step_count = 0
        return self.state.copy()

    def set_state(self, x: Sequence[float] | np.ndarray) -> np.ndarray:
        """Ставит среду в заданную точку (с зажатием в границы) без сдвига счётчика эпизода."""
        self.state = self.bounds.clamp(VectorUtils.as_vector(x, self.input_dim))
        self.last_output = self.system.evaluate(self.state)
        self.step_count = 0
        return self.state.copy()

    def step(self, action: Sequence[float] | np.ndarray) -> StepResult:
        """Применяет возмущение и вычисляет награду за смену выхода.

        Args:
            action: Возмущение длины input_dim.

        Returns:
            StepResult: Новое состояние, награда, флаг окончания и оба выхода.

        """
        if self.step_count >= self.max_steps:
            msg = "episode is finished, call reset() first"
            raise RuntimeError(msg)
        raw = VectorUtils.as_vector(action, self.input_dim)
        applied = VectorUtils.clamp(raw, -self.action_scale, self.action_scale)
        next_state = self.bounds.clamp(self.state + applied)

        prev_output = self.last_output
        curr_output = self.system.evaluate(next_state)
        reward = 1.0 if curr_output != prev_output else 0.0

        state = self.state
        self.state = next_state
        self.last_output = curr_output
        self.step_count += 1

        return StepResult(
            state=state,
            action=applied,
            next_state=next_state.copy(),
            reward=reward,
            done=self.step_count >= self.max_steps,
            prev_output=prev_output,
            curr_output=curr_output,
        )


def run_episode(env: ExplorerEnv, policy: Policy, rng: np.random.Generator | None = None) -> list[StepResult]:
    """Прогоняет один эпизод политики от сброса до лимита шагов."""
    state = env.reset(rng)
    results: list[StepResult] = []
    while True:
        result = env.step(policy(state))
        results.append(result)
        state = result.next_state
        if result.done:
            return results
