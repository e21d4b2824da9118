import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from src.core.rl.actor_critic import ActorCriticModel
from src.core.service.explorer_env import ExplorerEnv, Policy, StepResult, run_episode
from src.core.system.black_box import OutputValue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CounterfactualRecord:
    """Переход, на котором выход системы изменился: [s, a, s', y_prev, y_curr, r]."""

    state: tuple[float, ...]
    action: tuple[float, ...]
    next_state: tuple[float, ...]
    prev_output: OutputValue
    curr_output: OutputValue
    reward: float

    @classmethod
    def from_step(cls, result: StepResult) -> "CounterfactualRecord":
        return cls(
            state=tuple(float(v) for v in result.state),
            action=tuple(float(v) for v in result.action),
            next_state=tuple(float(v) for v in result.next_state),
            prev_output=result.prev_output,
            curr_output=result.curr_output,
            reward=float(result.reward),
        )

    @property
    def dim(self) -> int:
        return len(self.state)


def states_matrix(records: Sequence[CounterfactualRecord]) -> np.ndarray:
    """Матрица состояний s записей, форма (n, d)."""
    if not records:
        return np.zeros((0, 0))
    return np.array([record.state for record in records], dtype=np.float64)


class TrajectoryCollector:
    """Прогоны детерминированной политики со сбором контрфактических переходов."""

    def __init__(self, env: ExplorerEnv, progress: bool = True) -> None:
        self.env = env
        self.progress = progress

    def collect_counterfactuals(
            self,
            model: ActorCriticModel,
            episodes: int,
            max_steps: int,
            rng: np.random.Generator | None = None,
    ) -> list[CounterfactualRecord]:
        """Собирает все переходы с положительной наградой в порядке их появления.

        Args:
            model: Обученная модель актор-критика.
            episodes: Количество эпизодов анализа.
            max_steps: Длина эпизода анализа.
            rng: Генератор начальных состояний (по умолчанию генератор среды).

        Returns:
            list[CounterfactualRecord]: Переходы через границу решений.

        """
        records: list[CounterfactualRecord] = []
        for results in self._run_episodes(model.predict_deterministic, episodes, max_steps, rng, "Analysis episodes"):
            records.extend(CounterfactualRecord.from_step(r) for r in results if r.reward > 0)

        logger.info("Collected %d counterfactual transitions over %d episodes", len(records), episodes)
        return records

    def mean_episode_reward(
            self,
            policy: Policy,
            episodes: int,
            max_steps: int,
            rng: np.random.Generator | None = None,
    ) -> float:
        """Средняя суммарная награда политики за эпизод."""
        totals = [
            sum(r.reward for r in results)
            for results in self._run_episodes(policy, episodes, max_steps, rng, "Reward episodes")
        ]
        return float(np.mean(totals)) if totals else 0.0

    def _run_episodes(
            self,
            policy: Policy,
            episodes: int,
            max_steps: int,
            rng: np.random.Generator | None,
            desc: str,
    ) -> list[list[StepResult]]:
        self.env.max_steps = max_steps
        return [
            run_episode(self.env, policy, rng)
            for _ in tqdm(range(episodes), desc=desc, disable=not self.progress)
        ]


def uniform_random_policy(action_scale: float, input_dim: int, rng: np.random.Generator) -> Policy:
    """Политика со случайными равномерными возмущениями в [-action_scale, action_scale]."""
    def policy(_state: np.ndarray) -> np.ndarray:
        return rng.uniform(-action_scale, action_scale, size=input_dim)

    return policy
