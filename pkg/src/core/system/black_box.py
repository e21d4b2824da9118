import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from src.core.errors import ConfigError, NonFiniteInputError
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Label:
    """Категориальный выход системы."""

    text: str

    def to_text(self) -> str:
        return self.text


@dataclass(frozen=True)
class Score:
    """Целочисленный выход системы."""

    value: int

    def to_text(self) -> str:
        return str(self.value)


# Label("10") != Score(10): сравнение разных вариантов всегда ложно
OutputValue = Label | Score


@dataclass(frozen=True)
class Bounds:
    """Покомпонентные границы пространства входов."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.low) != len(self.high):
            msg = f"bounds length mismatch: {len(self.low)} low vs {len(self.high)} high"
            raise ConfigError(msg)
        if not self.low:
            msg = "bounds must have at least one dimension"
            raise ConfigError(msg)
        for i, (lo, hi) in enumerate(zip(self.low, self.high)):
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
                msg = f"invalid bounds for input_{i}: [{lo}, {hi}]"
                raise ConfigError(msg)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> "Bounds":
        return cls(low=(float(low),) * dim, high=(float(high),) * dim)

    @property
    def dim(self) -> int:
        return len(self.low)

    @property
    def low_array(self) -> np.ndarray:
        return np.array(self.low, dtype=np.float64)

    @property
    def high_array(self) -> np.ndarray:
        return np.array(self.high, dtype=np.float64)

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return VectorUtils.clamp(x, self.low_array, self.high_array)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.low_array) and np.all(x <= self.high_array))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Равномерная точка внутри параллелепипеда границ."""
        return rng.uniform(self.low_array, self.high_array)

    def describe(self) -> str:
        """Краткая запись границ, например `[-5,5]^2`."""
        if len(set(self.low)) == 1 and len(set(self.high)) == 1:
            interval = f"[{self.low[0]:g},{self.high[0]:g}]"
            return interval if self.dim == 1 else f"{interval}^{self.dim}"
        return " x ".join(f"[{lo:g},{hi:g}]" for lo, hi in zip(self.low, self.high))


class SystemUnderTest(ABC):
    """Непрозрачная система принятия решений: вектор входа -> выход."""

    def __init__(self, name: str, bounds: Bounds) -> None:
        self.name = name
        self.bounds = bounds

    @property
    def input_dim(self) -> int:
        return self.bounds.dim

    def evaluate(self, x: Sequence[float] | np.ndarray) -> OutputValue:
        """Вычисляет выход системы для вектора входа.

        Args:
            x: Вектор длины input_dim с конечными компонентами.

        Returns:
            OutputValue: Выход системы (Label или Score).

        """
        vector = VectorUtils.as_vector(x, self.input_dim)
        if not VectorUtils.is_finite(vector):
            msg = f"non-finite input for {self.name}: {vector.tolist()}"
            raise NonFiniteInputError(msg)
        return self._evaluate(vector)

    @abstractmethod
    def _evaluate(self, x: np.ndarray) -> OutputValue:
        ...

    def describe(self) -> str:
        return f"{self.name} ({self.input_dim}-D, {self.bounds.describe()})"


class BuiltinSystem(SystemUnderTest):
    """Встроенная система, заданная чистой функцией."""

    def __init__(self, name: str, bounds: Bounds, decide: Callable[[np.ndarray], OutputValue]) -> None:
        super().__init__(name, bounds)
        self._decide = decide

    def _evaluate(self, x: np.ndarray) -> OutputValue:
        return self._decide(x)


def _threshold_decision(x: np.ndarray) -> OutputValue:
    return Label("Category A") if x[0] <= 5.0 else Label("Category B")  # noqa: PLR2004


def _combined_decision(x: np.ndarray) -> OutputValue:
    if x[0] > 0 and x[1] > 0:
        return Label("High")
    if x[0] < 0 and x[1] < 0:
        return Label("Low")
    return Label("Medium")


def _nonlinear_decision(x: np.ndarray) -> OutputValue:
    # Ветви исчерпывающие, поэтому нулевой балл не возникает
    return Score(10) if -2.0 < x[0] < 2.0 else Score(20)  # noqa: PLR2004


def make_system_1_threshold() -> SystemUnderTest:
    """Порог: 'Category A' при x0 <= 5.0, иначе 'Category B'."""
    return BuiltinSystem("system_1_threshold", Bounds.uniform(-10.0, 10.0, 1), _threshold_decision)


def make_system_2_combined() -> SystemUnderTest:
    """Комбинация условий: High, Low или Medium по знакам x0 и x1."""
    return BuiltinSystem("system_2_combined", Bounds.uniform(-5.0, 5.0, 2), _combined_decision)


def make_system_3_nonlinear() -> SystemUnderTest:
    """Диапазоны: балл 10 при -2 < x0 < 2, иначе 20."""
    return BuiltinSystem("system_3_nonlinear", Bounds.uniform(-5.0, 5.0, 1), _nonlinear_decision)


BUILTIN_SYSTEMS: dict[str, Callable[[], SystemUnderTest]] = {
    "system_1_threshold": make_system_1_threshold,
    "system_2_combined": make_system_2_combined,
    "system_3_nonlinear": make_system_3_nonlinear,
}


def get_builtin_system(name: str) -> SystemUnderTest:
    """Возвращает встроенную систему по имени."""
    try:
        factory = BUILTIN_SYSTEMS[name]
    except KeyError:
        known = ", ".join(BUILTIN_SYSTEMS)
        msg = f"unknown system {name!r}; built-in systems: {known}"
        raise ConfigError(msg) from None
    return factory()


def evaluate(system: SystemUnderTest, x: Sequence[float] | np.ndarray) -> OutputValue:
    return system.evaluate(x)

