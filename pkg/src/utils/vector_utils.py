import math
from collections.abc import Sequence

import numpy as np

from src.core.errors import DimensionMismatchError

# Номера независимых потоков случайных чисел, выводимых из мастер-сида
STREAM_INIT = 0
STREAM_POLICY = 1
STREAM_TRAIN_ENVS = 2
STREAM_ANALYSIS = 3
STREAM_KMEANS = 4
STREAM_RANDOM_BASELINE = 5


class VectorUtils:
    """Класс с утилитами для работы с векторами входов."""

    @staticmethod
    def as_vector(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
        """Приводит значения к одномерному float64-массиву и проверяет длину.

        Args:
            values: Последовательность чисел.
            dim: Ожидаемая длина или None, если длина не проверяется.

        Returns:
            np.ndarray: Копия значений в виде вектора.

        """
        vector = np.array(values, dtype=np.float64).reshape(-1)
        if dim is not None and vector.shape[0] != dim:
            raise DimensionMismatchError(dim, vector.shape[0])
        return vector

    @staticmethod
    def clamp(values: np.ndarray, low: np.ndarray | float, high: np.ndarray | float) -> np.ndarray:
        """Покомпонентно ограничивает вектор отрезком [low, high]."""
        return np.minimum(np.maximum(values, low), high)

    @staticmethod
    def format_float(value: float) -> str:
        """Кратчайшая десятичная запись, однозначно восстанавливающая число."""
        return repr(float(value))

    @staticmethod
    def is_finite(values: np.ndarray | Sequence[float]) -> bool:
        return bool(np.all(np.isfinite(np.asarray(values, dtype=np.float64))))

    @staticmethod
    def stream_seed(master_seed: int, stream: int, index: int | None = None) -> np.random.SeedSequence:
        """Выводит независимый поток случайных чисел из мастер-сида.

        Args:
            master_seed: Мастер-сид запуска.
            stream: Номер потока (STREAM_*).
            index: Номер подпотока (например, индекс среды).

        """
        spawn_key = (stream,) if index is None else (stream, index)
        return np.random.SeedSequence(master_seed, spawn_key=spawn_key)

    @staticmethod
    def make_rng(master_seed: int, stream: int, index: int | None = None) -> np.random.Generator:
        return np.random.default_rng(VectorUtils.stream_seed(master_seed, stream, index))

    @staticmethod
    def nan_mean(values: Sequence[float]) -> float:
        """Среднее значение или NaN для пустой последовательности."""
        return float(np.mean(values)) if len(values) else math.nan
