# ruff: noqa: T201
import logging
import math

from src.core.rl.ppo import TrainingResult
from src.core.service.boundary_pipeline import AnalysisResult
from src.core.service.pipeline_validator import ValidationReport
from src.core.system.black_box import BUILTIN_SYSTEMS

logger = logging.getLogger(__name__)


class IO:
    """Класс для взаимодействия с пользователем через консоль."""

    @staticmethod
    def format_systems() -> str:
        """Список встроенных систем: имя, размерность и границы."""
        return "\n".join(factory().describe() for factory in BUILTIN_SYSTEMS.values()) + "\n"

    @staticmethod
    def print_systems() -> None:
        print(IO.format_systems(), end="")

    @staticmethod
    def print_training_summary(result: TrainingResult, checkpoint: str, budget: int) -> None:
        """Выводит итог обучения."""
        print("\n=== Обучение завершено ===")
        print(f"Фаз обновления: {len(result.metrics)}")
        print(f"Шагов среды: {result.timesteps} (бюджет {budget})")
        if result.metrics:
            first = result.metrics[0].mean_ep_reward
            last = result.metrics[-1].mean_ep_reward
            print(f"Средняя награда за эпизод: {IO._fmt(first)} -> {IO._fmt(last)}")
        print(f"Модель сохранена в '{checkpoint}'.")

    @staticmethod
    def print_analysis_summary(result: AnalysisResult) -> None:
        """Выводит итог анализа: число переходов, награды и правила."""
        print("\n=== Анализ завершён ===")
        print(f"Найдено переходов через границу: {len(result.records)}")
        print(f"Средняя награда: агент {result.trained_mean_reward:.3f}, "
              f"случайная политика {result.random_mean_reward:.3f}")
        if result.plot_data_path is None:
            print("Данные диаграммы кластеров: пропущено (вход не двумерный).")
        else:
            print(f"Данные диаграммы кластеров: '{result.plot_data_path}'.")
        print()
        print(result.extraction.tree_text, end="")
        if result.extraction.rule_set is not None:
            print()
            for line in result.extraction.rule_set.lines:
                print(line)

    @staticmethod
    def print_no_counterfactuals(message: str) -> None:
        print(f"\nВнимание: {message}. Кластеризация и извлечение правил пропущены.")

    @staticmethod
    def print_report_summary(report: ValidationReport, path: str) -> None:
        print("\n=== Отчёт проверки ===")
        print(report.render(), end="")
        print(f"Отчёт сохранён в '{path}'.")

    @staticmethod
    def _fmt(value: float) -> str:
        return "n/a" if math.isnan(value) else f"{value:.2f}"
