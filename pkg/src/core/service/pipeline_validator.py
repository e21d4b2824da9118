import logging
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config import THRESHOLD_TOLERANCE
from src.core.service.rule_extractor import TreeNode, split_thresholds
from src.core.service.trajectory_collector import CounterfactualRecord
from src.core.system.black_box import SystemUnderTest

logger = logging.getLogger(__name__)

# Доля записей, оба конца которых лежат в пределах 1.0 от оси
AXIS_CONCENTRATION_MIN = 0.9
AXIS_CONCENTRATION_RADIUS = 1.0


@dataclass(frozen=True)
class GroundTruth:
    """Известная логика встроенной системы.

    region сопоставляет точке область постоянного выхода; переход
    пересекает границу, если области концов различаются. thresholds -
    пары (признак, значение), которые дерево должно восстановить.
    """

    system_name: str
    region: Callable[[Sequence[float]], Hashable]
    thresholds: tuple[tuple[int, float], ...]
    check_thresholds: bool = True
    axis_boundaries: bool = False

    def crosses(self, state: Sequence[float], next_state: Sequence[float]) -> bool:
        return self.region(state) != self.region(next_state)


def _system_1_region(x: Sequence[float]) -> Hashable:
    return x[0] <= 5.0  # noqa: PLR2004


def _system_2_region(x: Sequence[float]) -> Hashable:
    if x[0] > 0 and x[1] > 0:
        return "High"
    if x[0] < 0 and x[1] < 0:
        return "Low"
    return "Medium"


def _system_3_region(x: Sequence[float]) -> Hashable:
    return -2.0 < x[0] < 2.0  # noqa: PLR2004


GROUND_TRUTHS: dict[str, GroundTruth] = {
    "system_1_threshold": GroundTruth("system_1_threshold", _system_1_region, ((0, 5.0),)),
    "system_2_combined": GroundTruth(
        "system_2_combined",
        _system_2_region,
        ((0, 0.0), (1, 0.0)),
        check_thresholds=False,
        axis_boundaries=True,
    ),
    "system_3_nonlinear": GroundTruth("system_3_nonlinear", _system_3_region, ((0, -2.0), (0, 2.0))),
}


@dataclass(frozen=True)
class StraddleReport:
    total: int
    violations: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class ThresholdCheck:
    feature_index: int
    truth: float
    best_split: float | None
    abs_error: float | None
    tolerance: float
    passed: bool
    diagnostic: str = ""


@dataclass(frozen=True)
class AxisProximity:
    sign_change_fraction: float
    concentration_fraction: float

    @property
    def passed(self) -> bool:
        return self.sign_change_fraction == 1.0 and self.concentration_fraction >= AXIS_CONCENTRATION_MIN


def validate_counterfactuals(records: Sequence[CounterfactualRecord], ground_truth: GroundTruth) -> StraddleReport:
    """Проверяет, что каждая запись пересекает известную границу."""
    violations = tuple(
        i for i, record in enumerate(records)
        if not ground_truth.crosses(record.state, record.next_state)
    )
    if violations:
        logger.warning("%d of %d records do not straddle a boundary", len(violations), len(records))
    return StraddleReport(total=len(records), violations=violations)


def reevaluation_mismatches(records: Sequence[CounterfactualRecord], system: SystemUnderTest) -> tuple[int, ...]:
    """Индексы записей, чьи выходы не совпадают с повторным вычислением системы."""
    return tuple(
        i for i, record in enumerate(records)
        if system.evaluate(record.state) != record.prev_output
        or system.evaluate(record.next_state) != record.curr_output
    )


def recover_thresholds(
        tree: TreeNode,
        ground_truth: GroundTruth,
        tol: float = THRESHOLD_TOLERANCE,
) -> list[ThresholdCheck]:
    """Для каждого истинного порога ищет ближайшее разбиение дерева по тому же признаку."""
    splits = split_thresholds(tree)
    checks = []
    for feature, truth in ground_truth.thresholds:
        candidates = [threshold for f, threshold in splits if f == feature]
        if not candidates:
            checks.append(ThresholdCheck(
                feature, truth, None, None, tol, passed=False,
                diagnostic=f"no split on input_{feature}",
            ))
            continue
        best = min(candidates, key=lambda t: (abs(t - truth), t))
        error = abs(best - truth)
        checks.append(ThresholdCheck(feature, truth, best, error, tol, passed=error <= tol))
    return checks


def axis_proximity(records: Sequence[CounterfactualRecord]) -> AxisProximity:
    """Доля записей со сменой знака хотя бы одной координаты и доля записей у осей."""
    if not records:
        return AxisProximity(1.0, 1.0)
    states = np.array([r.state for r in records])
    next_states = np.array([r.next_state for r in records])
    sign_change = np.any(states * next_states <= 0.0, axis=1)
    near_axis = np.any(
        (np.abs(states) <= AXIS_CONCENTRATION_RADIUS) & (np.abs(next_states) <= AXIS_CONCENTRATION_RADIUS),
        axis=1,
    )
    return AxisProximity(float(sign_change.mean()), float(near_axis.mean()))


@dataclass
class ValidationReport:
    """Сводка проверки одного запуска конвейера."""

    system_name: str
    counterfactual_count: int
    rules_text: str
    ground_truth_available: bool
    straddle: StraddleReport | None = None
    reevaluation_mismatches: tuple[int, ...] = ()
    threshold_checks: list[ThresholdCheck] = field(default_factory=list)
    axis: AxisProximity | None = None
    plot_data_path: Path | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if not self.ground_truth_available:
            return True
        checks = [
            self.straddle is None or self.straddle.passed,
            not self.reevaluation_mismatches,
            all(check.passed for check in self.threshold_checks),
            self.axis is None or self.axis.passed,
        ]
        return all(checks)

    def render(self) -> str:
        """Человекочитаемый отчёт; детерминирован для одинаковых входов."""
        lines = [
            f"system: {self.system_name}",
            f"counterfactual records: {self.counterfactual_count}",
        ]
        if not self.ground_truth_available:
            lines.append("validation: N/A (no ground truth for this system)")
        else:
            if self.straddle is not None:
                lines.append(
                    f"straddle violations: {len(self.straddle.violations)}: "
                    f"{_verdict(self.straddle.passed)}",
                )
            lines.append(
                f"re-evaluation mismatches: {len(self.reevaluation_mismatches)}: "
                f"{_verdict(not self.reevaluation_mismatches)}",
            )
            lines.extend(_render_threshold(check) for check in self.threshold_checks)
            if self.axis is not None:
                lines.append(
                    f"axis sign change: {self.axis.sign_change_fraction:.2%} (required 100%), "
                    f"near axis: {self.axis.concentration_fraction:.2%} "
                    f"(required >= {AXIS_CONCENTRATION_MIN:.0%}): {_verdict(self.axis.passed)}",
                )
        lines.append(f"cluster plot data: {self.plot_data_path.name if self.plot_data_path else 'skipped'}")
        lines.extend(self.notes)
        lines.append(f"overall: {_verdict(self.passed)}")
        lines.append("")
        lines.append("rules:")
        lines.append(self.rules_text.rstrip("\n"))
        return "\n".join(lines) + "\n"


def _verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


def _render_threshold(check: ThresholdCheck) -> str:
    head = f"threshold {check.truth} recovered (err ≤ {check.tolerance}): {_verdict(check.passed)}"
    if check.best_split is None:
        return f"{head}  [{check.diagnostic}]"
    return f"{head}  [input_{check.feature_index} split {check.best_split:.2f}, err {check.abs_error:.2f}]"


class PipelineValidator:
    """Проверка результатов конвейера на системах с известной логикой."""

    def __init__(self, tolerance: float = THRESHOLD_TOLERANCE) -> None:
        self.tolerance = tolerance

    def validate(
            self,
            system: SystemUnderTest,
            records: Sequence[CounterfactualRecord],
            tree: TreeNode | None,
            rules_text: str,
            plot_data_path: Path | None,
    ) -> ValidationReport:
        ground_truth = GROUND_TRUTHS.get(system.name)
        report = ValidationReport(
            system_name=system.name,
            counterfactual_count=len(records),
            rules_text=rules_text,
            ground_truth_available=ground_truth is not None,
            plot_data_path=plot_data_path,
        )
        if ground_truth is None:
            return report

        report.straddle = validate_counterfactuals(records, ground_truth)
        report.reevaluation_mismatches = reevaluation_mismatches(records, system)
        if ground_truth.check_thresholds:
            if tree is None:
                report.threshold_checks = [
                    ThresholdCheck(f, t, None, None, self.tolerance, passed=False, diagnostic="no tree fitted")
                    for f, t in ground_truth.thresholds
                ]
            else:
                report.threshold_checks = recover_thresholds(tree, ground_truth, self.tolerance)
        else:
            report.notes.append("split-location checks: not applicable (boundary quality judged by axis checks)")
        if ground_truth.axis_boundaries:
            report.axis = axis_proximity(records)

        logger.info("Validation of %s: %s", system.name, "passed" if report.passed else "failed")
        return report
