import csv
import logging
import math
import re
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

from src.core.errors import TrajectoryFormatError
from src.core.service.trajectory_collector import CounterfactualRecord
from src.core.system.black_box import Label, OutputValue, Score
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

OutputKind = Literal["label", "score"]

_INTEGER = re.compile(r"[+-]?\d+")
_STATE_COLUMN = re.compile(r"state_(\d+)")


class TrajectoryStorage:
    """Чтение и запись контрфактических переходов в CSV.

    Колонки: state_0..state_{d-1}, action_0.., next_state_0.., prev_output,
    curr_output, reward. Вещественные числа пишутся кратчайшей десятичной
    записью, выходы - текстом метки или десятичным целым.
    """

    @staticmethod
    def header(dim: int) -> list[str]:
        return [
            *(f"state_{i}" for i in range(dim)),
            *(f"action_{i}" for i in range(dim)),
            *(f"next_state_{i}" for i in range(dim)),
            "prev_output",
            "curr_output",
            "reward",
        ]

    def write_csv(self, records: Sequence[CounterfactualRecord], path: Path, dim: int | None = None) -> Path:
        """Сохраняет записи в CSV; пустой список даёт файл только с заголовком.

        Args:
            records: Контрфактические записи.
            path: Путь к файлу.
            dim: Размерность входа (нужна, если записей нет).

        Returns:
            Path: Путь к записанному файлу.

        """
        if dim is None:
            dim = records[0].dim if records else 1
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.header(dim))
            for record in records:
                writer.writerow([
                    *(VectorUtils.format_float(v) for v in record.state),
                    *(VectorUtils.format_float(v) for v in record.action),
                    *(VectorUtils.format_float(v) for v in record.next_state),
                    record.prev_output.to_text(),
                    record.curr_output.to_text(),
                    VectorUtils.format_float(record.reward),
                ])
        logger.info("Saved %d trajectories to: %s", len(records), path)
        return path

    def read_csv(self, path: Path, output_kind: OutputKind | None = None) -> list[CounterfactualRecord]:
        """Читает записи из CSV, обратная операция к write_csv.

        Args:
            path: Путь к файлу.
            output_kind: Тип выходов; None - целые числа читаются как Score,
                остальное как Label.

        Returns:
            list[CounterfactualRecord]: Прочитанные записи.

        """
        try:
            with path.open("r", encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                header = next(reader, None)
                dim = self._parse_header(header)
                records = []
                for row in reader:
                    if not row:
                        continue
                    records.append(self._parse_row(row, dim, reader.line_num, output_kind))
        except OSError as e:
            msg = f"cannot read trajectories file {path}: {e}"
            raise TrajectoryFormatError(msg) from e
        except csv.Error as e:
            raise TrajectoryFormatError(str(e)) from e

        logger.info("Loaded %d trajectories from: %s", len(records), path)
        return records

    def _parse_header(self, header: list[str] | None) -> int:
        if not header:
            msg = "missing header"
            raise TrajectoryFormatError(msg, 1)
        dim = sum(1 for column in header if _STATE_COLUMN.fullmatch(column))
        if dim < 1 or header != self.header(dim):
            msg = f"unexpected header {header}"
            raise TrajectoryFormatError(msg, 1)
        return dim

    def _parse_row(
            self,
            row: list[str],
            dim: int,
            line_number: int,
            output_kind: OutputKind | None,
    ) -> CounterfactualRecord:
        expected = 3 * dim + 3
        if len(row) != expected:
            msg = f"expected {expected} columns, got {len(row)}"
            raise TrajectoryFormatError(msg, line_number)
        try:
            numbers = [float(cell) for cell in row[:3 * dim]]
            reward = float(row[-1])
        except ValueError as e:
            raise TrajectoryFormatError(str(e), line_number) from e
        if not all(math.isfinite(v) for v in [*numbers, reward]):
            msg = "non-finite value"
            raise TrajectoryFormatError(msg, line_number)

        return CounterfactualRecord(
            state=tuple(numbers[:dim]),
            action=tuple(numbers[dim:2 * dim]),
            next_state=tuple(numbers[2 * dim:]),
            prev_output=self._parse_output(row[3 * dim], line_number, output_kind),
            curr_output=self._parse_output(row[3 * dim + 1], line_number, output_kind),
            reward=reward,
        )

    @staticmethod
    def _parse_output(text: str, line_number: int, output_kind: OutputKind | None) -> OutputValue:
        is_integer = bool(_INTEGER.fullmatch(text))
        if output_kind == "score" and not is_integer:
            msg = f"output {text!r} is not an integer score"
            raise TrajectoryFormatError(msg, line_number)
        if output_kind == "score" or (output_kind is None and is_integer):
            return Score(int(text))
        return Label(text)
