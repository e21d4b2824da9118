class BoundaryExplorerError(Exception):
    """Базовое исключение конвейера поиска границ решений."""


class DimensionMismatchError(BoundaryExplorerError):
    """Длина вектора не совпадает с размерностью входа системы."""

    def __init__(self, expected: int, actual: int, what: str = "input vector") -> None:
        super().__init__(f"{what} has length {actual}, expected {expected}")
        self.expected = expected
        self.actual = actual


class NonFiniteInputError(BoundaryExplorerError):
    """Во входном векторе есть NaN или бесконечность."""


class EvaluationError(BoundaryExplorerError):
    """Чёрный ящик не смог вычислить выход."""

    def __init__(
            self,
            message: str,
            stdout: str = "",
            stderr: str = "",
            returncode: int | None = None,
    ) -> None:
        details = message
        if returncode is not None:
            details += f" (exit status {returncode})"
        if stdout:
            details += f"; stdout: {stdout.strip()!r}"
        if stderr:
            details += f"; stderr: {stderr.strip()!r}"
        super().__init__(details)
        self.stdout = stdout
        self.stderr = stderr
        self.returncode = returncode


class ConfigError(BoundaryExplorerError):
    """Некорректная конфигурация."""


class TrainingAbortedError(BoundaryExplorerError):
    """Обучение остановлено из-за нечисловых значений."""

    def __init__(self, message: str, diagnostics: dict[str, float] | None = None) -> None:
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            rendered = ", ".join(f"{key}={value!r}" for key, value in self.diagnostics.items())
            message = f"{message} [{rendered}]"
        super().__init__(message)


class CheckpointError(BoundaryExplorerError):
    """Чекпоинт отсутствует, повреждён или несовместим."""


class TrajectoryFormatError(BoundaryExplorerError):
    """Ошибка разбора CSV-файла траекторий."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ClusteringError(BoundaryExplorerError):
    """Кластеризация невозможна на переданных данных."""


class NoCounterfactualsError(BoundaryExplorerError):
    """Анализ не нашёл ни одного перехода через границу."""
