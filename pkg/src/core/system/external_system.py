import logging
import re
import shlex
import subprocess
from typing import Literal

import numpy as np

from config import EXTERNAL_TIMEOUT_S
from src.core.errors import ConfigError, EvaluationError
from src.core.system.black_box import Bounds, Label, OutputValue, Score, SystemUnderTest
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

ParseMode = Literal["label", "score"]

_PLACEHOLDER = re.compile(r"\{(\d+)\}")
_INTEGER = re.compile(r"[+-]?\d+")


class ExternalSystem(SystemUnderTest):
    """Адаптер к внешней программе: один процесс на одно вычисление.

    Шаблон аргументов разбивается как командная строка, а каждое `{i}`
    заменяется i-й компонентой входа в кратчайшей десятичной записи.
    Обрезанный stdout читается как метка или как целый балл.
    """

    def __init__(
            self,
            cmd: str,
            arg_template: str,
            parse_mode: ParseMode,
            bounds: Bounds,
            name: str = "external",
            timeout_s: float = EXTERNAL_TIMEOUT_S,
    ) -> None:
        super().__init__(name, bounds)
        if parse_mode not in ("label", "score"):
            msg = f"parse_mode must be 'label' or 'score', got {parse_mode!r}"
            raise ConfigError(msg)
        self.cmd = cmd
        self.arg_template = arg_template
        self.parse_mode = parse_mode
        self.timeout_s = timeout_s
        self._tokens = shlex.split(arg_template)

        for token in self._tokens:
            for match in _PLACEHOLDER.finditer(token):
                if int(match.group(1)) >= self.input_dim:
                    msg = f"placeholder {match.group(0)} out of range for input_dim={self.input_dim}"
                    raise ConfigError(msg)

    def render_args(self, x: np.ndarray) -> list[str]:
        """Подставляет компоненты входа в шаблон аргументов."""
        def substitute(match: re.Match[str]) -> str:
            return VectorUtils.format_float(x[int(match.group(1))])

        return [self.cmd, *(_PLACEHOLDER.sub(substitute, token) for token in self._tokens)]

    def _evaluate(self, x: np.ndarray) -> OutputValue:
        args = self.render_args(x)
        try:
            completed = subprocess.run(  # noqa: S603
                args,
                capture_output=True,
                text=True,
                encoding="utf-8",
                timeout=self.timeout_s,
                check=False,
            )
        except (OSError, subprocess.SubprocessError) as e:
            msg = f"failed to run {self.cmd!r}: {e}"
            raise EvaluationError(msg) from e

        if completed.returncode != 0:
            msg = f"{self.cmd!r} failed for input {x.tolist()}"
            raise EvaluationError(msg, completed.stdout, completed.stderr, completed.returncode)

        return self.parse_output(completed.stdout, completed.stderr)

    def parse_output(self, stdout: str, stderr: str = "") -> OutputValue:
        """Разбирает обрезанный stdout в соответствии с parse_mode."""
        text = stdout.strip()
        if not text:
            msg = f"{self.cmd!r} produced empty output"
            raise EvaluationError(msg, stdout, stderr)
        if self.parse_mode == "label":
            return Label(text)
        if not _INTEGER.fullmatch(text):
            msg = f"{self.cmd!r} output is not an integer score"
            raise EvaluationError(msg, stdout, stderr)
        return Score(int(text))


def make_external_system(
        cmd: str,
        arg_template: str,
        parse_mode: ParseMode,
        input_dim: int,
        bounds: Bounds,
        timeout_s: float = EXTERNAL_TIMEOUT_S,
) -> SystemUnderTest:
    """Создаёт систему поверх внешней программы."""
    if bounds.dim != input_dim:
        msg = f"bounds have {bounds.dim} dimensions, input_dim is {input_dim}"
        raise ConfigError(msg)
    logger.info("Wrapping external command %s (%d-D, %s)", cmd, input_dim, parse_mode)
    return ExternalSystem(cmd, arg_template, parse_mode, bounds, timeout_s=timeout_s)
