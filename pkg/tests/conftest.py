import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from src.core.system.black_box import (
    Bounds,
    BuiltinSystem,
    Label,
    make_system_1_threshold,
    make_system_2_combined,
    make_system_3_nonlinear,
)


@pytest.fixture
def system_1():
    return make_system_1_threshold()


@pytest.fixture
def system_2():
    return make_system_2_combined()


@pytest.fixture
def system_3():
    return make_system_3_nonlinear()


@pytest.fixture
def constant_system():
    return BuiltinSystem("constant", Bounds.uniform(-1.0, 1.0, 1), lambda _x: Label("same"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def python_script(tmp_path):
    """Пишет скрипт Python и возвращает (интерпретатор, путь к скрипту)."""
    def write(name: str, body: str) -> tuple[str, Path]:
        path = tmp_path / name
        path.write_text(textwrap.dedent(body), encoding="utf-8")
        return sys.executable, path

    return write
