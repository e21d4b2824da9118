import contextlib
import dataclasses
import logging
import os
import types
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, get_args, get_origin, get_type_hints

import config as defaults
from src.core.errors import ConfigError
from src.core.rl.ppo import TrainConfig
from src.core.service.rule_extractor import default_max_depth
from src.core.system.black_box import BUILTIN_SYSTEMS, Bounds, SystemUnderTest, get_builtin_system
from src.core.system.external_system import make_external_system

logger = logging.getLogger(__name__)

EXTERNAL_SYSTEM = "external"


def _coerce(name: str, annotation: Any, value: Any) -> Any:  # noqa: ANN401, PLR0911
    """Приводит значение из YAML или флага к типу поля; несовместимое значение - ConfigError.

    PyYAML читает `3e-4` как строку, поэтому числа допускаются и в строковой записи.
    """
    if get_origin(annotation) is types.UnionType:
        if value is None:
            return None
        annotation = next(arg for arg in get_args(annotation) if arg is not type(None))
    if get_origin(annotation) is list:
        if not isinstance(value, list | tuple):
            msg = f"config key {name!r} must be a list, got {value!r}"
            raise ConfigError(msg)
        item_type = get_args(annotation)[0]
        return [_coerce(name, item_type, item) for item in value]

    if annotation is str:
        if isinstance(value, str | os.PathLike):
            return str(value)
    elif isinstance(value, bool):
        pass  # bool - подкласс int, но числом в конфигурации не считается
    elif annotation is float and isinstance(value, int | float | str):
        with contextlib.suppress(ValueError):
            return float(value)
    elif annotation is int:
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            with contextlib.suppress(ValueError):
                return int(value)

    msg = f"config key {name!r} expects {annotation.__name__}, got {value!r}"
    raise ConfigError(msg)


@dataclass
class PipelineConfig:
    """Плоская конфигурация всего конвейера; значения по умолчанию - из config.py."""

    system: str = defaults.DEFAULT_SYSTEM
    external_cmd: str | None = None
    external_args: str = "{0}"
    external_parse_mode: str = "label"
    external_input_dim: int | None = None
    external_bounds_low: list[float] | None = None
    external_bounds_high: list[float] | None = None
    external_timeout: float = defaults.EXTERNAL_TIMEOUT_S

    seed: int = defaults.DEFAULT_SEED
    output_dir: str = str(defaults.DEFAULT_OUTPUT_DIR)

    total_timesteps: int = defaults.TOTAL_TIMESTEPS
    n_envs: int = defaults.N_ENVS
    n_steps: int = defaults.N_STEPS
    batch_size: int = defaults.BATCH_SIZE
    n_epochs: int = defaults.N_EPOCHS
    learning_rate: float = defaults.LEARNING_RATE
    gamma: float = defaults.GAMMA
    gae_lambda: float = defaults.GAE_LAMBDA
    clip_range: float = defaults.CLIP_RANGE
    value_coef: float = defaults.VALUE_COEF
    entropy_coef: float = defaults.ENTROPY_COEF
    max_grad_norm: float = defaults.MAX_GRAD_NORM
    hidden_sizes: list[int] = field(default_factory=lambda: list(defaults.HIDDEN_SIZES))
    train_max_steps: int = defaults.TRAIN_MAX_STEPS
    action_scale: float = defaults.ACTION_SCALE
    rollout_workers: int = defaults.ROLLOUT_WORKERS

    episodes: int = defaults.ANALYSIS_EPISODES
    analysis_max_steps: int = defaults.ANALYSIS_MAX_STEPS
    analysis_seed: int | None = None

    n_clusters: int = defaults.N_CLUSTERS
    n_init: int = defaults.N_INIT
    kmeans_max_iter: int = defaults.KMEANS_MAX_ITER
    kmeans_jobs: int = defaults.KMEANS_JOBS
    max_depth: int | None = None
    min_samples_split: int = defaults.MIN_SAMPLES_SPLIT
    threshold_tolerance: float = defaults.THRESHOLD_TOLERANCE

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        """Создаёт конфигурацию из словаря; неизвестные ключи и значения не того типа - ошибка."""
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            msg = f"unknown config keys: {', '.join(unknown)}"
            raise ConfigError(msg)
        hints = get_type_hints(cls)
        return cls(**{name: _coerce(name, hints[name], value) for name, value in data.items()})

    def to_mapping(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "PipelineConfig":
        data = self.to_mapping()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return PipelineConfig.from_mapping(data)

    @property
    def is_external(self) -> bool:
        return self.system == EXTERNAL_SYSTEM

    def validate(self) -> None:
        if self.seed < 0 or (self.analysis_seed is not None and self.analysis_seed < 0):
            msg = f"seeds must be non-negative integers, got seed={self.seed}, analysis_seed={self.analysis_seed}"
            raise ConfigError(msg)
        if not self.is_external and self.system not in BUILTIN_SYSTEMS:
            known = ", ".join([*BUILTIN_SYSTEMS, EXTERNAL_SYSTEM])
            msg = f"unknown system {self.system!r}; expected one of: {known}"
            raise ConfigError(msg)
        if self.episodes < 1 or self.analysis_max_steps < 1 or self.train_max_steps < 1:
            msg = "episodes, analysis_max_steps and train_max_steps must be positive"
            raise ConfigError(msg)
        if min(self.n_clusters, self.n_init, self.kmeans_max_iter, self.kmeans_jobs) < 1:
            msg = "n_clusters, n_init, kmeans_max_iter and kmeans_jobs must be positive"
            raise ConfigError(msg)
        if self.max_depth is not None and self.max_depth < 0:
            msg = f"max_depth must be non-negative, got {self.max_depth}"
            raise ConfigError(msg)
        if self.action_scale <= 0 or self.threshold_tolerance < 0:
            msg = "action_scale must be positive and threshold_tolerance non-negative"
            raise ConfigError(msg)
        self.train_config().validate()

    def build_system(self) -> SystemUnderTest:
        """Создаёт исследуемую систему: встроенную или внешний процесс."""
        if not self.is_external:
            return get_builtin_system(self.system)
        if not self.external_cmd or self.external_input_dim is None:
            msg = "external system requires external_cmd and external_input_dim"
            raise ConfigError(msg)
        if self.external_bounds_low is None or self.external_bounds_high is None:
            msg = "external system requires external_bounds_low and external_bounds_high"
            raise ConfigError(msg)
        bounds = Bounds(
            low=tuple(float(v) for v in self.external_bounds_low),
            high=tuple(float(v) for v in self.external_bounds_high),
        )
        if self.external_parse_mode not in ("label", "score"):
            msg = f"external_parse_mode must be 'label' or 'score', got {self.external_parse_mode!r}"
            raise ConfigError(msg)
        return make_external_system(
            self.external_cmd,
            self.external_args,
            "label" if self.external_parse_mode == "label" else "score",
            self.external_input_dim,
            bounds,
            timeout_s=self.external_timeout,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            total_timesteps=self.total_timesteps,
            n_envs=self.n_envs,
            n_steps=self.n_steps,
            batch_size=self.batch_size,
            n_epochs=self.n_epochs,
            learning_rate=self.learning_rate,
            gamma=self.gamma,
            gae_lambda=self.gae_lambda,
            clip_range=self.clip_range,
            value_coef=self.value_coef,
            entropy_coef=self.entropy_coef,
            max_grad_norm=self.max_grad_norm,
            hidden_sizes=tuple(self.hidden_sizes),
            rollout_workers=self.rollout_workers,
            seed=self.seed,
        )

    def effective_max_depth(self, input_dim: int) -> int:
        return default_max_depth(input_dim) if self.max_depth is None else self.max_depth
