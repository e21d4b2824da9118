import logging
from pathlib import Path

import yaml

from src.core.errors import ConfigError
from src.core.pipeline_config import PipelineConfig

logger = logging.getLogger(__name__)


class ConfigStorage:
    """Загрузка и сохранение конфигурации в плоском YAML."""

    @staticmethod
    def load(path: Path | None) -> PipelineConfig:
        """Читает конфигурацию; без файла возвращает значения по умолчанию."""
        if path is None:
            return PipelineConfig()
        try:
            with path.open("r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except OSError as e:
            msg = f"cannot read config file {path}: {e}"
            raise ConfigError(msg) from e
        except yaml.YAMLError as e:
            msg = f"invalid YAML in {path}: {e}"
            raise ConfigError(msg) from e

        if data is None:
            data = {}
        if not isinstance(data, dict):
            msg = f"config file {path} must contain a flat mapping"
            raise ConfigError(msg)
        nested = [key for key, value in data.items() if isinstance(value, dict)]
        if nested:
            msg = f"config must be flat, nested keys: {', '.join(map(str, nested))}"
            raise ConfigError(msg)

        logger.info("Loaded config from: %s", path)
        return PipelineConfig.from_mapping(data)

    @staticmethod
    def save(config: PipelineConfig, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            yaml.safe_dump(config.to_mapping(), f, sort_keys=False, allow_unicode=True)
        logger.info("Saved effective config to: %s", path)
        return path
