import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from src.core.errors import CheckpointError
from src.core.rl.actor_critic import ActorCriticModel
from src.core.rl.ppo import TrainConfig

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "boundary-explorer-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    model: ActorCriticModel
    train_config: TrainConfig
    system_name: str


class CheckpointStorage:
    """Чекпоинт модели в JSON.

    Формат (версия 1): объект с ключами format, version, system, seed,
    input_dim, action_scale, hidden_sizes, train_config и params, где
    params[name] = {"shape": [...], "data": [...]} в порядке C. Числа
    записываются кратчайшей точной десятичной записью, поэтому файл
    побайтно одинаков для одинаковых моделей.
    """

    def save(self, checkpoint: Checkpoint, path: Path) -> Path:
        model = checkpoint.model
        payload: dict[str, Any] = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "system": checkpoint.system_name,
            "seed": checkpoint.train_config.seed,
            "input_dim": model.input_dim,
            "action_scale": model.action_scale,
            "hidden_sizes": list(model.hidden_sizes),
            "train_config": checkpoint.train_config.to_dict(),
            "params": {
                name: {"shape": list(value.shape), "data": [float(v) for v in value.ravel()]}
                for name, value in model.params.items()
            },
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(payload, f, indent=1)
            f.write("\n")
        logger.info("Saved checkpoint to: %s", path)
        return path

    def load(self, path: Path) -> Checkpoint:
        """Загружает чекпоинт и проверяет его формат и целостность."""
        if not path.exists():
            msg = f"checkpoint not found: {path} (run 'train' first)"
            raise CheckpointError(msg)
        try:
            with path.open("r", encoding="utf-8") as f:
                payload = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            msg = f"cannot read checkpoint {path}: {e}"
            raise CheckpointError(msg) from e

        if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
            msg = f"unsupported checkpoint format in {path}"
            raise CheckpointError(msg)

        try:
            train_data = dict(payload["train_config"])
            train_data["hidden_sizes"] = tuple(train_data["hidden_sizes"])
            train_config = TrainConfig(**train_data)
            params = {
                name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
                for name, entry in payload["params"].items()
            }
            model = ActorCriticModel(
                input_dim=int(payload["input_dim"]),
                action_scale=float(payload["action_scale"]),
                hidden_sizes=tuple(payload["hidden_sizes"]),
                params=params,
            )
        except (KeyError, TypeError, ValueError) as e:
            msg = f"malformed checkpoint {path}: {e}"
            raise CheckpointError(msg) from e

        reference = ActorCriticModel.initialize(
            model.input_dim, model.action_scale, np.random.default_rng(0), model.hidden_sizes,
        ).params
        shapes_match = set(params) == set(reference) and all(
            params[name].shape == value.shape for name, value in reference.items()
        )
        if not shapes_match or not model.is_finite():
            msg = f"checkpoint {path} has missing or non-finite parameters"
            raise CheckpointError(msg)

        logger.info("Loaded checkpoint from: %s", path)
        return Checkpoint(model=model, train_config=train_config, system_name=str(payload["system"]))
