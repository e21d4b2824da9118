import logging
from pathlib import Path

from src.core.rl.ppo import RolloutMetrics
from src.core.service.rule_extractor import RuleSet
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

METRICS_HEADER = "rollout_idx,timesteps,mean_ep_reward,policy_loss,value_loss"


class ArtifactStorage:
    """Пути и запись артефактов одного запуска в выходной директории."""

    def __init__(self, output_dir: Path, system_name: str) -> None:
        self.output_dir = output_dir
        self.system_name = system_name
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info("Output directory set to: %s", self.output_dir.resolve())

    def path(self, suffix: str) -> Path:
        """Путь вида `<output_dir>/<system_name>_<suffix>`."""
        return self.output_dir / f"{self.system_name}_{suffix}"

    @property
    def config_path(self) -> Path:
        return self.path("config.yaml")

    @property
    def checkpoint_path(self) -> Path:
        return self.path("model.json")

    @property
    def metrics_path(self) -> Path:
        return self.path("metrics.csv")

    @property
    def trajectories_path(self) -> Path:
        return self.path("trajectories.csv")

    @property
    def rules_text_path(self) -> Path:
        return self.path("rules.txt")

    @property
    def rules_tsv_path(self) -> Path:
        return self.path("rules.tsv")

    @property
    def clusters_path(self) -> Path:
        return self.path("clusters.csv")

    @property
    def report_path(self) -> Path:
        return self.path("report.txt")

    def save_text(self, path: Path, text: str) -> Path:
        with path.open("w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info("Saved %s", path)
        return path

    def start_metrics_log(self) -> None:
        """Создаёт лог метрик заново (только заголовок)."""
        self.save_text(self.metrics_path, METRICS_HEADER + "\n")

    def append_metrics(self, metrics: RolloutMetrics) -> None:
        row = ",".join([
            str(metrics.rollout_idx),
            str(metrics.timesteps),
            VectorUtils.format_float(metrics.mean_ep_reward),
            VectorUtils.format_float(metrics.policy_loss),
            VectorUtils.format_float(metrics.value_loss),
        ])
        with self.metrics_path.open("a", encoding="utf-8", newline="\n") as f:
            f.write(row + "\n")

    def save_rules(self, tree_text: str, rule_set: RuleSet) -> tuple[Path, Path]:
        """Пишет текст дерева с правилами ЕСЛИ-ТО и TSV с точными порогами."""
        text = tree_text + "\n" + "\n".join(rule_set.lines) + "\n"
        return (
            self.save_text(self.rules_text_path, text),
            self.save_text(self.rules_tsv_path, "\n".join(rule_set.tsv_lines()) + "\n"),
        )
