import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.core.errors import CheckpointError, NoCounterfactualsError
from src.core.pipeline_config import PipelineConfig
from src.core.rl.ppo import PPOTrainer, TrainingResult
from src.core.service.explorer_env import ExplorerEnv
from src.core.service.kmeans_clusterer import KMeansClusterer, KMeansModel
from src.core.service.pipeline_validator import PipelineValidator, ValidationReport
from src.core.service.rule_extractor import (
    DecisionTreeBuilder,
    RuleSet,
    TreeNode,
    export_text,
    extract_rules,
    feature_names_for,
)
from src.core.service.trajectory_collector import (
    CounterfactualRecord,
    TrajectoryCollector,
    states_matrix,
    uniform_random_policy,
)
from src.core.storage.artifact_storage import ArtifactStorage
from src.core.storage.checkpoint_storage import Checkpoint, CheckpointStorage
from src.core.storage.config_storage import ConfigStorage
from src.core.storage.trajectory_storage import TrajectoryStorage
from src.utils.vector_utils import (
    STREAM_ANALYSIS,
    STREAM_KMEANS,
    STREAM_RANDOM_BASELINE,
    STREAM_TRAIN_ENVS,
    VectorUtils,
)
from src.visualizer.cluster_plot_data import ClusterPlotData

logger = logging.getLogger(__name__)

NO_COUNTERFACTUALS_NOTICE = "no counterfactual transitions collected: clustering and rule extraction skipped\n"


@dataclass
class RuleExtraction:
    kmeans_model: KMeansModel | None
    tree: TreeNode | None
    rule_set: RuleSet | None
    tree_text: str


@dataclass
class AnalysisResult:
    records: list[CounterfactualRecord]
    extraction: RuleExtraction
    plot_data_path: Path | None
    trained_mean_reward: float
    random_mean_reward: float


class BoundaryPipeline:
    """Обучение агента, сбор контрфактических переходов, кластеры, правила и отчёт."""

    def __init__(self, config: PipelineConfig, progress: bool = True) -> None:
        config.validate()
        self.config = config
        self.progress = progress
        self.system = config.build_system()
        self.storage = ArtifactStorage(Path(config.output_dir), self.system.name)
        self.checkpoints = CheckpointStorage()
        self.trajectories = TrajectoryStorage()

    def _make_env(self, max_steps: int, rng: np.random.Generator) -> ExplorerEnv:
        return ExplorerEnv(self.system, self.config.action_scale, max_steps, rng)

    def train(self) -> TrainingResult:
        """Обучает агента PPO и сохраняет чекпоинт, лог метрик и итоговую конфигурацию."""
        train_config = self.config.train_config()
        ConfigStorage.save(self.config, self.storage.config_path)
        self.storage.start_metrics_log()

        def env_factory(index: int) -> ExplorerEnv:
            rng = VectorUtils.make_rng(self.config.seed, STREAM_TRAIN_ENVS, index)
            return self._make_env(self.config.train_max_steps, rng)

        trainer = PPOTrainer(env_factory, train_config, self.storage.append_metrics, self.progress)
        result = trainer.train()
        self.checkpoints.save(
            Checkpoint(model=result.model, train_config=train_config, system_name=self.system.name),
            self.storage.checkpoint_path,
        )
        return result

    def analyze(self) -> AnalysisResult:
        """Собирает контрфактические переходы обученной политикой и извлекает правила.

        Raises:
            NoCounterfactualsError: если не найдено ни одного перехода через границу.

        """
        checkpoint = self.checkpoints.load(self.storage.checkpoint_path)
        if checkpoint.system_name != self.system.name or checkpoint.model.input_dim != self.system.input_dim:
            msg = (f"checkpoint was trained on {checkpoint.system_name} "
                   f"({checkpoint.model.input_dim}-D), not on {self.system.name}")
            raise CheckpointError(msg)

        episodes = self.config.episodes
        max_steps = self.config.analysis_max_steps
        collector = TrajectoryCollector(self._make_env(max_steps, self._analysis_rng()), self.progress)
        records = collector.collect_counterfactuals(checkpoint.model, episodes, max_steps)

        # Случайная политика на тех же начальных состояниях
        baseline = TrajectoryCollector(self._make_env(max_steps, self._analysis_rng()), self.progress)
        random_policy = uniform_random_policy(
            self.config.action_scale,
            self.system.input_dim,
            VectorUtils.make_rng(self.config.seed, STREAM_RANDOM_BASELINE),
        )
        random_reward = baseline.mean_episode_reward(random_policy, episodes, max_steps)
        trained_reward = sum(record.reward for record in records) / episodes
        logger.info("Mean episode reward: trained %.3f vs random %.3f", trained_reward, random_reward)

        self.trajectories.write_csv(records, self.storage.trajectories_path, self.system.input_dim)
        extraction = self.extract_rules(records)
        if extraction.rule_set is None:
            self.storage.save_text(self.storage.rules_text_path, extraction.tree_text)
        else:
            self.storage.save_rules(extraction.tree_text, extraction.rule_set)
        plot_path = ClusterPlotData().emit(
            records, extraction.kmeans_model, self.storage.clusters_path, self.system.input_dim,
        )

        result = AnalysisResult(records, extraction, plot_path, trained_reward, random_reward)
        if not records:
            msg = f"no counterfactual transitions found for {self.system.name} in {episodes} episodes"
            raise NoCounterfactualsError(msg)
        return result

    def extract_rules(self, records: Sequence[CounterfactualRecord]) -> RuleExtraction:
        """K-Means по состояниям записей и дерево решений по меткам кластеров."""
        if not records:
            logger.warning("No counterfactual records: clustering and rule extraction skipped")
            return RuleExtraction(None, None, None, NO_COUNTERFACTUALS_NOTICE)

        points = states_matrix(records)
        k = min(self.config.n_clusters, len(records))
        if k < self.config.n_clusters:
            logger.warning("Only %d records collected, clustering with k=%d", len(records), k)

        clusterer = KMeansClusterer(
            k,
            self.config.n_init,
            self.config.kmeans_max_iter,
            n_jobs=self.config.kmeans_jobs,
            progress=self.progress,
        )
        kmeans_model = clusterer.fit(points, VectorUtils.stream_seed(self.config.seed, STREAM_KMEANS))
        tree = DecisionTreeBuilder(
            self.config.effective_max_depth(self.system.input_dim),
            self.config.min_samples_split,
        ).fit(points, kmeans_model.labels, n_classes=k)

        names = feature_names_for(self.system.input_dim)
        return RuleExtraction(kmeans_model, tree, extract_rules(tree, names), export_text(tree, names))

    def report(self) -> ValidationReport:
        """Проверяет сохранённые траектории и правила, пишет отчёт."""
        output_kind = None
        if self.config.is_external:
            output_kind = "score" if self.config.external_parse_mode == "score" else "label"
        records = self.trajectories.read_csv(self.storage.trajectories_path, output_kind)
        extraction = self.extract_rules(records)

        plot_path = self.storage.clusters_path
        report = PipelineValidator(self.config.threshold_tolerance).validate(
            self.system,
            records,
            extraction.tree,
            extraction.tree_text,
            plot_path if self.system.input_dim == 2 and plot_path.exists() else None,  # noqa: PLR2004
        )
        self.storage.save_text(self.storage.report_path, report.render())
        return report

    def _analysis_rng(self) -> np.random.Generator:
        if self.config.analysis_seed is not None:
            return np.random.default_rng(self.config.analysis_seed)
        return VectorUtils.make_rng(self.config.seed, STREAM_ANALYSIS)
