import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from src.core.service.kmeans_clusterer import KMeansModel
from src.core.service.trajectory_collector import CounterfactualRecord, states_matrix
from src.utils.vector_utils import VectorUtils

logger = logging.getLogger(__name__)

PLOT_DIM = 2


class ClusterPlotData:
    """Данные для диаграммы кластеров контрфактических состояний (только 2-D).

    Файл содержит строки `x0,x1,cluster` для каждого состояния, затем
    секцию центроидов `centroid,cx0,cx1,cluster`.
    """

    def emit(
            self,
            records: Sequence[CounterfactualRecord],
            kmeans_model: KMeansModel | None,
            path: Path,
            input_dim: int,
    ) -> Path | None:
        """Пишет файл данных диаграммы.

        Args:
            records: Контрфактические записи.
            kmeans_model: Модель K-Means (None, если записей нет).
            path: Путь к CSV.
            input_dim: Размерность входа системы.

        Returns:
            Path | None: Путь к файлу или None, если размерность не 2-D.

        """
        if input_dim != PLOT_DIM:
            logger.info("Cluster plot skipped for %d-D input", input_dim)
            return None

        states = states_matrix(records)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["x0", "x1", "cluster"])
            if kmeans_model is None or not records:
                logger.info("Saved empty cluster plot data to: %s", path)
                return path

            labels = kmeans_model.predict(states)
            for point, label in zip(states, labels):
                writer.writerow([*(VectorUtils.format_float(v) for v in point), int(label)])

            writer.writerow(["centroid", "cx0", "cx1", "cluster"])
            for j, centroid in enumerate(np.asarray(kmeans_model.centroids)):
                writer.writerow(["centroid", *(VectorUtils.format_float(v) for v in centroid), j])

        logger.info("Saved cluster plot data (%d points, %d centroids) to: %s", len(records), kmeans_model.k, path)
        return path
