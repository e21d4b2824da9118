import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from config import KMEANS_MAX_ITER, N_CLUSTERS, N_INIT
from src.core.errors import ClusteringError, DimensionMismatchError

logger = logging.getLogger(__name__)

# Допуск на округление при проверке монотонности инерции
_MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class KMeansModel:
    """Результат K-Means: центроиды и итоговая внутрикластерная сумма квадратов."""

    k: int
    centroids: np.ndarray
    inertia: float
    labels: np.ndarray
    n_iter: int
    inertia_history: tuple[float, ...] = field(default=())

    def assign(self, point: np.ndarray) -> int:
        """Индекс ближайшего центроида; при равенстве - наименьший."""
        point = np.asarray(point, dtype=np.float64)
        dim = self.centroids.shape[1]
        if point.ndim != 1 or point.shape[0] != dim:
            actual = point.shape[0] if point.ndim == 1 else point.size
            raise DimensionMismatchError(dim, actual, f"point of shape {point.shape}")
        return int(np.argmin(np.sum((self.centroids - point) ** 2, axis=1)))

    def predict(self, points: np.ndarray) -> np.ndarray:
        return nearest_centroids(np.asarray(points, dtype=np.float64), self.centroids)


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Матрица квадратов евклидовых расстояний (n, k)."""
    return np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)


def nearest_centroids(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin берёт первый минимум, то есть наименьший индекс
    return np.argmin(squared_distances(points, centroids), axis=1)


def wcss(centroids: np.ndarray, points: np.ndarray, labels: np.ndarray) -> float:
    """Сумма квадратов расстояний точек до центроидов своих кластеров."""
    if points.shape[0] == 0:
        return 0.0
    return float(np.sum((points - centroids[labels]) ** 2))


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Начальные центры k-means++: вероятность выбора пропорциональна квадрату расстояния."""
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = closest.sum()
        index = rng.choice(n, p=closest / total) if total > 0 else rng.integers(n)
        centers.append(points[index])
        closest = np.minimum(closest, np.sum((points - points[index]) ** 2, axis=1))
    return np.array(centers, dtype=np.float64)


def _update_centroids(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Среднее точек каждого кластера; пустой кластер переносится в самую далёкую точку."""
    k = centroids.shape[0]
    updated = centroids.copy()
    distances = np.sum((points - centroids[labels]) ** 2, axis=1)
    for j in range(k):
        members = labels == j
        if np.any(members):
            updated[j] = points[members].mean(axis=0)
            continue
        farthest = int(np.argmax(distances))
        logger.debug("Cluster %d is empty, moving it to point %d", j, farthest)
        updated[j] = points[farthest]
        distances[farthest] = -1.0
    return updated


def lloyd(
        points: np.ndarray,
        initial_centroids: np.ndarray,
        max_iter: int,
) -> KMeansModel:
    """Итерации Ллойда до стабилизации назначений или max_iter.

    Инерция проверяется на невозрастание после каждого шага.
    """
    centroids = initial_centroids.copy()
    labels = nearest_centroids(points, centroids)
    history = [wcss(centroids, points, labels)]
    n_iter = 0

    for n_iter in range(1, max_iter + 1):  # noqa: B007
        centroids = _update_centroids(points, labels, centroids)
        new_labels = nearest_centroids(points, centroids)
        inertia = wcss(centroids, points, new_labels)
        if inertia > history[-1] + _MONOTONE_TOL * max(1.0, history[-1]):
            msg = f"Lloyd inertia increased from {history[-1]} to {inertia} at iteration {n_iter}"
            raise ClusteringError(msg)
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    return KMeansModel(
        k=centroids.shape[0],
        centroids=centroids,
        inertia=history[-1],
        labels=labels,
        n_iter=n_iter,
        inertia_history=tuple(history),
    )


def _single_run(points: np.ndarray, k: int, max_iter: int, seed: np.random.SeedSequence) -> KMeansModel:
    rng = np.random.default_rng(seed)
    return lloyd(points, kmeans_plus_plus(points, k, rng), max_iter)


class KMeansClusterer:
    """K-Means с k-means++ и несколькими перезапусками."""

    def __init__(
            self,
            k: int = N_CLUSTERS,
            n_init: int = N_INIT,
            max_iter: int = KMEANS_MAX_ITER,
            n_jobs: int = 1,
            progress: bool = False,
    ) -> None:
        if k < 1 or n_init < 1 or max_iter < 1:
            msg = f"k, n_init and max_iter must be positive, got {k}, {n_init}, {max_iter}"
            raise ClusteringError(msg)
        self.k = k
        self.n_init = n_init
        self.max_iter = max_iter
        self.n_jobs = n_jobs
        self.progress = progress

    def fit(self, points: np.ndarray, seed: int | np.random.SeedSequence) -> KMeansModel:
        """Выбирает лучший из n_init запусков по (инерция, номер запуска).

        Args:
            points: Матрица точек (n, d).
            seed: Сид или SeedSequence; каждый запуск получает свой подпоток.

        Returns:
            KMeansModel: Модель с минимальной инерцией.

        """
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2:  # noqa: PLR2004
            msg = f"points must be a 2-D matrix, got shape {points.shape}"
            raise ClusteringError(msg)
        if points.shape[0] < self.k:
            msg = f"cannot form {self.k} clusters from {points.shape[0]} points"
            raise ClusteringError(msg)
        if not np.all(np.isfinite(points)):
            msg = "points contain non-finite values"
            raise ClusteringError(msg)

        sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seeds = sequence.spawn(self.n_init)

        if self.n_jobs > 1:
            with ProcessPoolExecutor(max_workers=self.n_jobs) as executor:
                futures = [executor.submit(_single_run, points, self.k, self.max_iter, s) for s in seeds]
                runs = [future.result() for future in tqdm(futures, desc="K-Means restarts", disable=not self.progress)]
        else:
            runs = [
                _single_run(points, self.k, self.max_iter, s)
                for s in tqdm(seeds, desc="K-Means restarts", disable=not self.progress)
            ]

        best_index = min(range(len(runs)), key=lambda i: (runs[i].inertia, i))
        best = runs[best_index]
        logger.info(
            "K-Means k=%d: best inertia %.6g from restart %d of %d",
            self.k, best.inertia, best_index, self.n_init,
        )
        return best


def kmeans_fit(
        points: np.ndarray,
        k: int = N_CLUSTERS,
        n_init: int = N_INIT,
        max_iter: int = KMEANS_MAX_ITER,
        seed: int | np.random.SeedSequence = 0,
) -> KMeansModel:
    return KMeansClusterer(k, n_init, max_iter).fit(points, seed)
