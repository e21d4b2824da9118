import sys
from pathlib import Path

if getattr(sys, "frozen", False):
    BASE_PATH = Path(sys.executable).resolve().parent
else:
    BASE_PATH = Path(__file__).resolve().parent

DEFAULT_OUTPUT_DIR = BASE_PATH / "output"
DEFAULT_SYSTEM = "system_1_threshold"
DEFAULT_SEED = 0

# Среда исследования
ACTION_SCALE = 1.0
TRAIN_MAX_STEPS = 100

# Обучение PPO
TOTAL_TIMESTEPS = 20_000
N_ENVS = 4
N_STEPS = 256  # на одну среду за rollout
BATCH_SIZE = 64
N_EPOCHS = 10
LEARNING_RATE = 0.0003
GAMMA = 0.85  # эффективный горизонт около 7 шагов
GAE_LAMBDA = 0.95
CLIP_RANGE = 0.2
VALUE_COEF = 0.5
ENTROPY_COEF = 0.0
MAX_GRAD_NORM = 0.5
HIDDEN_SIZES = (64, 64)
ROLLOUT_WORKERS = 1

# Анализ
ANALYSIS_EPISODES = 100
ANALYSIS_MAX_STEPS = 200

# Кластеризация
N_CLUSTERS = 4
N_INIT = 10
KMEANS_MAX_ITER = 300
KMEANS_JOBS = 1  # процессов для перезапусков

# Дерево решений
MIN_SAMPLES_SPLIT = 2

# Проверка восстановленных порогов
THRESHOLD_TOLERANCE = 0.25

# Внешние системы
EXTERNAL_TIMEOUT_S = 30.0
