import os

# ОБЩЕЕ
PROJECT_NAME = "flowfilter"
GLOBAL_SEED = 0
OUTPUT_ROOT_ENV = "FLOWFILTER_OUTPUT_ROOT"  # Переменная окружения для корня выходных файлов
DEFAULT_OUTPUT_ROOT = os.environ.get(OUTPUT_ROOT_ENV, "runs")
LOG_DIR = "logs"
LOG_FILE = "flowfilter.log"
LOG_EVERY = 100  # Как часто тренер пишет строку в лог
LOG_MAX_BYTES = 5 * 1024 * 1024
LOG_BACKUPS = 3
LOG_LEVEL_ENV = "FLOWFILTER_LOG_LEVEL"  # Уровень консольного лога

# ФОРМАТЫ ФАЙЛОВ
CSV_FLOAT_FORMAT = "%.17g"  # Точное представление float64
CHECKPOINT_MAGIC = b"FLOWFILT"
CHECKPOINT_VERSION = 1
DATASET_SCHEMA_VERSION = 1

# АВТОМОБИЛЬ (переключение траектории)
VEHICLE_C1 = 0.1
VEHICLE_C2 = 0.5
VEHICLE_SIGMA_V = 0.01
VEHICLE_SIGMA_PHI = 0.025
VEHICLE_DT = 0.1
VEHICLE_SWITCH_TIME = 5.5
VEHICLE_VELOCITY = 1.0  # Номинальная скорость по умолчанию
VEHICLE_STEPS = 150
VEHICLE_TRAJECTORIES_FULL = 10_000  # 1.5e6 точек, полный масштаб
VEHICLE_TRAJECTORIES_DESK = 334  # ~5e4 точек

# SIR
SIR_BETA = 0.03
SIR_GAMMA = 0.01
SIR_NOISE_SIGMA = 0.001
SIR_DT = 1.0
SIR_S0 = 0.99
SIR_I0 = 0.01
SIR_R0 = 0.0
SIR_STEPS = 1000
SIR_BETA_RANGE = (0.02, 0.04)
SIR_GAMMA_RANGE = (0.005, 0.025)
SIR_ENSEMBLE_SIZE = 200
CONSERVATION_TOL = 1e-9

# ДВЕ ЛУНЫ
TWO_MOONS_POINTS = 5000
TWO_MOONS_NOISE = 0.05

# ОКНА
WINDOW_LENGTH = 5  # R
WINDOW_HORIZON = 1
CONTEXT_NOISE_SIGMA = 1.0  # В нормированных единицах
STD_FLOOR = 1e-12

# ПОТОК
FLOW_LAYERS = 10
FLOW_HIDDEN_FEATURES = 4
FLOW_CONTEXT_FEATURES = 4
FLOW_BASE_HIDDEN = 16  # Ширина 2-слойного MLP базового распределения
LOG_SIGMA_CLAMP = 7.0
LOG_SCALE_BOUND = 5.0  # Мягкое ограничение log-масштаба в авторегрессионном слое
DET_WITNESS = 1e-12

# ЭНКОДЕРЫ
ENCODER_KIND = "transformer"
ENCODER_MODEL_DIM = 32
ENCODER_HEADS = 2
ENCODER_LAYERS = 4
DECODER_LAYERS = 4
ENCODER_FF_DIM = 64
SSM_STATE_DIM = 8
SSM_CONV_WIDTH = 4
SSM_EXPANSION = 2
SSM_DEPTH = 1
MLP_HIDDEN = 64
POSITIONAL_BASE = 10000.0
NORM_EPS = 1e-5

# ОБУЧЕНИЕ
TRAIN_ITERATIONS = 10_000
TRAIN_BATCH_SIZE = 2048
LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
GRAD_CLIP_NORM = 10.0
LAMBDA_NLL = 1.0
LAMBDA_KINETIC = 0.1
LAMBDA_PRIOR = 0.01

# ОЦЕНКА
KNN_K = 1
ESTIMATE_SAMPLES = 1000
CONTOUR_LEVELS = (1, 2, 3)
CONTOUR_POINTS = 256
ROLLOUT_STEPS = 28
ROLLOUT_WINDOWS = (7, 28)
BAND_SIGMA = 2.0
KL_JITTER = 1e-12

# ВНЕШНИЕ ДАННЫЕ SIR
EXTERNAL_SUM_BOUNDS = (0.98, 1.02)
