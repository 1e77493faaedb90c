# settings.py - настройки fuzzrate из переменных окружения
import logging
import os

from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)

# Загрузка переменных окружения
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    logger.info("python-dotenv не установлен, используем переменные окружения системы")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Переменная {name}={raw!r} не является числом, используем {default}")
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Переменная {name}={raw!r} не является целым числом, используем {default}")
        return default


LOG_LEVEL = os.getenv("FUZZRATE_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Окно и сетка поиска супремума по параметру
WINDOW_LOW = _env_float("FUZZRATE_WINDOW_LOW", 1e-3)
WINDOW_HIGH = _env_float("FUZZRATE_WINDOW_HIGH", 1e3)
GRID_RESOLUTION = _env_int("FUZZRATE_GRID_RESOLUTION", 1024)
PARAM_TOL = _env_float("FUZZRATE_PARAM_TOL", 1e-8)
TOP_CELLS = _env_int("FUZZRATE_TOP_CELLS", 3)

# Расширение окна к открытым/неограниченным концам
GROWTH_FACTOR = _env_float("FUZZRATE_GROWTH_FACTOR", 10.0)
MAX_EXPANSIONS = _env_int("FUZZRATE_MAX_EXPANSIONS", 6)
EXPANSION_FACTOR = _env_float("FUZZRATE_EXPANSION_FACTOR", 10.0)
LIMIT_RTOL = _env_float("FUZZRATE_LIMIT_RTOL", 1e-6)

# Допуски проверок
FIXED_POINT_TOL = _env_float("FUZZRATE_FIXED_POINT_TOL", 1e-9)
WITNESS_TOL = _env_float("FUZZRATE_WITNESS_TOL", 1e-6)
USE_ANALYTIC = os.getenv("FUZZRATE_USE_ANALYTIC", "true").lower() == "true"


class SearchConfig(BaseModel):
    """
    Параметры численного поиска супремума и квазинеподвижных точек.
    Значения по умолчанию берутся из переменных окружения FUZZRATE_*.
    """
    model_config = ConfigDict(frozen=True)

    window_low: float = WINDOW_LOW
    window_high: float = WINDOW_HIGH
    resolution: int = Field(GRID_RESOLUTION, ge=2)
    param_tol: float = Field(PARAM_TOL, gt=0)
    top_cells: int = Field(TOP_CELLS, ge=1)
    growth_factor: float = Field(GROWTH_FACTOR, gt=1)
    max_expansions: int = Field(MAX_EXPANSIONS, ge=0)
    expansion_factor: float = Field(EXPANSION_FACTOR, gt=1)
    limit_rtol: float = Field(LIMIT_RTOL, gt=0)
    fixed_point_tol: float = Field(FIXED_POINT_TOL, gt=0)
    witness_tol: float = Field(WITNESS_TOL, gt=0)
    use_analytic: bool = USE_ANALYTIC

    @model_validator(mode="after")
    def _check_window(self):
        if not self.window_low < self.window_high:
            raise ValueError(f"пустое окно поиска [{self.window_low}, {self.window_high}]")
        return self


DEFAULT_SEARCH = SearchConfig()
