import os
import re
from pathlib import Path
from dotenv import load_dotenv  # type: ignore
import logging

load_dotenv()

def _get_dynamic_version():
    try:
        root_dir = Path(__file__).parent.parent.parent
        notes_dir = root_dir / "release-notes"
        if not notes_dir.exists():
            return "0.0.0"

        versions = []
        for file in notes_dir.glob("v*.md"):
            match = re.search(r"v(\d+\.\d+\.\d+)", file.name)
            if match:
                versions.append(match.group(1))

        if versions:
            # Sort by semver (integers)
            versions.sort(key=lambda s: [int(u) for u in s.split('.')])
            return versions[-1]
    except Exception as e:
        logging.warning(f"Failed to determine dynamic version: {e}")
    return "0.0.1"

def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ('1', 'true', 'yes', 'y')

def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)))
    except ValueError:
        return default

def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except ValueError:
        return default

class Config:
    """Solver suite configuration with validation"""

    VERSION = _get_dynamic_version()

    BASE_DIR = Path(__file__).parent.parent
    ROOT_DIR = BASE_DIR.parent
    DATA_DIR = Path(os.getenv('CENTDIAN_DATA_DIR', str(BASE_DIR / "data")))
    LOG_DIR = Path(os.getenv('CENTDIAN_LOG_DIR', str(ROOT_DIR / "logs")))
    LOG_LEVEL = os.getenv('CENTDIAN_LOG_LEVEL', 'INFO').strip().upper()
    LOG_TO_FILE = _env_flag('CENTDIAN_LOG_TO_FILE', 'true')

    INSTANCE_FORMAT = "centdian-instance/1"
    SOLUTION_FORMAT = "centdian-solution/1"

    # single solver-facing tolerance; dominance checks use exact comparisons
    SOLVER_TOL = 1e-6
    CUT_VIOLATION_TOL = 1e-7
    RESIDUAL_TOL = 1e-7

    MIP_GAP = _env_float('CENTDIAN_GAP', 1e-6)
    INT_TOL = _env_float('CENTDIAN_INT_TOL', 1e-6)
    TIME_LIMIT = _env_float('CENTDIAN_TIME_LIMIT', 600.0)
    ROOT_CUT_ROUNDS = _env_int('CENTDIAN_ROOT_CUT_ROUNDS', 20)
    NODE_CUT_ROUNDS = _env_int('CENTDIAN_NODE_CUT_ROUNDS', 50)
    FRACTIONAL_CUTS = _env_flag('CENTDIAN_FRACTIONAL_CUTS', 'false')
    SEPARATION_WORKERS = _env_int('CENTDIAN_SEPARATION_WORKERS', 1)
    LP_METHOD = os.getenv('CENTDIAN_LP_METHOD', 'highs').strip()

    BRUTE_FORCE_MAX_EDGES = _env_int('CENTDIAN_BRUTE_FORCE_MAX_EDGES', 18)

    # instance generator presets
    GRID_CELL_SIDE = 10.0
    EDGE_DELETION_PROB = 0.2
    NODE_COST_RANGE = (7, 13)
    DEMAND_RANGE = (10, 300)
    UTILITY_MULTIPLIER = 2.0
    GENERATOR_MAX_RETRIES = 100

    BENCH_ALPHAS = (0.25, 0.4)
    BENCH_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)
    BENCH_SEEDS = 10
    BENCH_NODES = 20
    MAX_LEDGER_RUNS = _env_int('CENTDIAN_MAX_LEDGER_RUNS', 5000)

    @classmethod
    def ensure_directories(cls):
        """Ensure all required directories exist"""
        for directory in [cls.DATA_DIR, cls.LOG_DIR]:
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate(cls):
        """Range checks on numeric settings"""
        cls.ensure_directories()

        for name in ('MIP_GAP', 'INT_TOL', 'TIME_LIMIT'):
            if getattr(cls, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(cls, name)}")

        if cls.SEPARATION_WORKERS < 1:
            raise ValueError(f"SEPARATION_WORKERS must be >= 1, got {cls.SEPARATION_WORKERS}")

        if cls.ROOT_CUT_ROUNDS < 0 or cls.NODE_CUT_ROUNDS < 1:
            raise ValueError("ROOT_CUT_ROUNDS must be >= 0 and NODE_CUT_ROUNDS >= 1")

        if cls.LP_METHOD not in ('highs', 'highs-ds', 'highs-ipm'):
            logging.warning(f"⚠️ Unknown LP method '{cls.LP_METHOD}', falling back to 'highs'")
            cls.LP_METHOD = 'highs'

        if cls.FRACTIONAL_CUTS:
            logging.info("🔁 Fractional-node separation enabled")
