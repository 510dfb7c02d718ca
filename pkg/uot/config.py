import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).parent.parent


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(f"UOT_{name}", default))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(f"UOT_{name}", default))


# Paths
ARTIFACTS_DIR        = BASE_DIR / "artifacts"
SAMPLE_DENSITIES_DIR = BASE_DIR / "sample_densities"
OUTPUT_DIR           = Path(os.getenv("UOT_OUTPUT_DIR", str(BASE_DIR / "runs")))

# Logging
LOG_LEVEL = os.getenv("UOT_LOG_LEVEL", "WARNING")

# Discretization
N_T = _env_int("N_T", 15)
N_X = _env_int("N_X", 35)
N_Y = _env_int("N_Y", 35)

# Optimization
ITERATIONS = _env_int("ITERATIONS", 200_000)
TAU1       = _env_float("TAU1", 1e-3)
TAU2       = _env_float("TAU2", 1e-1)
ALPHA      = _env_float("ALPHA", 100.0)

# Stopping / reporting
TOLERANCE    = _env_float("TOLERANCE", 1e-6)
REPORT_EVERY = _env_int("REPORT_EVERY", 1000)

# Densities below this are treated as empty cells in the kinetic term
DENSITY_EPS = 1e-12

# Cells with more mass than this count as "support" for the HJ equality check
SUPPORT_EPS = 1e-3

# Field files
CSV_FLOAT_FORMAT = "%.17g"

# α values of the exp2 sweeps
ALPHA_SWEEP = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0)
