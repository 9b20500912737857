import os
from typing import Dict, Any, List
from dotenv import load_dotenv

load_dotenv()

class Config:
    """Configuration class for the perimeter lab."""

    # Quadrature orders (Gauss-Legendre unless noted)
    SLICE_ORDER = int(os.getenv("SLICE_ORDER", 64))          # inner disk order on a hyperplane slice
    HALFSPACE_ORDER = int(os.getenv("HALFSPACE_ORDER", 64))  # outer order on [t, 1]
    THETA_ORDER = int(os.getenv("THETA_ORDER", 64))          # t-order on [0, 1]
    TENSOR_ORDER = int(os.getenv("TENSOR_ORDER", 128))       # per-axis order for moments
    REFERENCE_MASS_ORDER = 256                               # 1-D radial order used for normalization
    BOUNDARY_ORDER = int(os.getenv("BOUNDARY_ORDER", 64))

    # Raster / stencil
    SUPERSAMPLE = int(os.getenv("SUPERSAMPLE", 1))          # odd only; 1 is binary center sampling
    MIN_POINTS_PER_EPSILON = 4
    POINTS_PER_EPSILON = int(os.getenv("POINTS_PER_EPSILON", 8))
    RASTER_CHUNK_POINTS = 2_000_000

    # Tolerances
    UNIT_NORM_TOL = 1e-12
    UNIT_MASS_TOL = 1e-10
    CONVEXITY_TOL = 1e-9
    PROFILE_CONVEXITY_TOL = 1e-12
    THETA_CACHE_QUANTUM = 1e-12
    PATH_EQUIVALENCE_TOL = 1e-10

    # Experiment pass criteria
    CONVERGENCE_TOL = float(os.getenv("CONVERGENCE_TOL", 0.02))
    LOWER_BOUND_TOL = float(os.getenv("LOWER_BOUND_TOL", 0.03))
    RATE_FIT_POINTS = 4

    # Monte Carlo oracles
    ORACLE_SAMPLES = int(os.getenv("ORACLE_SAMPLES", 10_000_000))
    ORACLE_MIN_SAMPLES = 10_000
    ORACLE_BATCH = 1_000_000
    ORACLE_SIGMA = 3.0
    ORACLE_STRATA = 64
    ORACLE_SEED = int(os.getenv("ORACLE_SEED", 20240611))
    SLAB_THICKNESSES = (1e-2, 5e-3, 2.5e-3)
    RADIAL_ORACLE_FLOOR = 1e-10

    # Convexity probe
    CONVEXITY_TRIALS = int(os.getenv("CONVEXITY_TRIALS", 10_000))
    CONVEXITY_RADIUS = 2.0

    # Parallel processing
    ENABLE_PARALLEL_PROCESSING = os.getenv("ENABLE_PARALLEL_PROCESSING", "false").lower() == "true"
    MAX_WORKERS = int(os.getenv("MAX_WORKERS", 4))

    # Logging
    LOG_FILE = os.getenv("PERIMETER_LAB_LOG", "perimeter_lab.log")
    LOG_TO_CONSOLE = os.getenv("LOG_TO_CONSOLE", "false").lower() == "true"

    # Paths
    OUTPUT_DIR = os.getenv("OUTPUT_DIR", "results")
    CONFIGS_DIR = "configs"
    VERSION = "0.3.0"

    @classmethod
    def validate_config(cls) -> List[str]:
        """Validate configuration and return warnings."""
        warnings = []

        for key in ("SLICE_ORDER", "HALFSPACE_ORDER", "THETA_ORDER", "TENSOR_ORDER"):
            if getattr(cls, key) < 8:
                warnings.append(f"{key}={getattr(cls, key)} is below 8; closed-form checks will not hold.")

        if cls.POINTS_PER_EPSILON < cls.MIN_POINTS_PER_EPSILON:
            warnings.append(
                f"POINTS_PER_EPSILON={cls.POINTS_PER_EPSILON} violates the epsilon >= "
                f"{cls.MIN_POINTS_PER_EPSILON}h gate."
            )

        if cls.ORACLE_SAMPLES < cls.ORACLE_MIN_SAMPLES:
            warnings.append("ORACLE_SAMPLES is below the oracle minimum of 1e4.")

        return warnings

    @classmethod
    def get_all_config(cls) -> Dict[str, Any]:
        """Return all configuration as dictionary."""
        return {
            key: value for key, value in cls.__dict__.items()
            if key.isupper() and not callable(value)
        }
