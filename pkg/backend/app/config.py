"""
Configuration settings for the MLP spatial regression toolkit
"""
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables"""

    # App settings
    APP_NAME: str = "MLP Spatial GP"
    LOG_LEVEL: str = "INFO"

    # Worker parallelism for matrix builds, projector tables and prediction
    THREADS: int = 1

    # Diagnostics refuse to densify covariance operators above this size
    DENSIFY_CAP: int = 5000

    # Dense Cholesky simulation limit
    SIMULATION_MAX_N: int = 10000

    # Proposal adaptation (burn-in only)
    ADAPT_INTERVAL: int = 50
    TARGET_ACCEPTANCE: float = 0.40

    # Posterior draws used per predictive surface
    SURFACE_MAX_DRAWS: int = 2000

    # Use CHOLMOD (scikit-sparse) for the sparse core when it is installed
    USE_CHOLMOD: bool = True

    # Predictive variances below -tol * (sigma2 + tau2) are reported, not clamped
    NEGATIVE_VARIANCE_TOL: float = 1e-8

    class Config:
        env_file = ".env"
        env_prefix = "MLPGP_"
        extra = "ignore"


settings = Settings()
