"""
Runtime settings
Simulator defaults read from the environment, or from a .env file next to
the working directory.
"""

import os

from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Environment-backed defaults, read once at import."""

    def __init__(self):
        self.log_level = os.getenv("ELD_LOG_LEVEL", "INFO").upper()
        self.step = float(os.getenv("ELD_STEP", "1e-3"))
        self.t_max = float(os.getenv("ELD_T_MAX", "100"))
        self.stop_tol = float(os.getenv("ELD_STOP_TOL", "1e-6"))
        self.record_every = int(os.getenv("ELD_RECORD_EVERY", "100"))
        self.delta = float(os.getenv("ELD_DELTA", "10"))
        self.sweep_workers = int(os.getenv("ELD_SWEEP_WORKERS", str(os.cpu_count() or 1)))


settings = Settings()
