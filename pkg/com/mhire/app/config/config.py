import os
import logging
from contextlib import contextmanager
from typing import Iterator, Optional

import mpmath
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9
DEFAULT_CHECK_TOLERANCE = 1e-7
DEFAULT_PRECISION = "double"
DOUBLE_PRECISION_BITS = 53


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


class Config:
    """Engine settings, read once from the environment (.env honoured).

    The CLI overrides attributes of the singleton for a single run; tests
    tighten EPSILON the same way.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
            cls._instance._load()
        return cls._instance

    def _load(self) -> None:
        self.EPSILON = float(os.getenv("AIRY_EPSILON", DEFAULT_EPSILON))
        self.CHECK_TOLERANCE = float(os.getenv("AIRY_CHECK_TOLERANCE", DEFAULT_CHECK_TOLERANCE))
        self.STRICT = _env_flag("AIRY_STRICT")
        self.OUTPUT_FORMAT = os.getenv("AIRY_OUTPUT_FORMAT", "json")
        self.LOG_LEVEL = os.getenv("AIRY_LOG_LEVEL", "WARNING")
        self.PRECISION_BITS: Optional[int] = None
        self.set_precision(os.getenv("AIRY_PRECISION", DEFAULT_PRECISION))

    def reset(self) -> None:
        """Re-read the environment, dropping any runtime override."""
        self._load()

    def set_precision(self, mode: str) -> None:
        """Select "double" (hardware complex) or "big:N" (mpmath, N bits)."""
        mode = (mode or DEFAULT_PRECISION).strip().lower()
        if mode == "double":
            self.PRECISION = "double"
            self.PRECISION_BITS = None
            mpmath.mp.prec = DOUBLE_PRECISION_BITS
            return
        if mode.startswith("big:"):
            try:
                bits = int(mode.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"Invalid precision mode: {mode}")
            if bits < DOUBLE_PRECISION_BITS:
                raise ValueError(f"big precision needs at least {DOUBLE_PRECISION_BITS} bits, got {bits}")
            self.PRECISION = mode
            self.PRECISION_BITS = bits
            mpmath.mp.prec = bits
            logger.info(f"Working precision set to {bits} bits")
            return
        raise ValueError(f"Invalid precision mode: {mode}")

    @property
    def is_big_precision(self) -> bool:
        return self.PRECISION_BITS is not None

    @contextmanager
    def scalar_context(self, mode: Optional[str] = None) -> Iterator["Config"]:
        """Temporarily switch working precision, restoring the previous mode on exit."""
        previous = self.PRECISION
        if mode is not None:
            self.set_precision(mode)
        try:
            yield self
        finally:
            self.set_precision(previous)
