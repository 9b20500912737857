# logging_utils.py - one file logger shared by numerics, lab and the CLI
import json
import logging
import os
import time
from typing import Any, Dict, Optional

from utils.serialization import json_safe

LOGGER_NAME = "PerimeterLab"

_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}

_logger: Optional[logging.Logger] = None


def get_logger() -> logging.Logger:
    """The lab logger, configured from Config on first use."""
    if _logger is None:
        from config import Config
        return setup_logging(Config.LOG_FILE, console=Config.LOG_TO_CONSOLE)
    return _logger


def setup_logging(log_file: str = "perimeter_lab.log",
                  console_level: int = logging.WARNING,
                  file_level: int = logging.DEBUG,
                  console: bool = False) -> logging.Logger:
    """
    (Re)configure the lab logger.

    Args:
        log_file: Log path; its directory is created when missing
        console_level: Threshold for the optional stderr handler
        file_level: Threshold for the file handler
        console: Attach a stderr handler as well

    Returns:
        The configured logger (never propagates to root)
    """
    global _logger

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)

    if console:
        stream = logging.StreamHandler()
        stream.setLevel(console_level)
        stream.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(message)s", datefmt="%H:%M:%S"))
        logger.addHandler(stream)

    try:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handler = logging.FileHandler(log_file, encoding="utf-8", mode="a")
        handler.setLevel(file_level)
        handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(threadName)s %(message)s"))
        logger.addHandler(handler)
    except OSError:
        # read-only working directory
        logger.addHandler(logging.NullHandler())

    logger.propagate = False
    _logger = logger
    return logger


def _level(name: str) -> int:
    return _LEVELS.get(name.lower(), logging.INFO)


def log_step(step_name: str, message: str, level: str = "info"):
    """Write ``[STAGE] message`` at the given level name."""
    stage = step_name.upper()
    get_logger().log(_level(level), f"[{stage}] {message}")


def log_record(source: str, event: str, data: Dict[str, Any], level: str = "info"):
    """
    One structured line per report row or oracle estimate.

    numpy scalars and arrays in ``data`` are converted to plain JSON, so the
    record can be parsed back with ``json.loads`` after the ``RECORD`` prefix.
    """
    payload = {"source": source.upper(), "event": event, "data": json_safe(data)}
    get_logger().log(_level(level), "RECORD " + json.dumps(payload, sort_keys=True, default=str))


class Timer:
    """Wall-clock timer for one epsilon row, check or oracle run."""

    def __init__(self, name: str = "Operation", quiet: bool = False):
        self.name = name
        self.quiet = quiet
        self.start_time: Optional[float] = None
        self.end_time: Optional[float] = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        if not self.quiet:
            log_step("TIMER", f"start {self.name}", level="debug")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_time = time.perf_counter()
        if not self.quiet:
            log_step("TIMER", f"{self.name}: {self.get_elapsed():.3f}s", level="debug")

    def get_elapsed(self) -> float:
        if self.start_time is None:
            return 0.0
        end = self.end_time if self.end_time is not None else time.perf_counter()
        return end - self.start_time


def log_performance(stage: str, operation: str, duration: float, success: bool = True,
                    additional_info: Optional[Dict] = None):
    """Timing line for one operation; wall times go to the log, never into reports."""
    status = "ok" if success else "failed"
    message = f"[{stage.upper()}] {operation} {status} in {duration:.3f}s"
    if additional_info:
        message += " " + " ".join(f"{k}={v}" for k, v in sorted(additional_info.items()))
    get_logger().info(message)


def log_error(stage: str, operation: str, error: Exception, context: Optional[Dict] = None):
    """Error line with traceback and the offending parameters."""
    message = f"[{stage.upper()}] {operation} raised {type(error).__name__}: {error}"
    if context:
        message += " | " + ", ".join(f"{k}={v}" for k, v in context.items())
    get_logger().error(message, exc_info=True)


class ConsoleFormatter:
    """Status prefixes for CLI output."""

    @staticmethod
    def success(message: str) -> str:
        return f"✅ {message}"

    @staticmethod
    def warning(message: str) -> str:
        return f"⚠️  {message}"

    @staticmethod
    def error(message: str) -> str:
        return f"❌ {message}"
