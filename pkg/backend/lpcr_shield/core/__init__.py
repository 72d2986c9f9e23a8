# LPCR Shield - Core Module
from .exceptions import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, LpcrException, exit_code_for
from .logging import get_logger, setup_logging

__all__ = [
    "EXIT_DATA",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "EXIT_UNEXPECTED",
    "EXIT_USAGE",
    "LpcrException",
    "exit_code_for",
    "get_logger",
    "setup_logging",
]
