"""
Structured logging for solver and pipeline observability.
Provides consistent JSON events across all components.
"""

import logging
import sys
from datetime import datetime

import structlog

from src.utils.config import Config

_configured = False


def _configure():
    global _configured
    if _configured:
        return

    log_file = Config.LOG_DIR / f"lzsm_{datetime.now().strftime('%Y%m%d')}.log"

    # stdout stays free for artifacts piped by the CLI
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, Config.LOG_LEVEL, logging.WARNING),
    )

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(logging.DEBUG)
    logging.getLogger().addHandler(file_handler)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    _configured = True


def setup_logger(name: str = "lzsm") -> structlog.BoundLogger:
    """
    Setup structured logger with consistent formatting.

    Args:
        name: Logger name (typically the module name)

    Returns:
        Configured structlog logger

    Usage:
        logger = setup_logger("floquet")
        logger.info("floquet_solved", quasienergies=[-0.1, 0.1])
    """
    _configure()
    return structlog.get_logger(name)


class SolverLogger:
    """
    Component-bound logger for the recurring start/complete/diagnostic
    pattern of solver stages.
    """

    def __init__(self, component: str):
        self.component = component
        self.logger = setup_logger(component).bind(component=component)

    def log_stage_start(self, stage: str, params: dict):
        self.logger.debug("stage_started", stage=stage, params=params)

    def log_stage_complete(self, stage: str, result: dict, duration_ms: float):
        self.logger.debug("stage_completed", stage=stage, result_summary=result, duration_ms=round(duration_ms, 3))

    def log_diagnostic(self, event: str, **context):
        """Non-fatal numerical warning (degeneracy, positivity, residuals)"""
        self.logger.warning(event, **context)

    def log_error(self, error: Exception, context: dict):
        """Errors keep their LZSMError diagnostics (condition, field, failure time)"""
        self.logger.error(
            "stage_failed",
            error_type=type(error).__name__,
            error_message=str(error),
            details=getattr(error, "details", {}),
            context=context,
            exc_info=True,
        )
