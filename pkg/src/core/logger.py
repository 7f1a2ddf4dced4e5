"""
Centralized logging setup for structured, JSON-formatted logs.

This module provides a consistent logging interface across the entire pipeline.
All logs are output in JSON Lines format for easy parsing and analysis. Multiple
log files are maintained based on severity levels.

Key features:
- JSON-formatted logs with structured fields
- Multiple log files (operations, debug, errors)
- Optional console output for development
- Log rotation to prevent disk space issues
- Consistent log entry format across all stages

Usage:
    from src.core.logger import setup_logging, get_logger

    # Initialize logging (call once at application start)
    setup_logging(config.logging)

    # Get a logger for your module
    logger = get_logger(__name__)

    # Log with context
    logger.info("Segments retrieved", extra={
        "stage": "retrieval",
        "operation": "retrieve_segments",
        "doc_id": "fallo-0012",
        "kind": "physical_disability",
        "metadata": {"k": 3, "segments": 2}
    })
"""

import json
import logging
import sys
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

from src.core.config import LoggingConfig

# ==============================================================================
# JSON FORMATTER FOR STRUCTURED LOGGING
# ==============================================================================

class JSONFormatter(logging.Formatter):
    """
    Formatter that outputs log records as JSON lines.

    Standard fields:
    - timestamp: ISO 8601 format
    - level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    - logger: Logger name (usually module name)
    - message: Log message

    Optional context fields (via 'extra'):
    - stage: Pipeline stage (e.g., "corpus", "retrieval", "extraction")
    - operation: Specific operation being performed
    - doc_id / kind: Ruling and entity kind being processed
    - file_path: Path to file being read or written
    - metadata: Dictionary of additional fields
    - error: Error details for failures
    - status / attempt: Outcome and retry attempt number
    """

    CONTEXT_FIELDS = (
        "stage",
        "operation",
        "doc_id",
        "kind",
        "file_path",
        "metadata",
        "error",
        "status",
        "attempt",
        "details",
    )

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for field in self.CONTEXT_FIELDS:
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, default=str, ensure_ascii=False)

# ==============================================================================
# LOGGING SETUP AND ACCESS
# ==============================================================================

# Global flag to track if logging has been initialized
_logging_initialized = False
_fallback_configured = False

def _rotating_handler(path_template: str, timestamp: str, level: int,
                      config: LoggingConfig, formatter: logging.Formatter) -> RotatingFileHandler:
    path = Path(path_template.replace("{timestamp}", timestamp))
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = RotatingFileHandler(
        path,
        maxBytes=config.max_bytes,
        backupCount=config.backup_count,
        encoding='utf-8'
    )
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler

def setup_logging(config: LoggingConfig) -> None:
    """
    Initialize the logging system based on configuration.

    This should be called once at application startup before any logging occurs.
    It configures the root logger level, the operations (INFO+), debug (DEBUG+)
    and errors (ERROR+) rotating files, and an optional console handler.
    Timestamps in filenames keep separate logs per run.

    Args:
        config: LoggingConfig object from pipeline configuration

    Raises:
        OSError: If a log directory cannot be created
    """
    global _logging_initialized

    if _logging_initialized:
        return

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, config.level.upper()))
    root_logger.handlers.clear()

    if config.json_format:
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    root_logger.addHandler(_rotating_handler(config.operations_log, timestamp, logging.INFO, config, formatter))
    root_logger.addHandler(_rotating_handler(config.debug_log, timestamp, logging.DEBUG, config, formatter))
    root_logger.addHandler(_rotating_handler(config.errors_log, timestamp, logging.ERROR, config, formatter))

    if config.console_output:
        # Console goes to stderr; stdout carries report tables
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
        root_logger.addHandler(console_handler)

    _logging_initialized = True

    logging.getLogger(__name__).info(
        "Logging system initialized",
        extra={
            "stage": "bootstrap",
            "operation": "logging_setup",
            "metadata": {
                "operations_log": config.operations_log,
                "level": config.level,
                "json_format": config.json_format,
            }
        }
    )

def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module or component.

    Each module should get its own logger using __name__ as the parameter.
    Before setup_logging() runs, a basic stderr configuration is installed
    once so early records are not lost.

    Args:
        name: Logger name (typically __name__ of the calling module)

    Returns:
        Logger instance configured with the pipeline's logging setup
    """
    global _fallback_configured
    if not _logging_initialized and not _fallback_configured:
        logging.basicConfig(
            level=logging.INFO,
            format='%(levelname)s - %(name)s - %(message)s'
        )
        _fallback_configured = True

    return logging.getLogger(name)

def log_operation(
    logger: logging.Logger,
    level: str,
    message: str,
    stage: str,
    operation: str,
    doc_id: Optional[str] = None,
    **kwargs: Any
) -> None:
    """
    Log an operation with consistent structure.

    Ensures every operation record carries the stage and operation fields.

    Args:
        logger: Logger instance
        level: Log level name
        message: Log message
        stage: Pipeline stage (e.g., "corpus", "extraction")
        operation: Specific operation being performed
        doc_id: Optional ruling id being processed
        **kwargs: Additional context fields to include in log
    """
    log_level = getattr(logging, level.upper())

    extra: Dict[str, Any] = {
        "stage": stage,
        "operation": operation,
    }
    if doc_id:
        extra["doc_id"] = doc_id
    extra.update(kwargs)

    logger.log(log_level, message, extra=extra)

# ==============================================================================
# CONVENIENCE FUNCTIONS FOR COMMON LOG PATTERNS
# ==============================================================================

def log_preflight_check(
    logger: logging.Logger,
    check_name: str,
    passed: bool,
    details: Optional[str] = None
) -> None:
    """Log the result of a preflight check."""
    level = "INFO" if passed else "ERROR"
    status = "PASS" if passed else "FAIL"

    message = f"Preflight check: {check_name} - {status}"
    if details:
        message += f" - {details}"

    log_operation(
        logger,
        level,
        message,
        stage="preflight",
        operation=check_name,
        status=status,
        details=details
    )

def log_document_failure(
    logger: logging.Logger,
    stage: str,
    operation: str,
    doc_id: str,
    error: str,
    kind: Optional[str] = None,
) -> None:
    """
    Log a failure isolated to one document (and optionally one entity kind).

    These never abort a run; they are counted in the command summary.
    """
    extra: Dict[str, Any] = {"status": "failed", "error": error}
    if kind:
        extra["kind"] = kind
    log_operation(
        logger,
        "WARNING",
        f"{operation} failed for {doc_id}: {error}",
        stage=stage,
        operation=operation,
        doc_id=doc_id,
        **extra
    )
