"""
Logging configuration for library and command-line use
Routes INFO to stdout and WARNING+ to stderr for service runs; the CLI keeps
stdout for reports and sends every log line to stderr
"""

import sys
import json
import logging
from datetime import datetime, timezone
from typing import Any, Dict

import structlog


class JSONFormatter(logging.Formatter):
    """
    JSON formatter producing one structured object per record
    """

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON"""
        log_obj: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname.lower(),
            "message": record.getMessage(),
            "logger": record.name,
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        # Experiment identifiers attached by callers
        for key in ("seed", "partition", "model_path"):
            if hasattr(record, key):
                log_obj[key] = getattr(record, key)

        if hasattr(record, "extra_fields") and isinstance(record.extra_fields, dict):
            log_obj.update(record.extra_fields)

        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)

        if record.stack_info:
            log_obj["stack_info"] = self.formatStack(record.stack_info)

        return json.dumps(log_obj)


class InfoFilter(logging.Filter):
    """Filter that only allows INFO and DEBUG level messages"""

    def filter(self, record: logging.LogRecord) -> bool:
        return record.levelno <= logging.INFO


class WarningFilter(logging.Filter):
    """Filter that only allows WARNING and above level messages"""

    def filter(self, record: logging.LogRecord) -> bool:
        return record.levelno >= logging.WARNING


def _configure_structlog(use_json: bool) -> None:
    """Shared structlog processor chain; rendering happens before the stdlib handler"""
    renderer = structlog.processors.JSONRenderer() if use_json else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.CallsiteParameterAdder(
                parameters=[
                    structlog.processors.CallsiteParameter.FILENAME,
                    structlog.processors.CallsiteParameter.FUNC_NAME,
                    structlog.processors.CallsiteParameter.LINENO,
                ]
            ),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def setup_logging(log_level: str = "WARNING", log_format: str = "text", stream_split: bool = False) -> None:
    """
    Configure stdlib logging and structlog

    Args:
        log_level: Minimum log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_format: "json" for one JSON object per line, "text" for human-readable lines
        stream_split: Send INFO/DEBUG to stdout and WARNING+ to stderr; when False
            every record goes to stderr (command-line mode)
    """
    log_level = log_level.upper()
    numeric_level = getattr(logging, log_level, logging.WARNING)
    use_json = log_format.lower() == "json"

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Remove all existing handlers to avoid duplicates
    root_logger.handlers.clear()

    # structlog renders the event itself; plain stdlib records get the JSON/text formatter
    if use_json:
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = logging.Formatter(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )

    if stream_split:
        stdout_handler = logging.StreamHandler(sys.stdout)
        stdout_handler.setLevel(logging.DEBUG)
        stdout_handler.addFilter(InfoFilter())
        stdout_handler.setFormatter(formatter)

        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.setLevel(logging.WARNING)
        stderr_handler.addFilter(WarningFilter())
        stderr_handler.setFormatter(formatter)

        root_logger.addHandler(stdout_handler)
        root_logger.addHandler(stderr_handler)
    else:
        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.setLevel(logging.DEBUG)
        stderr_handler.setFormatter(formatter)
        root_logger.addHandler(stderr_handler)

    _configure_structlog(use_json)

    get_logger(__name__).debug("logging_configured", level=log_level, format=log_format,
                               stream_split=stream_split)


def get_logger(name: str):
    """
    Get a structured logger with the specified name

    Args:
        name: Logger name (typically __name__)

    Returns:
        structlog bound logger backed by the stdlib logger of that name
    """
    return structlog.get_logger(name)


def add_log_context(**kwargs: Any) -> Dict[str, Any]:
    """
    Create a dict of extra context to pass to stdlib logger calls

    Example:
        logging.getLogger(__name__).info("partition done", extra=add_log_context(partition=3))
    """
    return {"extra_fields": kwargs}


# Library use without setup_logging still routes structlog through stdlib logging
_configure_structlog(use_json=False)
