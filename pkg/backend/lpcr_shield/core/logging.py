# LPCR Shield - Centralized Logging Configuration
import json
import logging
import logging.handlers
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

# Attributes present on every LogRecord; anything else came in through `extra=`
_RESERVED_ATTRS = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename', 'module',
    'lineno', 'funcName', 'created', 'msecs', 'relativeCreated', 'thread', 'threadName',
    'processName', 'process', 'getMessage', 'exc_info', 'exc_text', 'stack_info',
    'taskName', 'message', 'asctime',
}

COMPONENTS = [
    'lpcr.dataset',
    'lpcr.nn',
    'lpcr.model',
    'lpcr.attack',
    'lpcr.advtrain',
    'lpcr.analysis',
    'lpcr.cli',
]


class LpcrFormatter(logging.Formatter):
    """Console formatter with level colors and a per-component marker"""

    COLORS = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
    }
    RESET = '\033[0m'

    COMPONENT_EMOJIS = {
        'dataset': '🔤',
        'nn': '🧮',
        'model': '🧠',
        'attack': '🎯',
        'advtrain': '🛡️',
        'analysis': '📊',
        'cli': '🚀',
    }

    def __init__(self, use_colors: bool = True, include_emoji: bool = True):
        super().__init__(
            fmt='%(asctime)s | %(name)-14s | %(levelname)-8s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
        )
        self.use_colors = use_colors
        self.include_emoji = include_emoji

    def format(self, record: logging.LogRecord) -> str:
        # Work on a copy so other handlers see the untouched record
        record = logging.makeLogRecord(record.__dict__)
        if self.use_colors:
            color = self.COLORS.get(record.levelname, '')
            record.levelname = f"{color}{record.levelname}{self.RESET}"
        if self.include_emoji:
            component = record.name.split('.')[-1]
            emoji = self.COMPONENT_EMOJIS.get(component)
            if emoji:
                record.name = f"{emoji} {record.name}"
        return super().format(record)


class JSONLogFormatter(logging.Formatter):
    """JSON formatter for structured logging"""

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {
            'timestamp': datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        if record.exc_info:
            log_entry['exception'] = {
                'type': record.exc_info[0].__name__ if record.exc_info[0] else None,
                'message': str(record.exc_info[1]) if record.exc_info[1] else None,
                'traceback': traceback.format_exception(*record.exc_info),
            }

        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS:
                log_entry.setdefault('extra', {})[key] = value

        return json.dumps(log_entry, default=str)


def setup_logging(
    level: str = "INFO",
    json_format: bool = False,
    log_file: Optional[str] = None,
    use_colors: Optional[bool] = None,
    max_file_size: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
) -> logging.Logger:
    """Configure the `lpcr` logger tree; called once by the CLI"""
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger('lpcr')
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()
    root_logger.propagate = False

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    if json_format:
        console_handler.setFormatter(JSONLogFormatter())
    else:
        if use_colors is None:
            use_colors = sys.stderr.isatty()
        console_handler.setFormatter(LpcrFormatter(use_colors=use_colors))
    root_logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            filename=log_file,
            maxBytes=max_file_size,
            backupCount=backup_count,
            encoding='utf-8',
        )
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(JSONLogFormatter())
        root_logger.addHandler(file_handler)

    for component in COMPONENTS:
        logging.getLogger(component).setLevel(numeric_level)

    return root_logger


def get_logger(name: str) -> logging.Logger:
    """Get a component logger"""
    return logging.getLogger(name)


def log_training_epoch(epoch: int, train_loss: float, val_accuracy: float, **kwargs: Any) -> None:
    """Log one training epoch with structured data"""
    logger = get_logger('lpcr.model')
    extra_data = {
        'epoch': epoch,
        'train_loss': train_loss,
        'val_accuracy': val_accuracy,
        **kwargs,
    }
    logger.info(
        f"Epoch {epoch}: train_loss={train_loss:.4f} val_acc={val_accuracy:.4f}",
        extra=extra_data,
    )


def log_attack_summary(attack: str, attempts: int, successes: int, **kwargs: Any) -> None:
    """Log per-shape attack outcome"""
    logger = get_logger('lpcr.attack')
    rate = successes / attempts if attempts else 0.0
    extra_data = {
        'attack': attack,
        'attempts': attempts,
        'successes': successes,
        'success_rate': rate,
        **kwargs,
    }
    logger.info(f"Attack {attack}: {successes}/{attempts} succeeded ({rate:.1%})", extra=extra_data)


def log_performance_metric(metric_name: str, value: float, unit: Optional[str] = None, **kwargs: Any) -> None:
    """Log performance metrics"""
    logger = get_logger('lpcr.cli')
    extra_data = {
        'metric_name': metric_name,
        'value': value,
        'unit': unit,
        **kwargs,
    }
    message = f"Performance: {metric_name} = {value:.3f}"
    if unit:
        message += f" {unit}"
    logger.info(message, extra=extra_data)
