import logging
import os
from pathlib import Path

from latopt.common import config

# Entry points configure this logger; library modules log to dotted children of it
ROOT_LOGGER = 'latopt'
LOG_FORMAT = '%(asctime)s | %(name)s - %(levelname)s | %(message)s'


def log_level() -> int:
    return int(os.environ['LOG_LEVEL']) if 'LOG_LEVEL' in os.environ else logging.WARNING


def create_logger(logger_name: str, log_location: str = '', level: int = None) -> logging.Logger:
    """Logger writing to the console and to `.latopt/log/<log_location>/<logger_name>.log`

    Handlers of a previous call are replaced, so one process can start several runs.
    """
    level = level or log_level()
    logger = logging.getLogger(logger_name)
    logger.setLevel(level)

    log_path = Path(
        config.get_working_dir(), config.LATOPT_FOLDER, 'log', log_location, f'{logger_name}.log',
    )
    log_path.parent.mkdir(parents=1, exist_ok=1)

    for h in list(logger.handlers):
        logger.removeHandler(h)
        h.close()

    formatter = logging.Formatter(LOG_FORMAT, '%m-%d %H:%M:%S')
    for handler in (logging.FileHandler(log_path.as_posix(), mode='w'), logging.StreamHandler()):
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def get_child_logger(logger_name: str) -> logging.Logger:
    """Logger `latopt.<stage>.<part>`; it has no handlers and propagates to the root logger"""
    if logger_name != ROOT_LOGGER and not logger_name.startswith(f'{ROOT_LOGGER}.'):
        logger_name = f'{ROOT_LOGGER}.{logger_name}'
    return logging.getLogger(logger_name)
