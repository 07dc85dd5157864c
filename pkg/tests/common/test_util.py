import logging
from pathlib import Path

from latopt.common import config
from latopt.common.util import ROOT_LOGGER, create_logger, get_child_logger


def test_child_loggers_share_the_root():
    assert get_child_logger('latopt.fea.solver').name == 'latopt.fea.solver'
    assert get_child_logger('compiler').name == 'latopt.compiler'
    assert get_child_logger(ROOT_LOGGER).name == ROOT_LOGGER


def test_create_logger_replaces_handlers(setup_latopt_config):
    logger = create_logger(ROOT_LOGGER, 'unit', logging.INFO)
    logger = create_logger(ROOT_LOGGER, 'unit', logging.INFO)
    assert len(logger.handlers) == 2

    get_child_logger('latopt.unit.part').info('child message')
    for h in logger.handlers:
        h.flush()
    log_path = Path(config.get_working_dir(), config.LATOPT_FOLDER, 'log', 'unit', 'latopt.log')
    assert 'latopt.unit.part - INFO | child message' in log_path.read_text()
