from pathlib import Path
import shutil
import pytest
from latopt.common import config
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization import CellDiscretization, build_lookup

LATOPT_TEST = f'{config.LATOPT_FOLDER}_test'


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='Run slow regressions')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def setup_latopt_config(request):
    print('Setting up temp latopt data')

    cur_latopt_folder = config.LATOPT_FOLDER
    config.LATOPT_FOLDER = LATOPT_TEST

    cfg = config.init_user_config()
    print('Generated user config for testing')
    yield cfg

    def teardown():
        test_latopt_data = Path(config.get_working_dir(), config.LATOPT_FOLDER)
        shutil.rmtree(test_latopt_data.as_posix(), ignore_errors=1)
        config.LATOPT_FOLDER = cur_latopt_folder
        print('Deleted temp latopt data after testing')

    request.addfinalizer(teardown)


@pytest.fixture(scope='session')
def cell_spec():
    return UnitCellSpec(l=10.0, t=1.0, alpha_lo=1.0, alpha_hi=4.0, base_E=1.0, base_nu=0.3)


@pytest.fixture(scope='session')
def small_lookup(cell_spec):
    """Coarse table: 4 samples per axis, 16 elements per cell edge"""
    return build_lookup(cell_spec, 4, CellDiscretization(resolution=16))
