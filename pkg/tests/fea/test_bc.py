import numpy as np
import pytest
from latopt.common.errors import ConfigError, FormatError
from latopt.fea import BoundaryConditions, read_bc_file, write_bc_file
from latopt.fields import GridDomain


@pytest.fixture
def domain():
    return GridDomain((4, 2))


def test_read_records(domain, tmp_path):
    path = tmp_path.joinpath('bc.txt')
    path.write_text(
        '# clamped left edge\n'
        'fix 0 0\n'
        'fix 0 1 1 0\n'
        'fix 0 2   # both components\n'
        '\n'
        'load 4 1 0 -1.5\n'
    )
    bc = read_bc_file(path, domain)
    # node (0, 1) has index 5 on the 5-wide node grid
    assert bc.fixed_dofs.tolist() == [0, 1, 10, 20, 21]
    assert bc.F[2 * 9 + 1] == -1.5
    assert bc.F.sum() == -1.5
    assert bc.loaded_nodes().tolist() == [9]
    assert bc.supported_nodes().tolist() == [0, 5, 10]
    bc.validate()


def test_write_then_read(domain, tmp_path):
    bc = BoundaryConditions(domain)
    bc.fix([[0, 0], [0, 2]])
    bc.fix([4, 0], [1])
    bc.load([2, 2], [0.25, -1.0])
    path = tmp_path.joinpath('out', 'bc.txt')
    write_bc_file(path, bc)
    loaded = read_bc_file(path, domain)
    assert np.array_equal(loaded.fixed_dofs, bc.fixed_dofs)
    assert np.array_equal(loaded.F, bc.F)


def test_bad_records(domain, tmp_path):
    path = tmp_path.joinpath('bc.txt')
    for text in ('fix 0\n', 'pin 0 0\n', 'load 0 0 1\n', 'fix 9 0\n', 'load a 0 1 1\n'):
        path.write_text(text)
        with pytest.raises(FormatError):
            read_bc_file(path, domain)
    with pytest.raises(FormatError):
        read_bc_file(tmp_path.joinpath('missing.txt'), domain)
    with pytest.raises(FormatError):
        read_bc_file(path, GridDomain((2, 2, 2)))


def test_validate(domain):
    bc = BoundaryConditions(domain)
    bc.fix([0, 0])
    with pytest.raises(ConfigError):
        bc.validate()
    bc.fix([4, 0], [1])
    bc.load([4, 0], [0.0, -1.0])
    with pytest.raises(ConfigError):
        bc.validate()
    with pytest.raises(ConfigError):
        bc.fix([1, 2, 0])
