import json
import numpy as np
import pytest
from latopt.common.errors import FormatError, GeometryError
from latopt.compiler.export import (
    read_lattice_json,
    strut_width,
    write_lattice_json,
    write_lattice_obj,
    write_lattice_svg,
)
from latopt.compiler.graph import PROVENANCE_RELABELED, LatticeGraph


@pytest.fixture
def lattice():
    return LatticeGraph(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1], [0, 2], [1, 2]]),
        ['axis', 'axis', PROVENANCE_RELABELED],
        {'relabeled_diagonals': 1},
    )


def test_strut_width(cell_spec):
    assert strut_width(cell_spec, 5.0) == pytest.approx(1.0)


def test_json(lattice, tmp_path):
    path = tmp_path.joinpath('out', 'lattice.json')
    write_lattice_json(path, lattice)
    data = json.loads(path.read_text())
    assert data['k'] == 2
    assert data['diagnostics'] == {'relabeled_diagonals': 1}
    loaded = read_lattice_json(path)
    assert np.array_equal(loaded.vertices, lattice.vertices)
    assert np.array_equal(loaded.edges, lattice.edges)
    assert loaded.provenance == lattice.provenance

    path.write_text('{"k": 2, "vertices": [[0, 0], [1, 0]], "edges": [[0, 0]], "provenance": ["axis"]}')
    with pytest.raises(GeometryError):
        read_lattice_json(path)
    path.write_text('not json')
    with pytest.raises(FormatError):
        read_lattice_json(path)


def test_obj(lattice, tmp_path):
    path = tmp_path.joinpath('lattice.obj')
    write_lattice_obj(path, lattice)
    lines = path.read_text().splitlines()
    assert lines[1] == 'v 0 0 0'
    assert lines[2] == 'v 1 0 0'
    assert lines[4:] == ['l 1 2', 'l 1 3', 'l 2 3']


def test_svg(lattice, tmp_path):
    path = tmp_path.joinpath('lattice.svg')
    write_lattice_svg(path, lattice, width=0.2)
    text = path.read_text()
    assert text.count('<line ') == 3
    assert text.count('class="relabeled"') == 1
    assert 'stroke-width="0.200000"' in text
    # y up: vertex (0, 1) is drawn at the top margin
    assert 'x1="1.000000" y1="2.000000" x2="1.000000" y2="1.000000"' in text

    solid = LatticeGraph(np.zeros((1, 3)), np.zeros((0, 2)), [])
    with pytest.raises(FormatError):
        write_lattice_svg(path, solid, width=0.2)
