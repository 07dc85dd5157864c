import numpy as np
import pytest
from latopt.common import config
from latopt.common.errors import FormatError, GeometryError
from latopt.fields.fractions import cell_volume_fraction
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization import (
    CellDiscretization,
    ElasticityLookup,
    build_lookup,
    interpolate_D,
    load_or_build_lookup,
)
from latopt.homogenization.lookup import lookup_digest


def test_exact_at_samples(small_lookup):
    s = small_lookup.samples
    for i in (0, 2):
        for j in (1, 3):
            D = interpolate_D(small_lookup, np.array([s[0][i], s[1][j]]))
            assert np.allclose(D, small_lookup.entries[i, j])


def test_table_is_mirror_symmetric(small_lookup):
    P = [1, 0, 2]
    e = small_lookup.entries
    assert np.allclose(e[1, 3], e[3, 1][P][:, P])


def test_stiffness_drops_with_cell_size(small_lookup):
    e = small_lookup.entries
    # wider cells in x thin out the walls carrying y loads
    assert np.all(np.diff(e[:, 0, 1, 1]) < 0)
    assert np.all(np.diff(e[0, :, 0, 0]) < 0)


def test_gradient_matches_finite_differences(small_lookup):
    alpha = np.array([[1.3, 2.6], [2.2, 3.7]])
    grad = small_lookup.interpolate_grad(alpha)
    h = 1e-6
    for a in range(2):
        step = np.zeros(2)
        step[a] = h
        fd = (small_lookup.interpolate(alpha + step) - small_lookup.interpolate(alpha - step)) / (2 * h)
        assert np.allclose(grad[:, a], fd, atol=1e-7)


def test_clamping(cell_spec):
    lookup = build_lookup(cell_spec, 4, CellDiscretization(resolution=16))
    inside = lookup.interpolate(np.array([4.0, 2.0]))
    outside = lookup.interpolate(np.array([5.0, 2.0]))
    assert np.allclose(inside, outside)
    assert lookup.clamp_count == 1

    grad = lookup.interpolate_grad(np.array([[5.0, 2.5], [0.5, 0.5]]))
    assert lookup.clamp_count == 3
    assert np.all(grad[0, 0] == 0)
    assert np.any(grad[0, 1] != 0)
    assert np.all(grad[1] == 0)


def test_fraction_uses_closed_form(small_lookup, cell_spec):
    alpha = np.array([[1.5, 2.0], [3.0, 3.0]])
    assert np.allclose(small_lookup.fraction(alpha, cell_spec), cell_volume_fraction(alpha, cell_spec))


def test_bytes_round_trip(small_lookup, tmp_path):
    path = tmp_path.joinpath('table.msgpack')
    small_lookup.save(path)
    loaded = ElasticityLookup.load(path)
    assert loaded.counts == [4, 4]
    assert np.array_equal(loaded.entries, small_lookup.entries)
    assert np.array_equal(loaded.bounds, small_lookup.bounds)
    assert loaded.meta['discretization']['resolution'] == 16


def test_rejects_bad_tables(small_lookup):
    entries = small_lookup.entries.copy()
    entries[0, 0, 0, 1] += 1.0
    with pytest.raises(FormatError):
        ElasticityLookup(small_lookup.bounds, entries)
    with pytest.raises(FormatError):
        ElasticityLookup(small_lookup.bounds, -small_lookup.entries)
    with pytest.raises(FormatError):
        ElasticityLookup([[1, 4], [1, 4], [1, 4]], np.ones((2, 2, 2, 6, 6)))
    with pytest.raises(FormatError):
        ElasticityLookup.from_bytes(b'\x00\x01')
    with pytest.raises(FormatError):
        ElasticityLookup.load('/nonexistent/table.msgpack')


def test_build_arguments(cell_spec):
    with pytest.raises(GeometryError):
        build_lookup(cell_spec, 3, CellDiscretization(resolution=16))
    spec3 = UnitCellSpec(l=10.0, t=1.0, dim=3)
    with pytest.raises(GeometryError):
        build_lookup(spec3, 4, CellDiscretization(resolution=16))


def test_cache(cell_spec, tmp_path):
    disc = CellDiscretization(resolution=16)
    wd = tmp_path.as_posix()
    first = load_or_build_lookup(cell_spec, 4, disc, threads=2, working_dir=wd)
    cached = config.cache_dir(wd).joinpath(f'D_table_{lookup_digest(cell_spec, 4, disc)}.msgpack')
    assert cached.exists()
    second = load_or_build_lookup(cell_spec, 4, disc, working_dir=wd)
    assert np.array_equal(first.entries, second.entries)
    assert lookup_digest(cell_spec, 4, disc) != lookup_digest(cell_spec, 5, disc)
