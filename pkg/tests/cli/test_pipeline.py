import json

import pytest
from latopt.cli import pipeline
from latopt.cli.run_config import RunConfig
from latopt.common import config
from latopt.common.errors import ConfigError, EmptyShapeError
from latopt.compiler.export import read_lattice_json
from latopt.compiler.graph import LatticeGraph
from latopt.fields.io import FIELDS_HEADER


def small_run(tmp_path, **data):
    """12x6 cantilever with a coarse lookup and a short loop"""
    base = {
        'mode': 'full',
        'preset': 'b',
        'output_dir': tmp_path.joinpath('out').as_posix(),
        'domain': {'nx': 12, 'ny': 6},
        'homogenization': {'resolution': 16, 'samples_per_axis': 4},
        'optimizer': {'max_iters': 4},
        'compile': {'iters_2d': 10},
        'runtime': {'serial': 1},
    }
    defaults = config.get_setting(tmp_path.as_posix())['run_defaults']
    data = {**base, **data}
    return RunConfig(data, defaults, tmp_path.as_posix())


@pytest.fixture(scope='module')
def full_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp('full_run')
    report = pipeline.run_pipeline(small_run(tmp_path), tmp_path.as_posix())
    return tmp_path, report


def test_full_run_artifacts(full_run):
    tmp_path, report = full_run
    out = tmp_path.joinpath('out')
    expected = {
        pipeline.FIELDS_CSV,
        pipeline.FIELDS_PGM,
        pipeline.HISTORY_CSV,
        pipeline.LATTICE_JSON,
        pipeline.LATTICE_OBJ,
        pipeline.LATTICE_SVG,
        pipeline.REPORT_JSON,
        pipeline.TIMINGS_JSON,
    }
    assert set(report.artifacts) == expected
    for name in expected:
        assert out.joinpath(name).exists()
    assert not out.joinpath(pipeline.FAILURE_JSON).exists()

    with open(out.joinpath(pipeline.REPORT_JSON)) as f:
        saved = json.load(f)
    assert saved['config']['preset'] == 'b'
    assert saved['results']['J'] > 0
    assert saved['results']['reference_J'] == pytest.approx(282.62)
    assert saved['results']['uniform_alpha'] == pytest.approx(2.5626, abs=1e-4)
    assert saved['results']['uniform_reference_J'] == pytest.approx(852.30)
    assert saved['results']['uniform_J'] > saved['results']['J']
    assert saved['validation'] is None
    assert saved['counts']['struts'] > 0
    assert 'T_Total' not in saved

    with open(out.joinpath(pipeline.TIMINGS_JSON)) as f:
        timings = json.load(f)
    assert set(pipeline.TIMING_KEYS) <= set(timings)

    with open(out.joinpath(pipeline.HISTORY_CSV)) as f:
        assert f.readline().strip() == 'iter,J,V,max_change,beta'
    with open(out.joinpath(pipeline.FIELDS_CSV)) as f:
        assert f.readline().strip() == FIELDS_HEADER

    lattice = read_lattice_json(out.joinpath(pipeline.LATTICE_JSON).as_posix())
    assert lattice.n_edges == saved['counts']['struts']


def test_compile_from_fields_file_is_deterministic(full_run):
    tmp_path, _ = full_run
    fields_file = tmp_path.joinpath('out', pipeline.FIELDS_CSV).as_posix()
    rc = small_run(
        tmp_path,
        mode='compile',
        output_dir=tmp_path.joinpath('compiled').as_posix(),
        problem={'fields_file': fields_file},
    )
    out = tmp_path.joinpath('compiled')

    first = pipeline.run_pipeline(rc, tmp_path.as_posix())
    assert pipeline.HISTORY_CSV not in first.artifacts
    assert 'J' not in first.results
    texts = [out.joinpath(name).read_text() for name in (pipeline.REPORT_JSON, pipeline.LATTICE_JSON)]
    pipeline.run_pipeline(rc, tmp_path.as_posix())
    again = [out.joinpath(name).read_text() for name in (pipeline.REPORT_JSON, pipeline.LATTICE_JSON)]
    assert texts == again


def thin_compile_run(tmp_path):
    """Compile run on fields whose lattice fraction stays below the threshold everywhere"""
    fields_file = tmp_path.joinpath('thin.csv')
    rows = [f'{ix},{iy},0.1,1.0,1.0,0.0' for iy in range(2) for ix in range(4)]
    fields_file.write_text('\n'.join([FIELDS_HEADER] + rows) + '\n')
    return small_run(
        tmp_path,
        mode='compile',
        domain={'nx': 4, 'ny': 2},
        problem={'fields_file': fields_file.as_posix()},
    )


def test_failure_writes_failure_json(tmp_path):
    rc = thin_compile_run(tmp_path)

    with pytest.raises(EmptyShapeError):
        pipeline.run_pipeline(rc, tmp_path.as_posix())
    out = tmp_path.joinpath('out')
    with open(out.joinpath(pipeline.FAILURE_JSON)) as f:
        failure = json.load(f)
    assert failure['stage'] == 'compile'
    assert failure['error'] == 'EmptyShapeError'
    # imported fields are still exported
    assert out.joinpath(pipeline.FIELDS_CSV).exists()
    assert out.joinpath(pipeline.REPORT_JSON).exists()


def test_failure_json_survives_a_failed_partial_export(tmp_path, monkeypatch):
    rc = thin_compile_run(tmp_path)

    def disk_full(*args, **kwargs):
        raise OSError('No space left on device')

    monkeypatch.setattr(pipeline, 'write_fields_csv', disk_full)
    with pytest.raises(EmptyShapeError):
        pipeline.run_pipeline(rc, tmp_path.as_posix())
    out = tmp_path.joinpath('out')
    with open(out.joinpath(pipeline.FAILURE_JSON)) as f:
        assert json.load(f)['error'] == 'EmptyShapeError'
    assert not out.joinpath(pipeline.FIELDS_CSV).exists()


def test_invalid_run_is_rejected_before_any_output(tmp_path):
    rc = small_run(tmp_path, mode='validate')
    with pytest.raises(ConfigError):
        pipeline.run_pipeline(rc, tmp_path.as_posix())
    assert not tmp_path.joinpath('out').exists()


def test_export_skips_empty_lattice(tmp_path):
    report = pipeline.RunReport(small_run(tmp_path))
    artifacts = pipeline.export_all(tmp_path, report, lattice=LatticeGraph.empty())
    assert artifacts == [pipeline.REPORT_JSON, pipeline.TIMINGS_JSON]
    assert report.notes == ['lattice is empty, lattice files skipped']
    assert not tmp_path.joinpath(pipeline.LATTICE_JSON).exists()
