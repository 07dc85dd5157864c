import pytest
from latopt.cli.run_config import RunConfig, merge_dicts
from latopt.common import config
from latopt.common.errors import ConfigError


def write_run_file(path, text):
    path.write_text(text)
    return path


def test_merge_dicts():
    base = {'a': 1, 'nested': {'b': 2, 'c': 3}}
    merged = merge_dicts(base, {'nested': {'c': 4}, 'd': 5})
    assert merged == {'a': 1, 'nested': {'b': 2, 'c': 4}, 'd': 5}
    assert base['nested']['c'] == 3


def test_load_fills_defaults(setup_latopt_config, tmp_path):
    path = write_run_file(
        tmp_path.joinpath('run.yml'),
        "mode: 'optimize'\npreset: 'c'\ndomain:\n  nx: 20\n  ny: 10\noptimizer:\n  max_iters: 5\n",
    )
    rc = RunConfig.load(path)
    assert rc.mode == 'optimize'
    assert rc.preset == 'c'
    assert rc['domain'] == {'nx': 20, 'ny': 10, 'element_size': 1.0}
    assert rc['optimizer']['max_iters'] == 5
    assert rc['optimizer']['vbar'] == pytest.approx(0.15)
    assert rc.base_dir == tmp_path.resolve()
    rc.validate()

    domain = rc.grid_domain()
    assert domain.shape == (20, 10)
    assert rc.cell_spec().alpha_hi == 4.0
    assert rc.discretization().resolution == 64
    opt = rc.optimizer_config(config.get_preset_registry())
    assert opt.max_iters == 5
    assert not opt.design_options.optimize_phi
    assert not opt.design_options.isotropic_alpha


def test_save_and_reload(setup_latopt_config, tmp_path):
    rc = RunConfig.load(write_run_file(tmp_path.joinpath('run.yml'), "preset: 'e'\n"))
    rc.save(tmp_path.joinpath('saved.yml'))
    assert RunConfig.load(tmp_path.joinpath('saved.yml')) == rc


def test_overrides(setup_latopt_config, tmp_path):
    rc = RunConfig.load(write_run_file(tmp_path.joinpath('run.yml'), "preset: 'a'\n"))
    other = rc.with_overrides(preset='d', serial=True, threads=8, mode='optimize')
    assert (other.preset, other.mode, other.serial, other.threads) == ('d', 'optimize', True, 1)
    assert other['runtime']['threads'] == 8
    assert rc.preset == 'a'
    assert not rc.serial


def test_invalid_run_files(setup_latopt_config, tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path.joinpath('missing.yml'))
    with pytest.raises(ConfigError):
        RunConfig.load(write_run_file(tmp_path.joinpath('list.yml'), '- 1\n- 2\n'))
    with pytest.raises(ConfigError):
        RunConfig.load(write_run_file(tmp_path.joinpath('typo.yml'), 'optimiser:\n  p: 3\n'))

    rc = RunConfig.load(write_run_file(tmp_path.joinpath('bad.yml'), "mode: 'sweep'\n"))
    with pytest.raises(ConfigError):
        rc.validate()
    rc = RunConfig.load(write_run_file(tmp_path.joinpath('compile.yml'), "mode: 'compile'\n"))
    with pytest.raises(ConfigError):
        rc.validate()
    rc = RunConfig.load(
        write_run_file(tmp_path.joinpath('bc.yml'), "problem:\n  bc_file: 'nowhere.txt'\n")
    )
    with pytest.raises(ConfigError):
        rc.validate()
    rc = RunConfig.load(write_run_file(tmp_path.joinpath('load.yml'), 'problem:\n  load: -1.0\n'))
    with pytest.raises(ConfigError):
        rc.validate()
    with pytest.raises(ConfigError):
        rc.with_overrides(preset='x').optimizer_config(config.get_preset_registry())
