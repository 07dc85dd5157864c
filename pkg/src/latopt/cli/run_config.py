import copy
from pathlib import Path
from typing import Dict, Optional

from latopt.common import config
from latopt.common.errors import ConfigError
from latopt.fields.grid import GridDomain, UnitCellSpec
from latopt.homogenization.cell import CellDiscretization
from latopt.optimizer.options import DesignOptions, OptimizerConfig

MODES = ('optimize', 'compile', 'full', 'validate')
SECTIONS = (
    'domain',
    'cell',
    'homogenization',
    'problem',
    'optimizer',
    'compile',
    'validate',
    'runtime',
)


def merge_dicts(base: Dict, override: Dict) -> Dict:
    """Recursive merge, override wins"""
    ret = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(ret.get(key), dict):
            ret[key] = merge_dicts(ret[key], value)
        else:
            ret[key] = copy.deepcopy(value)
    return ret


class RunConfig(object):
    """One run: mode, preset, output folder and the stage sections

    Properties:
        mode (str): optimize, compile, full or validate
        preset (str): design option preset id, a to f
        output_dir (str):
        sections (Dict[str, Dict]): domain, cell, homogenization, problem, optimizer,
            compile, validate, runtime
        base_dir (Path): relative file references resolve against it
    """

    def __init__(self, data: Dict, defaults: Optional[Dict] = None, base_dir: Optional[str] = None):
        super(RunConfig, self).__init__()
        merged = merge_dicts(defaults or {}, data or {})
        unknown = set(merged) - set(SECTIONS) - {'mode', 'preset', 'output_dir'}
        if unknown:
            raise ConfigError(f'Unknown run config keys {sorted(unknown)}')
        self.mode = str(merged.get('mode', 'full'))
        self.preset = str(merged.get('preset', 'f'))
        self.output_dir = str(merged.get('output_dir', 'latopt_out'))
        self.sections = {name: dict(merged.get(name) or {}) for name in SECTIONS}
        self.base_dir = Path(base_dir or config.get_working_dir())

    @classmethod
    def load(cls, path: str, working_dir: Optional[str] = None) -> 'RunConfig':
        """Read a YAML run file, missing keys from setting.yml `run_defaults`"""
        if not Path(path).exists():
            raise ConfigError(f'Run config {path} not found')
        data = config.load_yaml(Path(path))
        if not isinstance(data, dict):
            raise ConfigError(f'Run config {path} is not a YAML mapping')
        setting = config.get_setting(working_dir) or {}
        return cls(data, setting.get('run_defaults'), Path(path).resolve().parent.as_posix())

    @classmethod
    def from_dict(cls, d: Dict, base_dir: Optional[str] = None) -> 'RunConfig':
        return cls(d, None, base_dir)

    def to_dict(self) -> Dict:
        ret = {'mode': self.mode, 'preset': self.preset, 'output_dir': self.output_dir}
        ret.update(copy.deepcopy(self.sections))
        return ret

    def save(self, path: str):
        config.dump_yaml(self.to_dict(), Path(path))

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    def __getitem__(self, section: str) -> Dict:
        return self.sections[section]

    def with_overrides(
        self,
        preset: Optional[str] = None,
        serial: Optional[bool] = None,
        threads: Optional[int] = None,
        mode: Optional[str] = None,
    ) -> 'RunConfig':
        ret = RunConfig.from_dict(self.to_dict(), self.base_dir.as_posix())
        if preset is not None:
            ret.preset = preset
        if mode is not None:
            ret.mode = mode
        if serial is not None:
            ret.sections['runtime']['serial'] = int(serial)
        if threads is not None:
            ret.sections['runtime']['threads'] = int(threads)
        return ret

    def resolve_path(self, path: str) -> Optional[Path]:
        if not path:
            return None
        path = Path(path)
        return path if path.is_absolute() else self.base_dir.joinpath(path)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f'Unknown mode "{self.mode}", expected one of {MODES}')
        for section in ('domain', 'cell', 'homogenization', 'optimizer', 'runtime'):
            if not self.sections[section]:
                raise ConfigError(f'Run config misses section "{section}"')
        problem = self.sections['problem']
        for key in ('bc_file', 'fields_file'):
            path = self.resolve_path(problem.get(key, ''))
            if path is not None and not path.exists():
                raise ConfigError(f'problem.{key} {path} not found')
        if self.mode in ('compile', 'validate') and not problem.get('fields_file'):
            raise ConfigError(f'Mode "{self.mode}" needs problem.fields_file')
        if self.mode in ('full', 'compile') and not self.sections['compile']:
            raise ConfigError('Run config misses section "compile"')
        if not problem.get('bc_file') and not problem.get('id'):
            raise ConfigError('Run config needs problem.id or problem.bc_file')
        if not float(problem.get('load', 1.0)) > 0:
            raise ConfigError(f'problem.load must be positive, got {problem["load"]}')

    def grid_domain(self) -> GridDomain:
        d = self.sections['domain']
        return GridDomain((int(d['nx']), int(d['ny'])), float(d['element_size']))

    def cell_spec(self) -> UnitCellSpec:
        return UnitCellSpec.from_dict(
            {key: float(value) for key, value in self.sections['cell'].items()}, dim=2
        )

    def discretization(self) -> CellDiscretization:
        h = self.sections['homogenization']
        return CellDiscretization(
            int(h['resolution']), bool(h['plane_stress']), float(h['void_stiffness'])
        )

    def optimizer_config(self, registry: Optional[Dict] = None) -> OptimizerConfig:
        registry = registry or config.get_preset_registry() or {}
        options = DesignOptions.from_preset(self.preset, registry)
        return OptimizerConfig(options, **self.sections['optimizer'])

    @property
    def serial(self) -> bool:
        return bool(self.sections['runtime'].get('serial', 0))

    @property
    def threads(self) -> int:
        return 1 if self.serial else int(self.sections['runtime'].get('threads', 1))
