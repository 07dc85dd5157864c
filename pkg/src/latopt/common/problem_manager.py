import importlib.util
from pathlib import Path
from typing import Dict, List

from latopt.common.errors import ConfigError

PROBLEM_DIR = Path(__file__).resolve().parent.parent.joinpath('problems')

# Every problem module must define these
PROBLEM_API = ('DESCRIPTION', 'build_bc')


def list_problems() -> List[str]:
    return sorted(p.stem for p in PROBLEM_DIR.glob('[!_]*.py'))


def load_problem(problem_id: str):
    """Load a built-in load case module by id

    Raises:
        ConfigError: unknown id or module missing part of the problem API
    """
    path = PROBLEM_DIR.joinpath(f'{problem_id}.py')
    if not path.exists():
        raise ConfigError(f'Unknown problem "{problem_id}", available: {list_problems()}')

    spec = importlib.util.spec_from_file_location(f'latopt_problem_{problem_id}', path.as_posix())
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)

    missing = [name for name in PROBLEM_API if not hasattr(module, name)]
    if missing:
        raise ConfigError(f'Problem "{problem_id}" does not define {missing}')
    return module


def load_all_problems() -> Dict[str, object]:
    return {pid: load_problem(pid) for pid in list_problems()}
