import os
import shutil
from pathlib import Path
from typing import Dict, Optional

from ruamel.yaml import YAML

_WORKING_DIR = os.getcwd()
LATOPT_FOLDER = '.latopt'
CFG_FOLDER = 'cfg'
CACHE_FOLDER = 'cache'

CONFIG_FILES = ('setting.yml', 'preset_registry.yml')


def set_working_dir(wd: str):
    """
    Args:
        wd (str): new working directory
    """
    global _WORKING_DIR
    _WORKING_DIR = wd


def get_working_dir() -> str:
    return _WORKING_DIR


def default_config_dir() -> Path:
    return Path(__file__).resolve().parent.joinpath('default_cfg')


def user_config_dir(working_dir: Optional[str] = None) -> Path:
    return Path(working_dir or get_working_dir(), LATOPT_FOLDER, CFG_FOLDER)


def cache_dir(working_dir: Optional[str] = None) -> Path:
    return Path(working_dir or get_working_dir(), LATOPT_FOLDER, CACHE_FOLDER)


def check_user_config(working_dir: Optional[str] = None) -> bool:
    cfg_dir = user_config_dir(working_dir)
    return all(cfg_dir.joinpath(name).exists() for name in CONFIG_FILES)


def init_user_config(working_dir: Optional[str] = None) -> Dict[str, Path]:
    """Copy packaged defaults into the user config folder, never overwriting user edits"""
    def_dir = default_config_dir()
    cfg_dir = user_config_dir(working_dir)

    assert def_dir.exists(), 'Default config not found'

    ret = {}
    for name in CONFIG_FILES:
        def_path = def_dir.joinpath(name)
        user_path = cfg_dir.joinpath(name)
        if def_path.exists() and not user_path.exists():
            user_path.parent.mkdir(parents=1, exist_ok=1)
            shutil.copyfile(def_path.as_posix(), user_path.as_posix())
        ret[Path(name).stem] = user_path

    return ret


def load_yaml(path: Path) -> Optional[Dict]:
    data = None
    try:
        with open(path) as f:
            yaml = YAML(typ='safe')
            data = yaml.load(f.read())
    except Exception:
        pass
    return data


def dump_yaml(data: Dict, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=1, exist_ok=1)
    yaml = YAML(typ='safe')
    yaml.default_flow_style = False
    with open(path, 'w') as f:
        yaml.dump(data, f)


def _read_config_file(name: str, working_dir: Optional[str]) -> Optional[Dict]:
    user_path = user_config_dir(working_dir).joinpath(name)
    path = user_path if user_path.exists() else default_config_dir().joinpath(name)
    return load_yaml(path)


def get_preset_registry(working_dir: Optional[str] = None) -> Optional[Dict]:
    return _read_config_file('preset_registry.yml', working_dir)


def get_setting(working_dir: Optional[str] = None) -> Optional[Dict]:
    data = _read_config_file('setting.yml', working_dir)
    if data and 'log_level' in data:
        os.environ['LOG_LEVEL'] = str(data['log_level'])
    return data
