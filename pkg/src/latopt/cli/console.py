import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from latopt.cli.pipeline import RunReport, run_pipeline
from latopt.cli.run_config import RunConfig
from latopt.common import config
from latopt.common.errors import LatoptError
from latopt.common.util import ROOT_LOGGER, create_logger
from latopt.compiler import LatticeCompiler
from latopt.compiler.export import write_lattice_json, write_lattice_obj
from latopt.compiler.graph import FrameGraph


class Console(object):
    """
    Main console for running latopt

    Properties:
        working_dir (str):
        setting (dict):
        logger (logging.Logger):

    Methods:
        init_config()
        load_config()
        run(config_path)
        compile(framegraph_path)
        validate(lattice_path, config_path)

    """

    def __init__(self, working_dir: Optional[str] = None):
        super(Console, self).__init__()
        self.working_dir = working_dir if working_dir else os.getcwd()
        self.setting = None
        self.logger = None

    def init_config(self):
        """Generate user config from the packaged defaults ( existing files are kept )"""
        cfg = config.init_user_config(self.working_dir)
        print('Generated user config')
        print(f'--Setting: {cfg["setting"]}')
        print(f'--Preset registry: {cfg["preset_registry"]}')

    def load_config(self):
        """Read settings, falling back to the packaged defaults when no user config exists"""
        config.set_working_dir(self.working_dir)
        self.setting = config.get_setting(self.working_dir)
        if not self.setting:
            raise LatoptError('Failed to read settings')
        self.logger = create_logger(ROOT_LOGGER, 'cli')

    def run(
        self,
        config_path: str,
        preset: Optional[str] = None,
        serial: Optional[bool] = None,
        threads: Optional[int] = None,
        mode: Optional[str] = None,
    ) -> RunReport:
        run_config = RunConfig.load(config_path, self.working_dir).with_overrides(
            preset, serial, threads, mode
        )
        self.logger.info(f'Loaded run config {config_path}')
        return run_pipeline(run_config, self.working_dir)

    def compile(
        self,
        framegraph_path: str,
        h: Optional[float] = None,
        seed: int = 0,
        out: str = 'latopt_out',
        serial: bool = False,
        threads: int = 4,
    ):
        graph = FrameGraph.load(framegraph_path)
        if h is not None:
            graph.h = h
        compiler = LatticeCompiler(seed, None, serial, threads)
        lattice = compiler.compile(graph)
        out = Path(self.working_dir, out)
        write_lattice_json(out.joinpath('lattice.json'), lattice)
        write_lattice_obj(out.joinpath('lattice.obj'), lattice)
        self.logger.info(f'{lattice.n_vertices} vertices, {lattice.n_edges} struts written to {out}')
        return lattice

    def validate(self, lattice_path: str, config_path: str) -> RunReport:
        run_config = RunConfig.load(config_path, self.working_dir).with_overrides(mode='validate')
        run_config.sections['validate']['lattice_file'] = Path(lattice_path).resolve().as_posix()
        report = run_pipeline(run_config, self.working_dir)
        print(f'Validation: {report.validation}')
        return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='latopt', description='Lattice optimization and compilation')
    parser.add_argument('--working_dir', type=str, default='.', help='Current working directory')
    subparsers = parser.add_subparsers(dest='command', help='Sub commands')

    subparsers.add_parser('init', help='Generate user config')

    run_parser = subparsers.add_parser('run', help='Run the pipeline from a YAML run file')
    run_parser.add_argument('config', help='Run config file')
    run_parser.add_argument('--preset', choices=list('abcdef'), help='Design option preset')
    run_parser.add_argument('--mode', choices=['optimize', 'compile', 'full', 'validate'])
    run_parser.add_argument('--serial', action='store_true', default=None, help='Deterministic serial mode')
    run_parser.add_argument('--threads', type=int, default=None, help='Worker threads')

    compile_parser = subparsers.add_parser('compile', help='Compile a frame graph file')
    compile_parser.add_argument('framegraph', help='Frame graph file (msgpack)')
    compile_parser.add_argument('--h', type=float, default=None, help='Target edge length')
    compile_parser.add_argument('--seed', type=int, default=0, help='Random seed')
    compile_parser.add_argument('--out', default='latopt_out', help='Output directory')
    compile_parser.add_argument('--serial', action='store_true', help='Deterministic serial mode')
    compile_parser.add_argument('--threads', type=int, default=4, help='Worker threads')

    validate_parser = subparsers.add_parser('validate', help='Cross-check a lattice by full FE')
    validate_parser.add_argument('lattice', help='Lattice JSON file')
    validate_parser.add_argument('config', help='Run config file')
    return parser


def main(argv: Optional[List[str]] = None):
    args = build_parser().parse_args(argv)
    working_dir = args.working_dir if args.working_dir != '.' else os.getcwd()
    console = Console(working_dir)

    try:
        if args.command == 'init':
            console.init_config()
            return
        console.load_config()
        if args.command == 'run':
            console.run(args.config, args.preset, args.serial, args.threads, args.mode)
        elif args.command == 'compile':
            console.compile(args.framegraph, args.h, args.seed, args.out, args.serial, args.threads)
        elif args.command == 'validate':
            console.validate(args.lattice, args.config)
        else:
            build_parser().print_help()
    except LatoptError as e:
        print(f'Failed: {e}')
        sys.exit(1)
    except KeyboardInterrupt:
        print('Exited latopt')
        sys.exit(1)
