import argparse
import os
import sys
from pathlib import Path

from latopt.common import config
from latopt.common.errors import LatoptError
from latopt.common.util import ROOT_LOGGER, create_logger
from latopt.compiler import LatticeCompiler
from latopt.compiler.export import write_lattice_json, write_lattice_obj
from latopt.compiler.graph import FrameGraph

_LOGGER = None


def _compile(args, working_dir: str):
    global _LOGGER
    config.set_working_dir(working_dir)
    config.get_setting(working_dir)
    _LOGGER = create_logger(ROOT_LOGGER, 'compiler')

    graph = FrameGraph.load(args.framegraph)
    if args.h is not None:
        graph.h = args.h
    _LOGGER.info(f'Loaded {args.framegraph}: k={graph.dim}, {graph.n_vertices} vertices')

    compiler = LatticeCompiler(args.seed, args.iters, args.serial, args.threads)
    lattice = compiler.compile(graph)
    out = Path(args.out)
    write_lattice_json(out / 'lattice.json', lattice)
    write_lattice_obj(out / 'lattice.obj', lattice)
    _LOGGER.info(f'Timings: {compiler.timings}')
    _LOGGER.info(f'Wrote {lattice.n_vertices} vertices, {lattice.n_edges} struts to {out}')


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Compile a frame graph into a lattice')
    parser.add_argument('framegraph', help='Frame graph file (msgpack)')
    parser.add_argument('--h', type=float, default=None, help='Target edge length, overrides the file')
    parser.add_argument('--seed', type=int, default=0, help='Random seed of the origins')
    parser.add_argument('--iters', type=int, default=None, help='Sweeps per hierarchy level')
    parser.add_argument('--serial', action='store_true', help='Compile components serially')
    parser.add_argument('--threads', type=int, default=4, help='Worker threads')
    parser.add_argument('--working_dir', type=str, default='.', help='Current working directory')
    parser.add_argument('-o', '--out', default='latopt_out', help='Output directory')
    args = parser.parse_args()

    working_dir = args.working_dir if args.working_dir != '.' else os.getcwd()
    try:
        _compile(args, working_dir)
    except LatoptError as e:
        print(f'Failed: {e}')
        sys.exit(1)
