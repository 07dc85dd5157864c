import argparse
import os
import sys

from latopt.common import config
from latopt.common.errors import LatoptError
from latopt.common.util import ROOT_LOGGER, create_logger
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization import CellDiscretization, build_lookup

_LOGGER = None


def _build_table(args, working_dir: str):
    global _LOGGER
    config.set_working_dir(working_dir)
    config.get_setting(working_dir)
    _LOGGER = create_logger(ROOT_LOGGER, 'homogenization')

    spec = UnitCellSpec(args.l, args.t, args.alpha_lo, args.alpha_hi, args.E, args.nu)
    disc = CellDiscretization(args.resolution, not args.plane_strain, args.void_stiffness)
    _LOGGER.info(f'Cell: {spec.to_dict()}')
    _LOGGER.info(f'Discretization: {disc.to_dict()}')

    lookup = build_lookup(spec, args.samples, disc, args.threads)
    lookup.save(args.out)
    _LOGGER.info(f'Saved lookup table to {args.out}')


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Build a homogenized elasticity lookup table')
    parser.add_argument('--l', type=float, default=10.0, help='Cell side length')
    parser.add_argument('--t', type=float, default=1.0, help='Wall thickness')
    parser.add_argument('--alpha-lo', type=float, default=1.0, help='Lower scaling bound')
    parser.add_argument('--alpha-hi', type=float, default=4.0, help='Upper scaling bound')
    parser.add_argument('--E', type=float, default=1.0, help='Young modulus of the solid')
    parser.add_argument('--nu', type=float, default=0.3, help='Poisson ratio of the solid')
    parser.add_argument('--samples', type=int, default=13, help='Samples per scaling axis')
    parser.add_argument('--resolution', type=int, default=64, help='Elements per cell edge')
    parser.add_argument('--void-stiffness', type=float, default=1e-9, help='Hole stiffness factor')
    parser.add_argument('--plane-strain', action='store_true', help='Plane strain solid tensor')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads')
    parser.add_argument('--working_dir', type=str, default='.', help='Current working directory')
    parser.add_argument('-o', '--out', default='D_table.msgpack', help='Output table file')
    args = parser.parse_args()

    working_dir = args.working_dir if args.working_dir != '.' else os.getcwd()
    try:
        _build_table(args, working_dir)
    except LatoptError as e:
        print(f'Failed: {e}')
        sys.exit(1)
