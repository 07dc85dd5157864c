import itertools

import numpy as np

from latopt.fea.bc import BoundaryConditions
from latopt.fields.grid import GridDomain

DESCRIPTION = 'Left edge clamped, downward load at the middle of the right edge'


def build_bc(domain: GridDomain, load: float = 1.0) -> BoundaryConditions:
    """Clamp the x = 0 face and push the middle of the x = nx face down by `load`"""
    bc = BoundaryConditions(domain)
    side = [range(n) for n in domain.node_shape[1:]]
    bc.fix(np.array([(0,) + rest for rest in itertools.product(*side)]))

    tip = (domain.shape[0],) + tuple(n // 2 for n in domain.shape[1:])
    force = np.zeros(domain.dim)
    force[1] = -float(load)
    bc.load(np.array([tip]), force)
    return bc
