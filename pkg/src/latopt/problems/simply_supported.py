import numpy as np

from latopt.common.errors import ConfigError
from latopt.fea.bc import BoundaryConditions
from latopt.fields.grid import GridDomain

DESCRIPTION = 'Bottom corners supported (pin left, roller right), downward load at top middle'


def build_bc(domain: GridDomain, load: float = 1.0) -> BoundaryConditions:
    if domain.dim != 2:
        raise ConfigError('simply_supported is a planar load case')
    nx, ny = domain.shape
    bc = BoundaryConditions(domain)
    bc.fix(np.array([[0, 0]]))
    bc.fix(np.array([[nx, 0]]), components=[1])
    bc.load(np.array([[nx // 2, ny]]), [0.0, -float(load)])
    return bc
