from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from latopt.common.errors import ConfigError, FormatError
from latopt.fields.grid import GridDomain
from latopt.homogenization.voigt import voigt_size


class BoundaryConditions(object):
    """Supports and nodal loads on the grid nodes of a domain

    Properties:
        n_dofs (int): dim * number of grid nodes
        fixed_dofs (np.ndarray): sorted unique constrained dof ids
        F (np.ndarray): global load vector
    """

    def __init__(self, domain: GridDomain):
        super(BoundaryConditions, self).__init__()
        self.dim = domain.dim
        self.node_shape = domain.node_shape
        self.n_dofs = domain.dim * domain.n_nodes
        self.fixed_dofs = np.zeros(0, dtype=np.int64)
        self.F = np.zeros(self.n_dofs)
        self._domain = domain

    def _nodes(self, ijk: np.ndarray) -> np.ndarray:
        ijk = np.atleast_2d(np.asarray(ijk, dtype=np.int64))
        if ijk.shape[1] != self.dim:
            raise ConfigError(f'Node coordinates need {self.dim} components, got {ijk.shape[1]}')
        if np.any(ijk < 0) or np.any(ijk >= np.array(self.node_shape)):
            raise ConfigError(f'Node outside the {self.node_shape} node grid: {ijk.tolist()}')
        return self._domain.node_index(ijk)

    def fix(self, ijk: np.ndarray, components: Optional[Sequence[int]] = None):
        """Constrain the given displacement components (all when None) of nodes"""
        nodes = self._nodes(ijk)
        components = range(self.dim) if components is None else components
        dofs = [self.dim * nodes + c for c in components]
        self.fixed_dofs = np.union1d(self.fixed_dofs, np.concatenate(dofs)).astype(np.int64)

    def load(self, ijk: np.ndarray, force: Sequence[float]):
        nodes = self._nodes(ijk)
        force = np.asarray(force, dtype=float)
        for c in range(self.dim):
            np.add.at(self.F, self.dim * nodes + c, force[c])

    @property
    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed_dofs] = False
        return mask

    def loaded_nodes(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.F.reshape(-1, self.dim) != 0, axis=1))

    def supported_nodes(self) -> np.ndarray:
        return np.unique(self.fixed_dofs // self.dim)

    def validate(self):
        if len(self.fixed_dofs) < voigt_size(self.dim):
            raise ConfigError(
                f'{len(self.fixed_dofs)} constrained dofs cannot remove the '
                f'{voigt_size(self.dim)} rigid-body modes'
            )
        if np.any(self.F[self.fixed_dofs] != 0):
            raise ConfigError('Loads applied to constrained dofs')

    def to_records(self) -> Iterable[str]:
        """BC text records, the inverse of `read_bc_file`"""
        def ijk_of(node: int):
            return np.unravel_index(node, tuple(reversed(self.node_shape)))[::-1]

        fixed = set(self.fixed_dofs.tolist())
        for node in self.supported_nodes():
            flags = [int(self.dim * node + c in fixed) for c in range(self.dim)]
            yield 'fix ' + ' '.join(str(int(v)) for v in ijk_of(node)) + ' ' + ' '.join(
                str(f) for f in flags
            )
        for node in self.loaded_nodes():
            force = self.F[self.dim * node : self.dim * node + self.dim]
            yield 'load ' + ' '.join(str(int(v)) for v in ijk_of(node)) + ' ' + ' '.join(
                repr(float(f)) for f in force
            )


def read_bc_file(path: str, domain: GridDomain) -> BoundaryConditions:
    """Parse `fix ix iy [dx dy]` and `load ix iy fx fy` records; `#` starts a comment

    The dx dy flags (0/1) select constrained components, both when omitted.
    """
    if domain.dim != 2:
        raise FormatError('BC files are defined for 2D grids only')
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise FormatError(f'Cannot read BC file {path}: {e}')

    bc = BoundaryConditions(domain)
    for n, raw in enumerate(lines, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == 'fix' and len(parts) in (3, 5):
                ij = [int(parts[1]), int(parts[2])]
                flags = [int(v) for v in parts[3:5]] if len(parts) == 5 else [1, 1]
                components = [c for c, f in enumerate(flags) if f]
                if components:
                    bc.fix(ij, components)
            elif parts[0] == 'load' and len(parts) == 5:
                bc.load([int(parts[1]), int(parts[2])], [float(parts[3]), float(parts[4])])
            else:
                raise FormatError(f'{path}:{n}: unrecognized record "{raw.strip()}"')
        except (ValueError, ConfigError) as e:
            raise FormatError(f'{path}:{n}: {e}')
    return bc


def write_bc_file(path: str, bc: BoundaryConditions):
    path = Path(path)
    path.parent.mkdir(parents=1, exist_ok=1)
    path.write_text('\n'.join(bc.to_records()) + '\n')
