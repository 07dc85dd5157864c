from typing import Dict, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from latopt.common.errors import GeometryError, SolverError
from latopt.fea.element import QuadElement
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization.voigt import isotropic_stiffness

MIN_RESOLUTION = 16
MIN_WALL_LAYERS = 2


class CellDiscretization(object):
    """Periodic square-element grid of one scaled unit cell

    Properties:
        resolution (int): elements per cell edge l before scaling
        plane_stress (bool): plane stress (True) or plane strain solid tensor
        void_stiffness (float): stiffness factor of hole elements
    """

    def __init__(self, resolution: int = 64, plane_stress: bool = True, void_stiffness: float = 1e-9):
        super(CellDiscretization, self).__init__()
        if resolution < MIN_RESOLUTION:
            raise GeometryError(f'Cell resolution must be >= {MIN_RESOLUTION}, got {resolution}')
        self.resolution = int(resolution)
        self.plane_stress = bool(plane_stress)
        self.void_stiffness = float(void_stiffness)

    def grid_shape(self, alpha: np.ndarray) -> Tuple[int, int]:
        """(nx, ny) elements of the cell scaled by alpha"""
        return tuple(int(round(a * self.resolution)) for a in alpha)

    def wall_layers(self, spec: UnitCellSpec) -> int:
        layers = int(round(spec.t / spec.l * self.resolution))
        if layers < MIN_WALL_LAYERS:
            raise GeometryError(
                f'Wall thickness t={spec.t} spans {layers} cell elements at resolution '
                f'{self.resolution}, need >= {MIN_WALL_LAYERS}'
            )
        return layers

    def solid_mask(self, alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
        """(ny, nx) bool, walls of the hollow cell"""
        nx, ny = self.grid_shape(alpha)
        w = self.wall_layers(spec)
        ix = np.arange(nx)
        iy = np.arange(ny)
        wall_x = (ix < w) | (ix >= nx - w)
        wall_y = (iy < w) | (iy >= ny - w)
        return wall_y[:, None] | wall_x[None, :]

    def to_dict(self) -> Dict:
        return {
            'resolution': self.resolution,
            'plane_stress': int(self.plane_stress),
            'void_stiffness': self.void_stiffness,
        }


def cell_solid_fraction(alpha: np.ndarray, spec: UnitCellSpec, disc: CellDiscretization) -> float:
    """Solid fraction of the rasterized cell, the discrete counterpart of the closed form"""
    return float(disc.solid_mask(np.asarray(alpha, float), spec).mean())


def unit_strain_displacements(elem: QuadElement) -> np.ndarray:
    """(8, 3) element nodal displacements of the unit macroscopic strains (e11, e22, g12)"""
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float) * elem.size
    x, y = corners[:, 0], corners[:, 1]
    u0 = np.zeros((8, 3))
    u0[0::2, 0] = x
    u0[1::2, 1] = y
    u0[0::2, 2] = 0.5 * y
    u0[1::2, 2] = 0.5 * x
    return u0


def periodic_element_dofs(nx: int, ny: int) -> np.ndarray:
    """Element dofs on the periodic node grid, node (ix mod nx, iy mod ny)"""
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    nodes = np.stack([((iy + dy) % ny) * nx + (ix + dx) % nx for dx, dy in corners], axis=1)
    return (2 * nodes[:, :, None] + np.arange(2)).reshape(len(nodes), 8)


def homogenize_cell(alpha: np.ndarray, spec: UnitCellSpec, disc: CellDiscretization) -> np.ndarray:
    """Effective (3, 3) tensor of the hollow cell scaled by alpha, in the cell frame

    Periodic fluctuations chi_i solve K chi_i = sum_e Ke u0_i for the three unit
    strains, then Q_ij = 1/|Y| sum_e (u0_i - chi_i)^T Ke (u0_j - chi_j).
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (2,):
        raise GeometryError(f'In-process homogenization is 2D only, got alpha {alpha.tolist()}')
    if np.any(alpha * spec.l < 2 * spec.t):
        raise GeometryError(f'Scaling {alpha.tolist()} is thinner than the cell walls')

    elem = QuadElement(2, 1.0)
    Ke = elem.stiffness(isotropic_stiffness(spec.base_E, spec.base_nu, 2, disc.plane_stress))

    mask = disc.solid_mask(alpha, spec)
    ny, nx = mask.shape
    solid = mask.ravel()
    scale = np.where(solid, 1.0, disc.void_stiffness)

    edof = periodic_element_dofs(nx, ny)
    n_dofs = 2 * nx * ny
    rows = np.repeat(edof, 8, axis=1).ravel()
    cols = np.tile(edof, (1, 8)).ravel()
    K = sparse.coo_matrix(
        ((scale[:, None, None] * Ke[None]).ravel(), (rows, cols)), shape=(n_dofs, n_dofs)
    ).tocsc()

    u0 = unit_strain_displacements(elem)
    fe = Ke @ u0
    F = np.zeros((n_dofs, 3))
    np.add.at(F, edof.ravel(), (scale[:, None, None] * fe[None]).reshape(-1, 3))

    # node 0 pinned, removes the periodic translations
    free = np.arange(2, n_dofs)
    chi = np.zeros((n_dofs, 3))
    try:
        lu = spla.splu(K[free][:, free].tocsc())
    except RuntimeError as e:
        raise SolverError(f'Periodic cell system is singular: {e}')
    chi[free] = lu.solve(F[free])

    diff = u0[None, :, :] - chi[edof]
    Q = np.einsum('e,eai,ab,ebj->ij', scale, diff, Ke, diff, optimize=True) / (nx * ny)
    return 0.5 * (Q + Q.T)
