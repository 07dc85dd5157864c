from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from latopt.common.errors import GeometryError


class GridDomain(object):
    """Regular grid of square (cube) elements

    Elements are flattened row-major with x running fastest,
    e = ix + nx * (iy + ny * iz). Node numbering follows the same rule on the
    (nx + 1) x (ny + 1) [x (nz + 1)] node grid.

    Properties:
        shape (Tuple[int, ...]): element counts (nx, ny) or (nx, ny, nz)
        element_size (float): physical edge length of one element
        active_mask (np.ndarray): bool per grid element
    """

    def __init__(
        self,
        shape: Sequence[int],
        element_size: float = 1.0,
        active_mask: Optional[np.ndarray] = None,
    ):
        super(GridDomain, self).__init__()
        shape = tuple(int(n) for n in shape)
        if len(shape) not in (2, 3) or min(shape) < 1:
            raise GeometryError(f'Invalid grid shape {shape}')
        if not element_size > 0:
            raise GeometryError(f'Element size must be positive, got {element_size}')

        self.shape = shape
        self.element_size = float(element_size)

        n_total = int(np.prod(shape))
        if active_mask is None:
            active_mask = np.ones(n_total, dtype=bool)
        active_mask = np.asarray(active_mask, dtype=bool).ravel()
        if active_mask.size != n_total:
            raise GeometryError(
                f'Active mask has {active_mask.size} entries, grid {shape} has {n_total}'
            )
        if not active_mask.any():
            raise GeometryError('Active mask is empty')
        self.active_mask = active_mask
        self.active_indices = np.flatnonzero(active_mask)

        # grid element -> position in active arrays, -1 when inactive
        self.active_position = np.full(n_total, -1, dtype=np.int64)
        self.active_position[self.active_indices] = np.arange(self.active_indices.size)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def nx(self) -> int:
        return self.shape[0]

    @property
    def ny(self) -> int:
        return self.shape[1]

    @property
    def nz(self) -> int:
        return self.shape[2] if self.dim == 3 else 1

    @property
    def n_total(self) -> int:
        return self.active_mask.size

    @property
    def n_active(self) -> int:
        return self.active_indices.size

    @property
    def node_shape(self) -> Tuple[int, ...]:
        return tuple(n + 1 for n in self.shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    def array_shape(self) -> Tuple[int, ...]:
        """Shape for reshaping flat per-element arrays, slowest axis first"""
        return tuple(reversed(self.shape))

    def element_ijk(self, elements: Optional[np.ndarray] = None) -> np.ndarray:
        """Integer grid coordinates (ix, iy[, iz]) of grid elements, one row each"""
        if elements is None:
            elements = self.active_indices
        coords = np.unravel_index(np.asarray(elements), self.array_shape())
        return np.stack(list(reversed(coords)), axis=1)

    def element_centers(self, elements: Optional[np.ndarray] = None) -> np.ndarray:
        return (self.element_ijk(elements) + 0.5) * self.element_size

    def node_index(self, ijk: np.ndarray) -> np.ndarray:
        ijk = np.atleast_2d(ijk)
        return np.ravel_multi_index(tuple(ijk[:, ::-1].T), tuple(reversed(self.node_shape)))

    def element_nodes(self, elements: Optional[np.ndarray] = None) -> np.ndarray:
        """Corner nodes per element, counter-clockwise from the lower-left in 2D

        3D elements list the bottom face (z = iz) then the top face, each
        counter-clockwise seen from +z.
        """
        ijk = self.element_ijk(elements)
        if self.dim == 2:
            offsets = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
        else:
            offsets = np.array(
                [
                    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
                ]
            )
        corners = ijk[:, None, :] + offsets[None, :, :]
        flat = corners.reshape(-1, self.dim)
        return self.node_index(flat).reshape(ijk.shape[0], offsets.shape[0])

    def with_mask(self, mask: np.ndarray) -> 'GridDomain':
        return GridDomain(self.shape, self.element_size, mask)

    def to_dict(self) -> Dict:
        ret = {'shape': list(self.shape), 'element_size': self.element_size}
        if not self.active_mask.all():
            ret['active_mask'] = self.active_mask.astype(int).tolist()
        return ret


class UnitCellSpec(object):
    """Hollow square cell of side l and wall thickness t, scaled per axis by alpha

    Properties:
        l (float): cell side length
        t (float): wall thickness, 2t <= l (2t == l is the fully solid cell)
        alpha_lo (float): lower scaling bound, shared by every axis
        alpha_hi (float): upper scaling bound
        base_E (float): Young's modulus of the solid
        base_nu (float): Poisson ratio of the solid
        dim (int): 2 or 3
    """

    def __init__(
        self,
        l: float,
        t: float,
        alpha_lo: float = 1.0,
        alpha_hi: float = 4.0,
        base_E: float = 1.0,
        base_nu: float = 0.3,
        dim: int = 2,
    ):
        super(UnitCellSpec, self).__init__()
        self.l = float(l)
        self.t = float(t)
        self.alpha_lo = float(alpha_lo)
        self.alpha_hi = float(alpha_hi)
        self.base_E = float(base_E)
        self.base_nu = float(base_nu)
        self.dim = int(dim)
        self.validate()

    def validate(self):
        if not (0 < 2 * self.t <= self.l):
            raise GeometryError(f'Cell needs 0 < 2t <= l, got l={self.l}, t={self.t}')
        if not (1 <= self.alpha_lo <= self.alpha_hi):
            raise GeometryError(
                f'Scaling bounds need 1 <= lo <= hi, got [{self.alpha_lo}, {self.alpha_hi}]'
            )
        if not self.base_E > 0:
            raise GeometryError(f'Young modulus must be positive, got {self.base_E}')
        if not (-1 < self.base_nu < 0.5):
            raise GeometryError(f'Poisson ratio must lie in (-1, 0.5), got {self.base_nu}')
        if self.dim not in (2, 3):
            raise GeometryError(f'Cell dimension must be 2 or 3, got {self.dim}')

    @property
    def is_solid(self) -> bool:
        return 2 * self.t >= self.l

    def bounds(self) -> np.ndarray:
        """Per-axis [lo, hi] rows"""
        return np.tile([self.alpha_lo, self.alpha_hi], (self.dim, 1))

    def to_dict(self) -> Dict:
        return {
            'l': self.l,
            't': self.t,
            'alpha_lo': self.alpha_lo,
            'alpha_hi': self.alpha_hi,
            'base_E': self.base_E,
            'base_nu': self.base_nu,
        }

    @classmethod
    def from_dict(cls, d: Dict, dim: int = 2) -> 'UnitCellSpec':
        return cls(dim=dim, **d)


class DesignFields(object):
    """Per active element design state, arrays ordered like GridDomain.active_indices

    Properties:
        phi (np.ndarray): (N,) lattice fraction
        alpha (np.ndarray): (N, k) scaling vectors
        R (np.ndarray): (N, k, k) rotations, rows are the cell's local axes
        phi_tilde (np.ndarray): filtered phi
        alpha_tilde (np.ndarray): filtered alpha
        phi_bar (np.ndarray): projected phi_tilde
    """

    def __init__(
        self,
        phi: np.ndarray,
        alpha: np.ndarray,
        R: np.ndarray,
        phi_tilde: Optional[np.ndarray] = None,
        alpha_tilde: Optional[np.ndarray] = None,
        phi_bar: Optional[np.ndarray] = None,
    ):
        super(DesignFields, self).__init__()
        self.phi = np.asarray(phi, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.phi_tilde = self.phi.copy() if phi_tilde is None else np.asarray(phi_tilde, float)
        self.alpha_tilde = (
            self.alpha.copy() if alpha_tilde is None else np.asarray(alpha_tilde, float)
        )
        self.phi_bar = self.phi_tilde.copy() if phi_bar is None else np.asarray(phi_bar, float)

    @classmethod
    def uniform(
        cls, n: int, dim: int, phi: float, alpha: Sequence[float], R: Optional[np.ndarray] = None
    ) -> 'DesignFields':
        alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (dim,))
        R = np.eye(dim) if R is None else np.asarray(R, dtype=float)
        return cls(
            np.full(n, float(phi)), np.tile(alpha, (n, 1)), np.tile(R, (n, 1, 1)),
        )

    @property
    def n(self) -> int:
        return self.phi.size

    @property
    def dim(self) -> int:
        return self.alpha.shape[1]

    def copy(self) -> 'DesignFields':
        return DesignFields(
            self.phi.copy(),
            self.alpha.copy(),
            self.R.copy(),
            self.phi_tilde.copy(),
            self.alpha_tilde.copy(),
            self.phi_bar.copy(),
        )

    def validate(self, spec: UnitCellSpec, tol: float = 1e-9):
        """Raise GeometryError on any broken field invariant"""
        n, k = self.n, self.dim
        if self.alpha.shape != (n, k) or self.R.shape != (n, k, k):
            raise GeometryError(
                f'Inconsistent field shapes phi {self.phi.shape}, alpha {self.alpha.shape}, '
                f'R {self.R.shape}'
            )
        for name in ('phi', 'phi_tilde', 'phi_bar'):
            v = getattr(self, name)
            if v.size and (v.min() < -tol or v.max() > 1 + tol):
                raise GeometryError(f'{name} leaves [0, 1]: [{v.min()}, {v.max()}]')
        for name in ('alpha', 'alpha_tilde'):
            v = getattr(self, name)
            if v.size and (v.min() < spec.alpha_lo - tol or v.max() > spec.alpha_hi + tol):
                raise GeometryError(
                    f'{name} leaves [{spec.alpha_lo}, {spec.alpha_hi}]: [{v.min()}, {v.max()}]'
                )
        ortho = np.abs(np.einsum('nji,njk->nik', self.R, self.R) - np.eye(k)).max(initial=0.0)
        if ortho > 1e-8:
            raise GeometryError(f'Rotation field is not orthonormal, max error {ortho:.3e}')
        if n and np.any(np.linalg.det(self.R) < 0):
            raise GeometryError('Rotation field has reflections (det = -1)')
