import warnings
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from latopt.common.errors import SolverError
from latopt.common.util import get_child_logger
from latopt.fea.bc import BoundaryConditions
from latopt.fea.element import QuadElement, penalized_stiffness
from latopt.fields.grid import DesignFields, GridDomain
from latopt.homogenization.voigt import rotate_tensor

RESIDUAL_TOL = 1e-8
SOLVERS = ('direct', 'cg')


class StateVector(object):
    """Solved displacements

    Properties:
        U (np.ndarray): global displacement vector, zero on fixed and unused dofs
        residual (float): relative residual of the reduced system
    """

    def __init__(self, U: np.ndarray, residual: float = 0.0):
        super(StateVector, self).__init__()
        self.U = U
        self.residual = residual

    def compliance(self, F: np.ndarray) -> float:
        return 0.5 * float(F @ self.U)


def element_dofs(domain: GridDomain, elements: Optional[np.ndarray] = None) -> np.ndarray:
    """(n, dim * 2**dim) global dof ids per element, node-major"""
    nodes = domain.element_nodes(elements)
    dim = domain.dim
    return (dim * nodes[:, :, None] + np.arange(dim)).reshape(nodes.shape[0], -1)


def assemble(Ke: np.ndarray, edof: np.ndarray, n_dofs: int) -> sparse.csc_matrix:
    """Global stiffness from per-element matrices, exactly symmetric"""
    nd = edof.shape[1]
    rows = np.repeat(edof, nd, axis=1).ravel()
    cols = np.tile(edof, (1, nd)).ravel()
    K = sparse.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsc()
    return ((K + K.T) * 0.5).tocsc()


def solve_system(
    K: sparse.spmatrix, F: np.ndarray, bc_free: np.ndarray, edof: np.ndarray, solver: str = 'direct'
) -> StateVector:
    """Solve K U = F on the free dofs touched by at least one element

    Raises:
        SolverError: unknown backend, load on unsupported dofs, or residual above 1e-8
    """
    logger = get_child_logger('latopt.fea.solver')
    if solver not in SOLVERS:
        raise SolverError(f'Unknown solver "{solver}", expected one of {SOLVERS}')

    used = np.zeros(len(F), dtype=bool)
    used[edof.ravel()] = True
    free = np.flatnonzero(bc_free & used)
    if np.any(F[~used] != 0):
        raise SolverError('Load applied to a node outside the material domain')

    U = np.zeros(len(F))
    F_f = F[free]
    norm_f = np.linalg.norm(F_f)
    if norm_f == 0:
        return StateVector(U, 0.0)

    K_ff = K[free][:, free].tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter('error', spla.MatrixRankWarning)
        try:
            if solver == 'direct':
                U_f = spla.spsolve(K_ff, F_f)
            else:
                jacobi = sparse.diags(1.0 / K_ff.diagonal())
                U_f, info = spla.cg(
                    K_ff, F_f, rtol=0.01 * RESIDUAL_TOL, atol=0.0, maxiter=10 * len(free), M=jacobi
                )
                if info != 0:
                    logger.debug(f'CG stopped with info={info}')
        except spla.MatrixRankWarning:
            raise SolverError('Stiffness matrix is singular, check supports and the active domain')

    residual = float(np.linalg.norm(K_ff @ U_f - F_f) / norm_f)
    logger.debug(f'{solver} solve, {len(free)} dofs, relative residual {residual:.3e}')
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SolverError(
            f'{solver} solve did not converge, relative residual {residual:.3e} > {RESIDUAL_TOL}',
            residual,
        )
    U[free] = U_f
    return StateVector(U, residual)


def design_element_tensors(fields: DesignFields, lookup) -> np.ndarray:
    """Rotated lattice tensors D_e(alpha_tilde, R), one per active element"""
    return rotate_tensor(lookup.interpolate(fields.alpha_tilde), fields.R)


def assemble_and_solve(
    domain: GridDomain,
    fields: DesignFields,
    lookup,
    bc: BoundaryConditions,
    p: float = 3.0,
    phi_min: float = 1e-9,
    solver: str = 'direct',
    elem: Optional[QuadElement] = None,
    edof: Optional[np.ndarray] = None,
) -> StateVector:
    """Equilibrium of the lattice design: per-element D from the lookup, rotated, penalized"""
    elem = elem or QuadElement(domain.dim, domain.element_size)
    edof = element_dofs(domain) if edof is None else edof
    Ke = penalized_stiffness(
        fields.phi_bar, elem.stiffness(design_element_tensors(fields, lookup)), p, phi_min
    )
    K = assemble(Ke, edof, bc.n_dofs)
    return solve_system(K, bc.F, bc.free_mask, edof, solver)
