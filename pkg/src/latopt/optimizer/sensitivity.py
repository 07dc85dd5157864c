from typing import Optional

import numpy as np

from latopt.fea.bc import BoundaryConditions
from latopt.fea.element import QuadElement, penalty, penalty_grad
from latopt.fea.solver import StateVector, assemble, element_dofs, solve_system
from latopt.fields.grid import DesignFields, GridDomain, UnitCellSpec
from latopt.homogenization.lookup import ElasticityLookup
from latopt.homogenization.voigt import rotation_to_voigt
from latopt.optimizer.filters import DensityFilter, heaviside_grad, heaviside_project
from latopt.optimizer.options import OptimizerConfig


class LatticeProblem(object):
    """Fixed data of one optimization: grid, cell, lookup, loads and the derived operators

    Properties:
        domain (GridDomain):
        spec (UnitCellSpec):
        lookup (ElasticityLookup):
        bc (BoundaryConditions):
        config (OptimizerConfig):
        elem (QuadElement): element template
        edof (np.ndarray): (N, n_dof) element dofs of the active elements
        filter (DensityFilter):
    """

    def __init__(
        self,
        domain: GridDomain,
        spec: UnitCellSpec,
        lookup: ElasticityLookup,
        bc: BoundaryConditions,
        config: OptimizerConfig,
    ):
        super(LatticeProblem, self).__init__()
        self.domain = domain
        self.spec = spec
        self.lookup = lookup
        self.bc = bc
        self.config = config
        self.elem = QuadElement(domain.dim, domain.element_size)
        self.edof = element_dofs(domain)
        self.filter = DensityFilter(domain, config.filter_radius)
        bc.validate()

    @property
    def n(self) -> int:
        return self.domain.n_active


class SensitivityBundle(object):
    """Objective, constraint and their gradients w.r.t. the raw fields

    Properties:
        J (float): compliance 1/2 F^T U
        V (float): solid fraction sum(phi_bar v(alpha_tilde)) / N
        dJ_dphi, dV_dphi (np.ndarray): (N,)
        dJ_dalpha, dV_dalpha (np.ndarray): (N, k)
        state (StateVector): solved displacements
        D_e (np.ndarray): (N, q, q) rotated lattice tensors used in the solve
    """

    def __init__(self, J, V, dJ_dphi, dJ_dalpha, dV_dphi, dV_dalpha, state, D_e):
        super(SensitivityBundle, self).__init__()
        self.J = J
        self.V = V
        self.dJ_dphi = dJ_dphi
        self.dJ_dalpha = dJ_dalpha
        self.dV_dphi = dV_dphi
        self.dV_dalpha = dV_dalpha
        self.state = state
        self.D_e = D_e


def regularize(problem: LatticeProblem, fields: DesignFields, beta: float) -> DesignFields:
    """Fill phi_tilde, phi_bar and alpha_tilde from the raw fields, in place

    Fixed fields pass through unfiltered.
    """
    options = problem.config.design_options
    if options.optimize_phi:
        fields.phi_tilde = problem.filter.apply(fields.phi)
        fields.phi_bar = heaviside_project(fields.phi_tilde, beta, problem.config.eta)
    else:
        fields.phi_tilde = fields.phi.copy()
        fields.phi_bar = fields.phi.copy()
    if options.optimize_alpha:
        fields.alpha_tilde = problem.filter.apply(fields.alpha)
    else:
        fields.alpha_tilde = fields.alpha.copy()
    return fields


def volume_fraction(problem: LatticeProblem, fields: DesignFields) -> float:
    v = problem.lookup.fraction(fields.alpha_tilde, problem.spec)
    return float(np.sum(fields.phi_bar * v) / problem.n)


def strain_energy_products(problem: LatticeProblem, Ue: np.ndarray) -> np.ndarray:
    """(N, q, q) matrices E with Ue^T Ke(X) Ue = sum(X * E) for any tensor X"""
    eps = np.einsum('gai,ni->nga', problem.elem.B_gp, Ue)
    return np.einsum('g,nga,ngb->nab', problem.elem.gauss_weights, eps, eps)


def solve_state(problem: LatticeProblem, fields: DesignFields):
    """Assemble and solve the regularized design; returns (state, D_e, unpenalized Ke)"""
    cfg = problem.config
    Rbar = rotation_to_voigt(fields.R)
    D_e = Rbar @ problem.lookup.interpolate(fields.alpha_tilde) @ np.swapaxes(Rbar, -1, -2)
    D_e = 0.5 * (D_e + np.swapaxes(D_e, -1, -2))
    Ke1 = problem.elem.stiffness(D_e)
    Ke = penalty(fields.phi_bar, cfg.p, cfg.phi_min)[:, None, None] * Ke1
    K = assemble(Ke, problem.edof, problem.bc.n_dofs)
    state = solve_system(K, problem.bc.F, problem.bc.free_mask, problem.edof, cfg.solver)
    return state, D_e, Rbar


def compliance_and_sensitivities(
    problem: LatticeProblem, fields: DesignFields, beta: float, regularized: bool = False
) -> SensitivityBundle:
    """Compliance, solid fraction and their gradients chained back to the raw fields

    Self-adjoint compliance: dJ/dy_e = -1/2 Ue^T dKe/dy_e Ue, for y in the
    projected fraction and the filtered scaling, then through the projection
    and the filter transpose.
    """
    cfg = problem.config
    if not regularized:
        regularize(problem, fields, beta)

    state, D_e, Rbar = solve_state(problem, fields)
    J = state.compliance(problem.bc.F)
    products = strain_energy_products(problem, state.U[problem.edof])

    pen = penalty(fields.phi_bar, cfg.p, cfg.phi_min)
    dpen = penalty_grad(fields.phi_bar, cfg.p, cfg.phi_min)
    ce = np.sum(D_e * products, axis=(1, 2))
    dJ_dphibar = -0.5 * dpen * ce

    dD = problem.lookup.interpolate_grad(fields.alpha_tilde)
    dD_rot = Rbar[:, None] @ dD @ np.swapaxes(Rbar, -1, -2)[:, None]
    dJ_dalphatilde = -0.5 * pen[:, None] * np.sum(dD_rot * products[:, None], axis=(2, 3))

    n = problem.n
    v = problem.lookup.fraction(fields.alpha_tilde, problem.spec)
    dv = problem.lookup.fraction_grad(fields.alpha_tilde, problem.spec)
    V = float(np.sum(fields.phi_bar * v) / n)
    dV_dphibar = v / n
    dV_dalphatilde = fields.phi_bar[:, None] * dv / n

    if cfg.design_options.optimize_phi:
        chain = heaviside_grad(fields.phi_tilde, beta, cfg.eta)
        dJ_dphi = problem.filter.apply_transpose(chain * dJ_dphibar)
        dV_dphi = problem.filter.apply_transpose(chain * dV_dphibar)
    else:
        dJ_dphi, dV_dphi = dJ_dphibar, dV_dphibar
    if cfg.design_options.optimize_alpha:
        dJ_dalpha = problem.filter.apply_transpose(dJ_dalphatilde)
        dV_dalpha = problem.filter.apply_transpose(dV_dalphatilde)
    else:
        dJ_dalpha, dV_dalpha = dJ_dalphatilde, dV_dalphatilde

    return SensitivityBundle(J, V, dJ_dphi, dJ_dalpha, dV_dphi, dV_dalpha, state, D_e)


def uniform_reference(
    domain: GridDomain,
    spec: UnitCellSpec,
    lookup: ElasticityLookup,
    bc: BoundaryConditions,
    alpha: float,
    config: Optional[OptimizerConfig] = None,
) -> float:
    """Compliance of the axis-aligned uniform lattice, phi = 1 and isotropic scaling alpha"""
    config = config or OptimizerConfig()
    problem = LatticeProblem(domain, spec, lookup, bc, config)
    fields = DesignFields.uniform(domain.n_active, domain.dim, 1.0, [alpha] * domain.dim)
    state, _, _ = solve_state(problem, fields)
    return state.compliance(bc.F)
