import csv
import time
from typing import Dict, List, Optional

import numpy as np

from latopt.common.errors import OptimizerError, SolverError
from latopt.common.util import get_child_logger
from latopt.fea.bc import BoundaryConditions
from latopt.fea.stress import element_stress_strain, update_principal_stress
from latopt.fields.fractions import feasible_isotropic_alpha
from latopt.fields.grid import DesignFields, GridDomain, UnitCellSpec
from latopt.homogenization.lookup import ElasticityLookup
from latopt.optimizer.filters import ContinuationSchedule
from latopt.optimizer.mma import MMA
from latopt.optimizer.options import OptimizerConfig
from latopt.optimizer.sensitivity import (
    LatticeProblem,
    SensitivityBundle,
    compliance_and_sensitivities,
    regularize,
    solve_state,
    volume_fraction,
)

HISTORY_HEADER = ['iter', 'J', 'V', 'max_change', 'beta']


class DesignVariables(object):
    """Maps the free fields onto one MMA vector normalized to [0, 1]

    phi comes first when free, then alpha: one column per element when the
    scaling is isotropic, k columns otherwise.
    """

    def __init__(self, problem: LatticeProblem):
        super(DesignVariables, self).__init__()
        self.options = problem.config.design_options
        self.n = problem.n
        self.k = problem.domain.dim
        self.bounds = problem.spec.bounds()[: self.k]
        self.span = self.bounds[:, 1] - self.bounds[:, 0]

    @property
    def n_alpha_columns(self) -> int:
        if not self.options.optimize_alpha:
            return 0
        return 1 if self.options.isotropic_alpha else self.k

    @property
    def size(self) -> int:
        return self.n * (int(self.options.optimize_phi) + self.n_alpha_columns)

    def pack(self, fields: DesignFields) -> np.ndarray:
        parts = []
        if self.options.optimize_phi:
            parts.append(fields.phi)
        if self.options.optimize_alpha:
            a = (fields.alpha - self.bounds[:, 0]) / self.span
            parts.append(a[:, :1].ravel() if self.options.isotropic_alpha else a.ravel())
        return np.concatenate(parts) if parts else np.zeros(0)

    def unpack(self, x: np.ndarray, fields: DesignFields) -> DesignFields:
        offset = 0
        if self.options.optimize_phi:
            fields.phi = x[: self.n].copy()
            offset = self.n
        if self.options.optimize_alpha:
            a = x[offset:].reshape(self.n, self.n_alpha_columns)
            if self.options.isotropic_alpha:
                a = np.repeat(a, self.k, axis=1)
            fields.alpha = self.bounds[:, 0] + a * self.span
        return fields

    def gradient(self, d_phi: np.ndarray, d_alpha: np.ndarray) -> np.ndarray:
        """Field gradients expressed in the normalized variables"""
        parts = []
        if self.options.optimize_phi:
            parts.append(d_phi)
        if self.options.optimize_alpha:
            g = d_alpha * self.span
            parts.append(g.sum(axis=1) if self.options.isotropic_alpha else g.ravel())
        return np.concatenate(parts) if parts else np.zeros(0)


class OptimizationResult(object):
    """Outcome of `optimize`

    Properties:
        fields (DesignFields): final fields, regularized at the final beta
        history (List[Dict]): per iteration iter, J, V, max_change, beta
        J (float): compliance of the final fields
        V (float): solid fraction of the final fields
        iterations (int):
        converged (bool): stopped on the change threshold rather than max_iters
        timings (Dict): T_FEA and T_Opt seconds
    """

    def __init__(self, fields, history, J, V, iterations, converged, timings):
        super(OptimizationResult, self).__init__()
        self.fields = fields
        self.history = history
        self.J = J
        self.V = V
        self.iterations = iterations
        self.converged = converged
        self.timings = timings

    def summary(self) -> Dict:
        return {
            'J': self.J,
            'V': self.V,
            'iterations': self.iterations,
            'converged': self.converged,
        }


def initial_fields(problem: LatticeProblem) -> DesignFields:
    """Volume-feasible uniform start with R = identity

    With phi fixed at 1 the scaling starts at the isotropic alpha meeting vbar.
    With phi free the scaling starts at the lower bound and phi = vbar / v(alpha_lo).
    """
    spec, cfg = problem.spec, problem.config
    k = problem.domain.dim
    if not cfg.design_options.optimize_phi:
        alpha0 = feasible_isotropic_alpha(cfg.vbar, spec)
        return DesignFields.uniform(problem.n, k, 1.0, [alpha0] * k)
    alpha0 = [spec.alpha_lo] * k
    v0 = float(problem.lookup.fraction(np.array([alpha0]), spec)[0])
    phi0 = float(np.clip(cfg.vbar / v0, 0.0, 1.0))
    return DesignFields.uniform(problem.n, k, phi0, alpha0)


def mma_update(
    mma: MMA,
    variables: DesignVariables,
    fields: DesignFields,
    bundle: SensitivityBundle,
    J0: float,
    vbar: float,
) -> DesignFields:
    """One MMA step on the free fields; objective J/J0, constraint V/vbar - 1 <= 0"""
    x = variables.pack(fields)
    if x.size == 0:
        return fields
    df0 = variables.gradient(bundle.dJ_dphi, bundle.dJ_dalpha) / J0
    dg = variables.gradient(bundle.dV_dphi, bundle.dV_dalpha) / vbar
    x_new = mma.update(x, df0, bundle.V / vbar - 1.0, dg)
    return variables.unpack(x_new, fields)


def optimize(
    domain: GridDomain,
    spec: UnitCellSpec,
    bc: BoundaryConditions,
    config: OptimizerConfig,
    lookup: ElasticityLookup,
    fields: Optional[DesignFields] = None,
) -> OptimizationResult:
    """Filter, project, solve, MMA step on phi and alpha, principal-stress update of R

    Stops when the largest change of the design variables and of R falls below
    conv_tol with the projection at full sharpness, or after max_iters.

    Raises:
        SolverError: FE solve failed; carries `last_fields` and `history`
        OptimizerError: infeasible MMA subproblem; carries `last_fields` and `history`
    """
    logger = get_child_logger('latopt.optimizer.loop')
    problem = LatticeProblem(domain, spec, lookup, bc, config)
    fields = initial_fields(problem) if fields is None else fields.copy()
    variables = DesignVariables(problem)
    schedule = ContinuationSchedule(config.beta_init, config.beta_max, config.beta_every)
    mma = MMA(
        np.zeros(variables.size),
        np.ones(variables.size),
        config.move_limit,
        config.mma_asyinit,
        config.mma_asyincr,
        config.mma_asydecr,
    )

    history: List[Dict] = []
    t_fea = 0.0
    t_start = time.time()
    J0 = None
    converged = False
    iteration = 0
    last_valid = fields.copy()

    for iteration in range(1, config.max_iters + 1):
        beta = schedule.beta(iteration)
        t0 = time.time()
        try:
            bundle = compliance_and_sensitivities(problem, fields, beta)
        except SolverError as e:
            e.last_fields = last_valid
            e.history = history
            logger.error(f'FE solve failed at iteration {iteration}: {e}')
            raise
        t_fea += time.time() - t0
        if not np.isfinite(bundle.J) or bundle.J <= 0:
            raise OptimizerError(f'Compliance {bundle.J} at iteration {iteration} is not positive')
        last_valid = fields.copy()
        J0 = J0 or bundle.J

        x_old = variables.pack(fields)
        try:
            fields = mma_update(mma, variables, fields, bundle, J0, config.vbar)
        except OptimizerError as e:
            e.last_fields = last_valid
            e.history = history
            raise
        change = float(np.max(np.abs(variables.pack(fields) - x_old), initial=0.0))

        stress = element_stress_strain(bundle.state.U, bundle.D_e, problem.elem, problem.edof)
        R_new = update_principal_stress(stress, fields.R, config.eps_iso).R
        change = max(change, float(np.max(np.abs(R_new - fields.R), initial=0.0)))
        fields.R = R_new

        history.append(
            {'iter': iteration, 'J': bundle.J, 'V': bundle.V, 'max_change': change, 'beta': beta}
        )
        logger.info(
            f'iter {iteration:3d}  J {bundle.J:.5g}  V {bundle.V:.4f}  change {change:.4f}  beta {beta:g}'
        )
        if change < config.conv_tol and schedule.at_max(iteration):
            converged = True
            break

    beta = schedule.beta(iteration)
    regularize(problem, fields, beta)
    t0 = time.time()
    state, _, _ = solve_state(problem, fields)
    t_fea += time.time() - t0
    J = state.compliance(bc.F)
    V = volume_fraction(problem, fields)
    timings = {'T_FEA': t_fea, 'T_Opt': time.time() - t_start - t_fea}
    logger.info(f'Optimization finished after {iteration} iterations, J {J:.5g}, V {V:.4f}')
    return OptimizationResult(fields, history, J, V, iteration, converged, timings)


def write_history_csv(path: str, history: List[Dict]):
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=HISTORY_HEADER)
        writer.writeheader()
        for row in history:
            writer.writerow({key: row[key] for key in HISTORY_HEADER})


def read_history_csv(path: str) -> List[Dict]:
    with open(path, newline='') as f:
        return [
            {key: (int(row[key]) if key == 'iter' else float(row[key])) for key in HISTORY_HEADER}
            for row in csv.DictReader(f)
        ]
