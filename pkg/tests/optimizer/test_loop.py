import numpy as np
import pytest
from latopt.common.errors import SolverError
from latopt.fea import BoundaryConditions
from latopt.fields import GridDomain
from latopt.fields.fractions import feasible_isotropic_alpha
from latopt.optimizer import (
    DesignOptions,
    LatticeProblem,
    OptimizerConfig,
    initial_fields,
    optimize,
    write_history_csv,
)
from latopt.optimizer.loop import HISTORY_HEADER, DesignVariables, read_history_csv
from latopt.problems import cantilever


@pytest.fixture
def domain():
    return GridDomain((12, 6))


def test_design_variables(cell_spec, small_lookup, domain):
    bc = cantilever.build_bc(domain)
    options = DesignOptions(optimize_phi=True, optimize_alpha=True, isotropic_alpha=True)
    problem = LatticeProblem(domain, cell_spec, small_lookup, bc, OptimizerConfig(options))
    variables = DesignVariables(problem)
    assert variables.size == 2 * problem.n

    fields = initial_fields(problem)
    x = variables.pack(fields)
    assert np.all((x >= 0) & (x <= 1))
    x[problem.n :] = 0.5
    variables.unpack(x, fields)
    assert np.allclose(fields.alpha, 2.5)

    g = variables.gradient(np.ones(problem.n), np.ones((problem.n, 2)))
    # shared scaling sums both axes, scaled by the span 3
    assert np.allclose(g[problem.n :], 6.0)


def test_initial_fields(cell_spec, small_lookup, domain):
    bc = cantilever.build_bc(domain)
    fixed = OptimizerConfig(DesignOptions(False, True, True), vbar=0.15)
    fields = initial_fields(LatticeProblem(domain, cell_spec, small_lookup, bc, fixed))
    assert np.all(fields.phi == 1)
    assert np.allclose(fields.alpha, feasible_isotropic_alpha(0.15, cell_spec))

    free = OptimizerConfig(DesignOptions(True, True, False), vbar=0.15)
    fields = initial_fields(LatticeProblem(domain, cell_spec, small_lookup, bc, free))
    assert np.allclose(fields.alpha, 1.0)
    # v(1, 1) = 1 - 0.8^2
    assert np.allclose(fields.phi, 0.15 / 0.36)
    assert np.allclose(fields.R, np.eye(2))


def test_short_run(cell_spec, small_lookup, domain):
    bc = cantilever.build_bc(domain)
    cfg = OptimizerConfig(DesignOptions(True, True, False), vbar=0.2, max_iters=8)
    result = optimize(domain, cell_spec, bc, cfg, small_lookup)
    assert result.iterations == 8
    assert not result.converged
    assert [row['iter'] for row in result.history] == list(range(1, 9))
    assert result.history[-1]['J'] < result.history[0]['J']
    assert result.V <= 0.2 * 1.05
    assert result.J > 0
    assert set(result.timings) == {'T_FEA', 'T_Opt'}
    result.fields.validate(cell_spec)
    assert result.summary()['iterations'] == 8


def test_fixed_fraction_run(cell_spec, small_lookup, domain):
    bc = cantilever.build_bc(domain)
    cfg = OptimizerConfig(DesignOptions(False, True, True), vbar=0.2, max_iters=4)
    result = optimize(domain, cell_spec, bc, cfg, small_lookup)
    assert np.all(result.fields.phi == 1)
    assert np.allclose(result.fields.alpha[:, 0], result.fields.alpha[:, 1])
    # orientations leave the identity once the stress field is known
    assert not np.allclose(result.fields.R, np.eye(2))


def test_solver_failure_keeps_state(cell_spec, small_lookup, domain):
    bc = BoundaryConditions(domain)
    # pins leave the rotation about node (0, 0) free
    bc.fix([0, 0])
    bc.fix([1, 0], [0])
    bc.load([12, 3], [0.0, -1.0])
    cfg = OptimizerConfig(max_iters=3)
    with pytest.raises(SolverError) as info:
        optimize(domain, cell_spec, bc, cfg, small_lookup)
    assert info.value.history == []
    assert info.value.last_fields.n == domain.n_active


def test_history_csv(tmp_path):
    history = [
        {'iter': 1, 'J': 120.5, 'V': 0.15, 'max_change': 0.2, 'beta': 1.0},
        {'iter': 2, 'J': 99.25, 'V': 0.149, 'max_change': 0.1, 'beta': 1.0},
    ]
    path = tmp_path.joinpath('history.csv')
    write_history_csv(path, history)
    assert path.read_text().splitlines()[0] == ','.join(HISTORY_HEADER)
    assert read_history_csv(path) == history
