import numpy as np
import pytest
from latopt.common.errors import ConfigError
from latopt.fea import BoundaryConditions
from latopt.fields import DesignFields, GridDomain
from latopt.optimizer import (
    DesignOptions,
    LatticeProblem,
    OptimizerConfig,
    compliance_and_sensitivities,
    uniform_reference,
)
from latopt.optimizer.sensitivity import regularize, volume_fraction
from latopt.problems import cantilever


def random_fields(n, seed):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, np.pi, n)
    c, s = np.cos(theta), np.sin(theta)
    R = np.stack([np.stack([c, s], axis=1), np.stack([-s, c], axis=1)], axis=1)
    return DesignFields(rng.uniform(0.3, 0.9, n), rng.uniform(1.3, 3.7, (n, 2)), R)


def objective(problem, fields, beta):
    b = compliance_and_sensitivities(problem, fields.copy(), beta)
    return b.J, b.V


@pytest.fixture
def problem(cell_spec, small_lookup):
    domain = GridDomain((8, 4))
    return LatticeProblem(domain, cell_spec, small_lookup, cantilever.build_bc(domain), OptimizerConfig())


def test_gradients_match_finite_differences(problem):
    beta = 2.0
    fields = random_fields(problem.n, 7)
    bundle = compliance_and_sensitivities(problem, fields.copy(), beta)
    h = 1e-5
    tol = 1e-6 * bundle.J
    assert problem.n == 32
    for e in (0, 7, 14, 31):
        plus, minus = fields.copy(), fields.copy()
        plus.phi[e] += h
        minus.phi[e] -= h
        (Jp, Vp), (Jm, Vm) = objective(problem, plus, beta), objective(problem, minus, beta)
        assert bundle.dJ_dphi[e] == pytest.approx((Jp - Jm) / (2 * h), rel=1e-4, abs=tol)
        assert bundle.dV_dphi[e] == pytest.approx((Vp - Vm) / (2 * h), rel=1e-5)
        for a in range(2):
            plus, minus = fields.copy(), fields.copy()
            plus.alpha[e, a] += h
            minus.alpha[e, a] -= h
            (Jp, Vp), (Jm, Vm) = objective(problem, plus, beta), objective(problem, minus, beta)
            assert bundle.dJ_dalpha[e, a] == pytest.approx((Jp - Jm) / (2 * h), rel=1e-4, abs=tol)
            assert bundle.dV_dalpha[e, a] == pytest.approx((Vp - Vm) / (2 * h), rel=1e-5)


def test_fixed_fields_pass_through(cell_spec, small_lookup):
    domain = GridDomain((4, 2))
    options = DesignOptions(optimize_phi=False, optimize_alpha=False)
    problem = LatticeProblem(
        domain, cell_spec, small_lookup, cantilever.build_bc(domain), OptimizerConfig(options)
    )
    fields = random_fields(problem.n, 1)
    regularize(problem, fields, 8.0)
    assert np.array_equal(fields.phi_bar, fields.phi)
    assert np.array_equal(fields.alpha_tilde, fields.alpha)
    assert volume_fraction(problem, fields) == pytest.approx(
        np.mean(fields.phi * small_lookup.fraction(fields.alpha, cell_spec))
    )


def test_compliance_drops_with_material(problem):
    fields = DesignFields.uniform(problem.n, 2, 0.5, [2.0, 2.0])
    J_half = compliance_and_sensitivities(problem, fields.copy(), 1.0).J
    fields = DesignFields.uniform(problem.n, 2, 0.5, [1.0, 1.0])
    J_dense = compliance_and_sensitivities(problem, fields.copy(), 1.0).J
    assert 0 < J_dense < J_half
    bundle = compliance_and_sensitivities(problem, fields, 1.0)
    assert np.all(bundle.dJ_dphi < 0)
    assert np.all(bundle.dV_dphi > 0)


def test_uniform_reference(cell_spec, small_lookup):
    domain = GridDomain((6, 3))
    bc = cantilever.build_bc(domain)
    J_lo = uniform_reference(domain, cell_spec, small_lookup, bc, 1.0)
    J_hi = uniform_reference(domain, cell_spec, small_lookup, bc, 3.0)
    assert 0 < J_lo < J_hi

    bad = BoundaryConditions(domain)
    with pytest.raises(ConfigError):
        uniform_reference(domain, cell_spec, small_lookup, bad, 1.0)
