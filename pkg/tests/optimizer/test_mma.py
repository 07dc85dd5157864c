import numpy as np
import pytest
from latopt.common.errors import OptimizerError
from latopt.optimizer import MMA


def run(target, limit, x0, iters=60):
    """min |x - target|^2 s.t. sum(x) <= limit on the unit box"""
    mma = MMA(np.zeros(len(x0)), np.ones(len(x0)))
    x = np.asarray(x0, dtype=float)
    for _ in range(iters):
        x = mma.update(x, 2 * (x - target), x.sum() - limit, np.ones(len(x)))
    return x, mma


def test_active_constraint():
    x, mma = run(np.array([0.8, 0.8]), 1.0, [0.2, 0.9])
    assert np.allclose(x, [0.5, 0.5], atol=1e-2)
    assert mma.iteration == 60


def test_inactive_constraint():
    x, _ = run(np.array([0.8, 0.3, 0.6]), 3.0, [0.1, 0.1, 0.1])
    assert np.allclose(x, [0.8, 0.3, 0.6], atol=1e-2)


def test_bounds_and_move_limit():
    mma = MMA(np.zeros(3), np.ones(3), move_limit=0.1)
    x = np.array([0.05, 0.5, 0.95])
    x_new = mma.update(x, np.array([1.0, 1.0, -1.0]), -1.0, np.ones(3))
    assert np.all(x_new >= 0) and np.all(x_new <= 1)
    assert np.all(np.abs(x_new - x) <= 0.1 + 1e-12)
    assert x_new[1] < x[1] and x_new[2] > x[2]


def test_errors():
    with pytest.raises(OptimizerError):
        MMA(np.ones(2), np.zeros(2))
    mma = MMA(np.zeros(2), np.ones(2))
    with pytest.raises(OptimizerError):
        mma.update(np.full(2, 0.5), np.array([np.nan, 0.0]), 0.0, np.ones(2))
    assert mma.update(np.zeros(0), np.zeros(0), 0.0, np.zeros(0)).size == 0


def test_infeasible_volume_bound_is_fatal():
    # sum(x) <= -1 has no point in the unit box
    mma = MMA(np.zeros(2), np.ones(2))
    x = np.array([0.5, 0.5])
    with pytest.raises(OptimizerError, match='infeasible'):
        mma.update(x, np.zeros(2), x.sum() + 1.0, np.ones(2))
    assert mma.iteration == 0
