import numpy as np

from latopt.common.errors import GeometryError
from latopt.fields.grid import UnitCellSpec

BOUND_TOL = 1e-9


def _check_alpha(alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1] != 2:
        raise GeometryError(
            f'Closed-form cell fraction is 2D only, got scaling vectors of size {alpha.shape[-1]}'
        )
    if alpha.size and (
        alpha.min() < spec.alpha_lo - BOUND_TOL or alpha.max() > spec.alpha_hi + BOUND_TOL
    ):
        raise GeometryError(
            f'Scaling outside [{spec.alpha_lo}, {spec.alpha_hi}]: [{alpha.min()}, {alpha.max()}]'
        )
    if np.any(alpha * spec.l - 2 * spec.t < 0):
        raise GeometryError(f'Scaling makes the cell thinner than its walls (l={spec.l}, t={spec.t})')
    return alpha


def cell_volume_fraction(alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
    """Solid fraction of a hollow cell scaled by alpha

    v = 1 - (ax l - 2t)(ay l - 2t) / (ax ay l^2), vectorized over leading axes.
    """
    alpha = _check_alpha(alpha, spec)
    c = 2 * spec.t / spec.l
    return 1.0 - (1.0 - c / alpha[..., 0]) * (1.0 - c / alpha[..., 1])


def cell_volume_fraction_grad(alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
    """dv/d(alpha_k), same shape as alpha"""
    alpha = _check_alpha(alpha, spec)
    c = 2 * spec.t / spec.l
    hx = 1.0 - c / alpha[..., 0]
    hy = 1.0 - c / alpha[..., 1]
    return np.stack([-c / alpha[..., 0] ** 2 * hy, -c / alpha[..., 1] ** 2 * hx], axis=-1)


def element_solid_fraction(phi: np.ndarray, alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.size and (phi.min() < -BOUND_TOL or phi.max() > 1 + BOUND_TOL):
        raise GeometryError(f'Lattice fraction outside [0, 1]: [{phi.min()}, {phi.max()}]')
    return phi * cell_volume_fraction(alpha, spec)


def feasible_isotropic_alpha(vbar: float, spec: UnitCellSpec) -> float:
    """Isotropic scaling whose fully filled cell has solid fraction vbar, clipped to bounds"""
    if not 0 < vbar < 1:
        raise GeometryError(f'Solid fraction bound must lie in (0, 1), got {vbar}')
    c = 2 * spec.t / spec.l
    alpha = c / (1.0 - np.sqrt(1.0 - vbar))
    return float(np.clip(alpha, spec.alpha_lo, spec.alpha_hi))
