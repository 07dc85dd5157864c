"""Elasticity tensors in engineering (Voigt) notation

Component order is (11, 22, 12) in 2D and (11, 22, 33, 23, 31, 12) in 3D.
Strains carry engineering shear (gamma = 2 eps_12). Tensors and their
rotation operators are plain (q, q) arrays, q = k(k + 1)/2.
"""
import numpy as np

from latopt.common.errors import GeometryError

ORTHO_TOL = 1e-8

# in-plane rows/columns of the 3D operator
PLANE_INDICES = [0, 1, 5]


def voigt_size(dim: int) -> int:
    return dim * (dim + 1) // 2


def isotropic_stiffness(E: float, nu: float, dim: int = 2, plane_stress: bool = True) -> np.ndarray:
    if dim == 2:
        if plane_stress:
            return E / (1 - nu ** 2) * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])
        c = E / ((1 + nu) * (1 - 2 * nu))
        return c * np.array([[1 - nu, nu, 0], [nu, 1 - nu, 0], [0, 0, (1 - 2 * nu) / 2]])
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[:3, :3] += 2 * mu * np.eye(3)
    D[3:, 3:] = mu * np.eye(3)
    return D


def check_rotation(R: np.ndarray):
    R = np.asarray(R, dtype=float)
    k = R.shape[-1]
    if R.shape[-2:] != (k, k) or k not in (2, 3):
        raise GeometryError(f'Rotation must be 2x2 or 3x3, got shape {R.shape}')
    err = np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(k)).max(initial=0.0)
    if err > ORTHO_TOL:
        raise GeometryError(f'Rotation is not orthonormal, |R^T R - I| = {err:.3e}')
    if np.any(np.linalg.det(R) < 0):
        raise GeometryError('Rotation has determinant -1')


def _rotation_3d(R: np.ndarray) -> np.ndarray:
    # l_i, m_i, n_i are the rows of R, i.e. the direction cosines of column i
    l, m, n = R[..., 0, :], R[..., 1, :], R[..., 2, :]
    out = np.zeros(R.shape[:-2] + (6, 6))
    # cyclic successors: row 23 pairs (2, 3), row 31 pairs (3, 1), row 12 pairs (1, 2)
    a, b = [1, 2, 0], [2, 0, 1]
    for i in range(3):
        out[..., i, 0] = l[..., i] ** 2
        out[..., i, 1] = m[..., i] ** 2
        out[..., i, 2] = n[..., i] ** 2
        out[..., i, 3] = 2 * m[..., i] * n[..., i]
        out[..., i, 4] = 2 * n[..., i] * l[..., i]
        out[..., i, 5] = 2 * l[..., i] * m[..., i]

        p, q = a[i], b[i]
        out[..., 3 + i, 0] = l[..., p] * l[..., q]
        out[..., 3 + i, 1] = m[..., p] * m[..., q]
        out[..., 3 + i, 2] = n[..., p] * n[..., q]
        out[..., 3 + i, 3] = m[..., p] * n[..., q] + m[..., q] * n[..., p]
        out[..., 3 + i, 4] = n[..., p] * l[..., q] + n[..., q] * l[..., p]
        out[..., 3 + i, 5] = m[..., p] * l[..., q] + m[..., q] * l[..., p]
    return out


def rotation_to_voigt(R: np.ndarray) -> np.ndarray:
    """Operator Rbar with D' = Rbar D Rbar^T for a cell whose local axes are the rows of R

    Vectorized over leading axes. Composition runs in reverse order:
    Rbar(R1 R2) = Rbar(R2) Rbar(R1), and Rbar(R^T) is the inverse of Rbar(R).
    """
    R = np.asarray(R, dtype=float)
    check_rotation(R)
    if R.shape[-1] == 3:
        return _rotation_3d(R)
    R3 = np.zeros(R.shape[:-2] + (3, 3))
    R3[..., :2, :2] = R
    R3[..., 2, 2] = 1.0
    return _rotation_3d(R3)[..., PLANE_INDICES, :][..., PLANE_INDICES]


def rotate_tensor(D: np.ndarray, R: np.ndarray) -> np.ndarray:
    Rbar = rotation_to_voigt(R)
    out = Rbar @ D @ np.swapaxes(Rbar, -1, -2)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def rotate_strain_to_global(eps_local: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Global engineering strain whose energy under rotate_tensor(D, R) equals the local one"""
    return np.swapaxes(rotation_to_voigt(np.swapaxes(R, -1, -2)), -1, -2) @ eps_local


def stress_to_matrix(sigma: np.ndarray) -> np.ndarray:
    """Symmetric tensor from engineering stress, vectorized over leading axes"""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[-1] == 3:
        s11, s22, s12 = sigma[..., 0], sigma[..., 1], sigma[..., 2]
        return np.stack([np.stack([s11, s12], -1), np.stack([s12, s22], -1)], -2)
    s11, s22, s33, s23, s31, s12 = (sigma[..., i] for i in range(6))
    return np.stack(
        [
            np.stack([s11, s12, s31], -1),
            np.stack([s12, s22, s23], -1),
            np.stack([s31, s23, s33], -1),
        ],
        -2,
    )


def strain_to_matrix(eps: np.ndarray) -> np.ndarray:
    eps = np.array(eps, dtype=float)
    q = eps.shape[-1]
    eps[..., (2 if q == 3 else slice(3, 6))] *= 0.5
    return stress_to_matrix(eps)
