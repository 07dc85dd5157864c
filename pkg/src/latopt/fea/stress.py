from typing import Optional, Tuple

import numpy as np

from latopt.fea.element import QuadElement
from latopt.homogenization.voigt import stress_to_matrix

EPS_ISO = 1e-6


class PrincipalStress(object):
    """Element stress state and its principal decomposition

    Properties:
        sigma (np.ndarray): (n, q) engineering stress at element centers
        epsilon (np.ndarray): (n, q) engineering strain at element centers
        eigenvalues (np.ndarray): (n, k) ascending principal stresses
        R (np.ndarray): (n, k, k) rotations, rows are the principal directions
        degenerate (np.ndarray): (n,) bool, isotropic stress kept the previous rotation
    """

    def __init__(
        self,
        sigma: np.ndarray,
        epsilon: np.ndarray,
        eigenvalues: Optional[np.ndarray] = None,
        R: Optional[np.ndarray] = None,
        degenerate: Optional[np.ndarray] = None,
    ):
        super(PrincipalStress, self).__init__()
        self.sigma = sigma
        self.epsilon = epsilon
        self.eigenvalues = eigenvalues
        self.R = R
        self.degenerate = degenerate


def element_stress_strain(
    U: np.ndarray, D_e: np.ndarray, elem: QuadElement, edof: np.ndarray
) -> PrincipalStress:
    """Center-point strain B U_e and stress D_e eps for every element"""
    epsilon = np.einsum('ij,nj->ni', elem.B_center, U[edof])
    sigma = np.einsum('nij,nj->ni', D_e, epsilon)
    return PrincipalStress(sigma, epsilon)


def _sign_flips(dim: int) -> np.ndarray:
    """Row sign patterns that keep det = +1, identity first"""
    if dim == 2:
        return np.array([[1, 1], [-1, -1]], dtype=float)
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


def principal_directions_batch(
    sigma: np.ndarray, prev_R: Optional[np.ndarray] = None, eps_iso: float = EPS_ISO
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotations whose rows are principal directions, eigenvalues ascending

    Signs are fixed to det = +1 and chosen closest to prev_R. Elements whose
    eigenvalue spread is below eps_iso * max(1, |gamma_max|) keep prev_R.

    Returns:
        (R, eigenvalues, degenerate)
    """
    S = stress_to_matrix(sigma)
    n, k = S.shape[0], S.shape[-1]
    prev_R = np.tile(np.eye(k), (n, 1, 1)) if prev_R is None else np.asarray(prev_R, float)

    w, V = np.linalg.eigh(S)
    R = np.swapaxes(V, -1, -2).copy()
    flip = np.linalg.det(R) < 0
    R[flip, -1, :] *= -1

    flips = _sign_flips(k)
    candidates = flips[None, :, :, None] * R[:, None, :, :]
    dist = np.sum((candidates - prev_R[:, None]) ** 2, axis=(2, 3))
    R = candidates[np.arange(n), np.argmin(dist, axis=1)]

    degenerate = (w[:, -1] - w[:, 0]) < eps_iso * np.maximum(1.0, np.abs(w[:, -1]))
    R[degenerate] = prev_R[degenerate]
    return R, w, degenerate


def principal_directions(
    sigma: np.ndarray, prev_R: Optional[np.ndarray] = None, eps_iso: float = EPS_ISO
) -> np.ndarray:
    """Single-element form of `principal_directions_batch`; sigma is engineering or a matrix"""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 2:
        k = sigma.shape[0]
        sigma = (
            np.array([sigma[0, 0], sigma[1, 1], sigma[0, 1]])
            if k == 2
            else np.array(
                [sigma[0, 0], sigma[1, 1], sigma[2, 2], sigma[1, 2], sigma[2, 0], sigma[0, 1]]
            )
        )
    prev = None if prev_R is None else np.asarray(prev_R, float)[None]
    R, _, _ = principal_directions_batch(sigma[None], prev, eps_iso)
    return R[0]


def update_principal_stress(
    state: PrincipalStress, prev_R: np.ndarray, eps_iso: float = EPS_ISO
) -> PrincipalStress:
    state.R, state.eigenvalues, state.degenerate = principal_directions_batch(
        state.sigma, prev_R, eps_iso
    )
    return state
