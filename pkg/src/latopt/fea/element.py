import itertools

import numpy as np

from latopt.homogenization.voigt import voigt_size

GAUSS_1D = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def corner_offsets(dim: int) -> np.ndarray:
    """Element corners in local node order, see GridDomain.element_nodes"""
    if dim == 2:
        return np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
    return np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]
    )


def shape_gradients(xi: np.ndarray, size: float) -> np.ndarray:
    """dN_a/dx_d at local point xi in [0, 1]^k, shape (n_nodes, k)"""
    corners = corner_offsets(len(xi))
    # 1D factors: xi for corner coordinate 1, 1 - xi for 0, derivatives +1 / -1
    val = np.where(corners == 1, xi, 1.0 - xi)
    der = np.where(corners == 1, 1.0, -1.0)
    grads = np.empty(corners.shape)
    for d in range(len(xi)):
        others = np.prod(np.delete(val, d, axis=1), axis=1)
        grads[:, d] = der[:, d] * others / size
    return grads


def strain_displacement(xi: np.ndarray, size: float) -> np.ndarray:
    """B with rows in Voigt order, columns (u_x, u_y[, u_z]) per node"""
    dim = len(xi)
    dN = shape_gradients(xi, size)
    n_nodes = dN.shape[0]
    B = np.zeros((voigt_size(dim), dim * n_nodes))
    if dim == 2:
        B[0, 0::2] = dN[:, 0]
        B[1, 1::2] = dN[:, 1]
        B[2, 0::2] = dN[:, 1]
        B[2, 1::2] = dN[:, 0]
        return B
    for d in range(3):
        B[d, d::3] = dN[:, d]
    # shear rows 23, 31, 12
    for row, (i, j) in zip((3, 4, 5), ((1, 2), (2, 0), (0, 1))):
        B[row, i::3] = dN[:, j]
        B[row, j::3] = dN[:, i]
    return B


class QuadElement(object):
    """Bilinear square (trilinear cube) element with 2x2(x2) Gauss quadrature

    Properties:
        dim (int): 2 or 3
        size (float): edge length
        B_gp (np.ndarray): (n_gp, q, n_dof) strain-displacement matrices at Gauss points
        gauss_weights (np.ndarray): (n_gp,) weights including the Jacobian
        B_center (np.ndarray): (q, n_dof) strain-displacement matrix at the center
        basis (np.ndarray): (q, q, n_dof, n_dof), Ke(D) = sum_ab D_ab basis_ab
    """

    def __init__(self, dim: int = 2, size: float = 1.0):
        super(QuadElement, self).__init__()
        self.dim = dim
        self.size = float(size)

        points = np.array(list(itertools.product(GAUSS_1D, repeat=dim)))
        self.B_gp = np.stack([strain_displacement(xi, self.size) for xi in points])
        self.gauss_weights = np.full(len(points), self.size ** dim / len(points))
        self.B_center = strain_displacement(np.full(dim, 0.5), self.size)
        self.basis = np.einsum('g,gai,gbj->abij', self.gauss_weights, self.B_gp, self.B_gp)

    @property
    def n_dof(self) -> int:
        return self.B_center.shape[1]

    def stiffness(self, D: np.ndarray) -> np.ndarray:
        """Element stiffness for one (q, q) or many (n, q, q) tensors"""
        Ke = np.einsum('...ab,abij->...ij', D, self.basis)
        return 0.5 * (Ke + np.swapaxes(Ke, -1, -2))

    def rigid_modes(self) -> np.ndarray:
        """Translations, one column per axis"""
        n_nodes = self.n_dof // self.dim
        return np.kron(np.ones((n_nodes, 1)), np.eye(self.dim))


def element_stiffness(D: np.ndarray, elem: QuadElement) -> np.ndarray:
    return elem.stiffness(D)


def penalty(phi_bar: np.ndarray, p: float = 3.0, phi_min: float = 1e-9) -> np.ndarray:
    return phi_min + (1.0 - phi_min) * np.asarray(phi_bar, dtype=float) ** p


def penalty_grad(phi_bar: np.ndarray, p: float = 3.0, phi_min: float = 1e-9) -> np.ndarray:
    return p * (1.0 - phi_min) * np.asarray(phi_bar, dtype=float) ** (p - 1)


def penalized_stiffness(
    phi_bar: float, Ke: np.ndarray, p: float = 3.0, phi_min: float = 1e-9
) -> np.ndarray:
    """Power-law scaled stiffness, vectorized over a leading element axis"""
    scale = penalty(phi_bar, p, phi_min)
    return np.asarray(scale)[..., None, None] * Ke
