import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from latopt.fields.grid import GridDomain


class DensityFilter(object):
    """Linear cone filter over active elements, weights max(0, r - dist) normalized to 1

    Distances are measured in element widths between element centers.

    Properties:
        radius (float): filter radius in element widths
        H (sparse.csr_matrix): unnormalized weights
        Hs (np.ndarray): row sums of H
    """

    def __init__(self, domain: GridDomain, radius: float):
        super(DensityFilter, self).__init__()
        self.radius = float(radius)
        centers = domain.element_ijk().astype(float) + 0.5
        n = len(centers)

        tree = cKDTree(centers)
        pairs = tree.query_pairs(self.radius, output_type='ndarray')
        dist = np.linalg.norm(centers[pairs[:, 0]] - centers[pairs[:, 1]], axis=1)
        w = np.maximum(0.0, self.radius - dist)

        rows = np.concatenate([np.arange(n), pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([np.arange(n), pairs[:, 1], pairs[:, 0]])
        data = np.concatenate([np.full(n, self.radius), w, w])
        self.H = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        self.Hs = np.asarray(self.H.sum(axis=1)).ravel()

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Filter a (n,) or (n, k) field"""
        x = np.asarray(x, dtype=float)
        out = self.H @ x
        return out / (self.Hs if x.ndim == 1 else self.Hs[:, None])

    def apply_transpose(self, g: np.ndarray) -> np.ndarray:
        """Chain rule: gradient w.r.t. the raw field from the gradient w.r.t. the filtered one"""
        g = np.asarray(g, dtype=float)
        return self.H.T @ (g / (self.Hs if g.ndim == 1 else self.Hs[:, None]))


def density_filter(field: np.ndarray, radius: float, domain: GridDomain) -> np.ndarray:
    return DensityFilter(domain, radius).apply(field)


def heaviside_project(x: np.ndarray, beta: float, eta: float = 0.5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    den = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    return (np.tanh(beta * eta) + np.tanh(beta * (x - eta))) / den


def heaviside_grad(x: np.ndarray, beta: float, eta: float = 0.5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    den = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    return beta * (1.0 - np.tanh(beta * (x - eta)) ** 2) / den


class ContinuationSchedule(object):
    """Heaviside sharpness, multiplied by 2 every `every` iterations up to beta_max"""

    def __init__(self, beta_init: float = 1.0, beta_max: float = 32.0, every: int = 10):
        super(ContinuationSchedule, self).__init__()
        self.beta_init = float(beta_init)
        self.beta_max = float(beta_max)
        self.every = int(every)

    def beta(self, iteration: int) -> float:
        return min(self.beta_init * 2.0 ** (iteration // self.every), self.beta_max)

    def at_max(self, iteration: int) -> bool:
        return self.beta(iteration) >= self.beta_max
