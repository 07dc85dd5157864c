import numpy as np
import pytest
from scipy import sparse
from scipy.sparse import linalg as spla
from latopt.common.errors import GeometryError
from latopt.fea.element import QuadElement
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization import CellDiscretization, cell_solid_fraction, homogenize_cell
from latopt.homogenization.cell import periodic_element_dofs
from latopt.homogenization.voigt import isotropic_stiffness


def tiled_homogenization(mask, spec, void_stiffness):
    """Effective tensor of a 2x2 tiling, solved on the open node grid with periodicity imposed by P"""
    mask = np.tile(mask, (2, 2))
    NY, NX = mask.shape
    elem = QuadElement(2, 1.0)
    Ke = elem.stiffness(isotropic_stiffness(spec.base_E, spec.base_nu))
    scale = np.where(mask.ravel(), 1.0, void_stiffness)

    ey, ex = np.divmod(np.arange(NX * NY), NX)
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    nodes = np.stack([(ey + dy) * (NX + 1) + ex + dx for dx, dy in corners], axis=1)
    edof = (2 * nodes[:, :, None] + np.arange(2)).reshape(-1, 8)
    n_full = 2 * (NX + 1) * (NY + 1)
    rows = np.repeat(edof, 8, axis=1).ravel()
    cols = np.tile(edof, (1, 8)).ravel()
    K = sparse.coo_matrix(
        ((scale[:, None, None] * Ke[None]).ravel(), (rows, cols)), shape=(n_full, n_full)
    ).tocsr()

    iy, ix = np.divmod(np.arange((NX + 1) * (NY + 1)), NX + 1)
    reduced = (iy % NY) * NX + ix % NX
    P = sparse.coo_matrix(
        (np.ones(n_full), (np.arange(n_full), (2 * reduced[:, None] + np.arange(2)).ravel())),
        shape=(n_full, 2 * NX * NY),
    ).tocsr()[:, 2:]

    u0 = np.zeros((n_full, 3))
    u0[0::2, 0] = ix
    u0[1::2, 1] = iy
    u0[0::2, 2] = 0.5 * iy
    u0[1::2, 2] = 0.5 * ix
    A = (P.T @ K @ P).tocsc()
    chi = spla.spsolve(A, -(P.T @ (K @ u0)))
    U = u0 + P @ chi
    return U.T @ (K @ U) / (NX * NY)


def test_solid_cell_is_isotropic():
    spec = UnitCellSpec(l=2.0, t=1.0)
    D = homogenize_cell(np.array([1.0, 1.0]), spec, CellDiscretization(resolution=16))
    assert np.allclose(D, isotropic_stiffness(1.0, 0.3), atol=1e-9)


def test_matches_tiled_periodic_solve(cell_spec):
    disc = CellDiscretization(resolution=20)
    alpha = np.array([1.5, 1.0])
    D = homogenize_cell(alpha, cell_spec, disc)
    D_ref = tiled_homogenization(disc.solid_mask(alpha, cell_spec), cell_spec, disc.void_stiffness)
    assert np.allclose(D, D_ref, rtol=0, atol=1e-6 * np.abs(D_ref).max())


def test_voigt_bound(cell_spec):
    disc = CellDiscretization(resolution=16)
    alpha = np.array([2.0, 1.25])
    D = homogenize_cell(alpha, cell_spec, disc)
    f = cell_solid_fraction(alpha, cell_spec, disc)
    bound = (f + (1 - f) * disc.void_stiffness) * isotropic_stiffness(1.0, 0.3)
    assert np.all(np.linalg.eigvalsh(bound - D) > -1e-9)
    assert np.all(np.linalg.eigvalsh(D) > 0)


def test_mirror_symmetry(cell_spec):
    disc = CellDiscretization(resolution=16)
    D = homogenize_cell(np.array([1.0, 1.5]), cell_spec, disc)
    D_swapped = homogenize_cell(np.array([1.5, 1.0]), cell_spec, disc)
    P = [1, 0, 2]
    assert np.allclose(D[P][:, P], D_swapped, rtol=0, atol=1e-8 * np.abs(D).max())


def test_solid_fraction_matches_closed_form(cell_spec):
    disc = CellDiscretization(resolution=20)
    # 2 wall layers of 20 (x) and 40 (y) elements
    assert cell_solid_fraction([1.0, 2.0], cell_spec, disc) == pytest.approx(1 - 0.8 * 0.9)


def test_periodic_element_dofs():
    edof = periodic_element_dofs(3, 2)
    # last element (2, 1) wraps to nodes (2,1) (0,1) (0,0) (2,0)
    assert edof[5].tolist() == [10, 11, 6, 7, 0, 1, 4, 5]


def test_invalid_discretization(cell_spec):
    with pytest.raises(GeometryError):
        CellDiscretization(resolution=8)
    with pytest.raises(GeometryError):
        CellDiscretization(resolution=16).wall_layers(UnitCellSpec(l=20.0, t=1.0))
    with pytest.raises(GeometryError):
        homogenize_cell(np.array([1.0, 1.0, 1.0]), cell_spec, CellDiscretization(16))
