import itertools

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from latopt.common.errors import EmptyShapeError, GeometryError
from latopt.common.util import get_child_logger
from latopt.compiler.graph import FrameGraph
from latopt.fields.grid import DesignFields, GridDomain

MAX_REFINE = 2


def threshold_shape(
    fields: DesignFields, domain: GridDomain, tau: float = 0.5
) -> np.ndarray:
    """Grid mask of active elements whose projected lattice fraction reaches tau

    Raises:
        EmptyShapeError: no element passes, nothing to compile
    """
    if not 0 < tau < 1:
        raise GeometryError(f'Threshold must lie in (0, 1), got {tau}')
    mask = np.zeros(domain.n_total, dtype=bool)
    mask[domain.active_indices] = fields.phi_bar >= tau
    if not mask.any():
        raise EmptyShapeError(
            f'No element reaches lattice fraction {tau} (max {fields.phi_bar.max():.3f})'
        )
    return mask


def half_neighbor_offsets(dim: int) -> np.ndarray:
    """One of each +/- pair of the 8 (2D) or 26 (3D) grid neighbor offsets"""
    offsets = [
        o
        for o in itertools.product((-1, 0, 1), repeat=dim)
        if any(o) and next(c for c in reversed(o) if c) > 0
    ]
    return np.array(offsets, dtype=np.int64)


def _fill_inactive(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Copy the nearest active value into inactive cells, values shaped like mask (+ trailing)"""
    if mask.all():
        return values
    _, nearest = ndimage.distance_transform_edt(~mask, return_indices=True)
    return values[tuple(nearest)]


def build_compilation_graph(
    fields: DesignFields, domain: GridDomain, mask: np.ndarray, refine: int = 1, h: float = 1.0
) -> FrameGraph:
    """Compiler input graph on the (refined) element centers inside mask

    Frames come from the rotation of the containing element, scales are
    multilinearly interpolated from the filtered scaling field.

    Args:
        mask (np.ndarray): bool per grid element, e.g. from `threshold_shape`
        refine (int): each element is split into 2**refine sub-elements per axis
        h (float): target lattice edge length, physical units
    """
    logger = get_child_logger('latopt.fields.shape')

    mask = np.asarray(mask, dtype=bool).ravel()
    if mask.size != domain.n_total or not mask.any():
        raise EmptyShapeError('Compilation mask is empty or does not match the grid')
    if np.any(mask & ~domain.active_mask):
        raise GeometryError('Compilation mask leaves the active domain')
    if refine not in range(MAX_REFINE + 1):
        raise GeometryError(f'Refinement level must be in 0..{MAX_REFINE}, got {refine}')

    dim = domain.dim
    sub = 2 ** refine
    es = domain.element_size
    grid_shape = domain.array_shape()

    # refined cells, slowest axis first like every per-element array
    fine_shape = tuple(n * sub for n in grid_shape)
    fine_mask = mask.reshape(grid_shape)
    for axis in range(dim):
        fine_mask = np.repeat(fine_mask, sub, axis=axis)

    vid = np.full(fine_shape, -1, dtype=np.int64)
    cells = np.argwhere(fine_mask)
    vid[tuple(cells.T)] = np.arange(len(cells))

    # (ix, iy[, iz]) order from here on
    fine_ijk = cells[:, ::-1]
    x = (fine_ijk + 0.5) * (es / sub)
    parent_ijk = fine_ijk // sub
    parent = np.ravel_multi_index(tuple(parent_ijk[:, ::-1].T), grid_shape)

    edges = []
    for offset in half_neighbor_offsets(dim):
        nb = fine_ijk + offset
        inside = np.all((nb >= 0) & (nb < np.array(fine_shape[::-1])), axis=1)
        src = np.flatnonzero(inside)
        dst = vid[tuple(nb[inside][:, ::-1].T)]
        ok = dst >= 0
        edges.append(np.stack([src[ok], dst[ok]], axis=1))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)

    frames = np.transpose(fields.R[domain.active_position[parent]], (0, 2, 1))

    alpha = np.zeros(grid_shape + (dim,))
    alpha.reshape(-1, dim)[domain.active_indices] = fields.alpha_tilde
    alpha = _fill_inactive(alpha, domain.active_mask.reshape(grid_shape))
    axes = []
    for axis, n in enumerate(grid_shape):
        if n == 1:
            # linear interpolation needs two samples per axis
            alpha = np.concatenate([alpha, alpha], axis=axis)
            axes.append(np.array([0.5, 1.5]) * es)
        else:
            axes.append((np.arange(n) + 0.5) * es)
    interp = RegularGridInterpolator(axes, alpha, method='linear')
    query = np.clip(x[:, ::-1], [a[0] for a in axes], [a[-1] for a in axes])
    scales = interp(query)

    logger.info(
        f'Compilation graph: {len(x)} vertices, {len(edges)} edges, refine {refine}, h {h}'
    )
    return FrameGraph(x, frames, scales, edges, h)
