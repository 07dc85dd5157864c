import itertools
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from latopt.common.errors import ValidationError
from latopt.common.util import get_child_logger
from latopt.compiler.graph import LatticeGraph
from latopt.fea.bc import BoundaryConditions
from latopt.fea.element import QuadElement
from latopt.fea.solver import assemble, element_dofs, solve_system
from latopt.fields.grid import GridDomain, UnitCellSpec
from latopt.homogenization.voigt import isotropic_stiffness


class ValidationResult(object):
    """Homogenized against full-resolution compliance of one lattice

    Properties:
        J_homog (float): compliance predicted on the design grid
        J_full (float): compliance of the rasterized lattice
        rel_diff (float): |J_full - J_homog| / J_homog
        passed (bool): rel_diff within tolerance
        resolution (Tuple[int, int]): raster size
        solid_fraction (float): solid share of the raster after island removal
        stats (Dict): islands removed, BC nodes snapped and dropped
    """

    def __init__(self, J_homog, J_full, tolerance, resolution, solid_fraction, stats):
        super(ValidationResult, self).__init__()
        self.J_homog = float(J_homog)
        self.J_full = float(J_full)
        self.rel_diff = abs(self.J_full - self.J_homog) / self.J_homog
        self.tolerance = float(tolerance)
        self.passed = bool(self.rel_diff <= self.tolerance)
        self.resolution = tuple(int(n) for n in resolution)
        self.solid_fraction = float(solid_fraction)
        self.stats = stats

    def to_dict(self) -> Dict:
        return {
            'J_homog': self.J_homog,
            'J_full': self.J_full,
            'rel_diff': self.rel_diff,
            'tolerance': self.tolerance,
            'passed': self.passed,
            'resolution': list(self.resolution),
            'solid_fraction': self.solid_fraction,
            'stats': dict(self.stats),
        }


def raster_factor(domain: GridDomain, factor: int, max_nx: int, max_ny: int) -> int:
    """Largest factor <= the requested one keeping the raster within max_nx x max_ny"""
    return max(1, min(int(factor), max_nx // domain.nx, max_ny // domain.ny))


def rasterize_lattice(
    lattice: LatticeGraph, shape: Tuple[int, int], pixel_size: float, width: float
) -> np.ndarray:
    """(ny, nx) bool raster, a pixel is solid when its center lies within width / 2 of a strut"""
    nx, ny = shape
    mask = np.zeros((ny, nx), dtype=bool)
    radius = 0.5 * width
    for i, j in lattice.edges:
        a, b = lattice.vertices[i], lattice.vertices[j]
        lo = np.floor((np.minimum(a, b) - radius) / pixel_size).astype(int)
        hi = np.ceil((np.maximum(a, b) + radius) / pixel_size).astype(int)
        x0, y0 = np.maximum(lo, 0)
        x1, y1 = np.minimum(hi, [nx, ny])
        if x1 <= x0 or y1 <= y0:
            continue
        cx = (np.arange(x0, x1) + 0.5) * pixel_size
        cy = (np.arange(y0, y1) + 0.5) * pixel_size
        px, py = np.meshgrid(cx, cy)
        d = b - a
        length2 = float(d @ d)
        s = np.zeros_like(px) if length2 == 0 else ((px - a[0]) * d[0] + (py - a[1]) * d[1]) / length2
        s = np.clip(s, 0.0, 1.0)
        dist2 = (px - a[0] - s * d[0]) ** 2 + (py - a[1] - s * d[1]) ** 2
        mask[y0:y1, x0:x1] |= dist2 <= radius ** 2
    return mask


def _node_ijk(node: np.ndarray, node_shape: Tuple[int, int]) -> np.ndarray:
    iy, ix = np.unravel_index(node, tuple(reversed(node_shape)))
    return np.stack([ix, iy], axis=-1)


def _fixed_components(bc: BoundaryConditions) -> Dict[Tuple[int, int], List[int]]:
    ret: Dict[Tuple[int, int], List[int]] = {}
    for dof in bc.fixed_dofs:
        node, comp = divmod(int(dof), bc.dim)
        ret.setdefault(tuple(_node_ijk(node, bc.node_shape).tolist()), []).append(comp)
    return ret


def _used_nodes(mask: np.ndarray) -> np.ndarray:
    """(ny + 1, nx + 1) bool, nodes touched by a solid pixel"""
    ny, nx = mask.shape
    used = np.zeros((ny + 1, nx + 1), dtype=bool)
    for dy, dx in itertools.product((0, 1), repeat=2):
        used[dy : dy + ny, dx : dx + nx] |= mask
    return used


class _Snapper(object):
    def __init__(self, used: np.ndarray, reach: float):
        super(_Snapper, self).__init__()
        self.used = used
        iy, ix = np.nonzero(used)
        self.nodes = np.stack([ix, iy], axis=1)
        self.tree = cKDTree(self.nodes) if len(self.nodes) else None
        self.reach = reach

    def __call__(self, ijk: Tuple[int, int]):
        ix, iy = ijk
        if self.used[iy, ix]:
            return (ix, iy), False
        if self.tree is None:
            return None, False
        dist, idx = self.tree.query([ix, iy])
        if dist > self.reach:
            return None, False
        return tuple(int(v) for v in self.nodes[idx]), True


def transfer_bc(
    bc: BoundaryConditions, fine: GridDomain, factor: int, mask: np.ndarray
) -> Tuple[BoundaryConditions, Dict]:
    """Supports and loads moved from design nodes to raster nodes

    Support segments between neighbouring design nodes are refined onto every
    raster node in between. Nodes off the solid snap to the nearest solid node
    within one design element; supports that cannot snap are dropped.
    """
    fixed = _fixed_components(bc)
    targets: Dict[Tuple[int, int], set] = {}
    for (ix, iy), comps in fixed.items():
        for dx, dy in ((1, 0), (0, 1)):
            shared = set(comps) & set(fixed.get((ix + dx, iy + dy), []))
            for step in range(factor + 1):
                node = (ix * factor + dx * step, iy * factor + dy * step)
                targets.setdefault(node, set()).update(shared)
        targets.setdefault((ix * factor, iy * factor), set()).update(comps)

    snap = _Snapper(_used_nodes(mask), float(factor))
    stats = {'snapped': 0, 'dropped_supports': 0}
    fine_bc = BoundaryConditions(fine)
    for node in sorted(targets):
        comps = sorted(targets[node])
        if not comps:
            continue
        moved, snapped = snap(node)
        if moved is None:
            stats['dropped_supports'] += 1
            continue
        stats['snapped'] += int(snapped)
        fine_bc.fix(np.array([moved]), comps)

    for node in bc.loaded_nodes():
        ijk = tuple(int(v) * factor for v in _node_ijk(node, bc.node_shape))
        moved, snapped = snap(ijk)
        if moved is None:
            raise ValidationError(f'Load at design node {ijk} has no solid raster node within reach')
        stats['snapped'] += int(snapped)
        fine_bc.load(np.array([moved]), bc.F[bc.dim * node : bc.dim * node + bc.dim])
    return fine_bc, stats


def _node_components(labels: np.ndarray, nodes: np.ndarray) -> set:
    """Raster component labels of the pixels around the given (ix, iy) nodes"""
    ny, nx = labels.shape
    found = set()
    for ix, iy in nodes:
        for px, py in itertools.product((ix - 1, ix), (iy - 1, iy)):
            if 0 <= px < nx and 0 <= py < ny and labels[py, px]:
                found.add(int(labels[py, px]))
    return found


def rasterize_and_validate(
    lattice: LatticeGraph,
    spec: UnitCellSpec,
    domain: GridDomain,
    bc: BoundaryConditions,
    J_homog: float,
    h: float,
    factor: int = 8,
    max_nx: int = 1024,
    max_ny: int = 512,
    tolerance: float = 0.1,
    plane_stress: bool = True,
    solver: str = 'direct',
    width: Optional[float] = None,
) -> ValidationResult:
    """Full-resolution FE compliance of the rasterized lattice against the homogenized value

    `h` is the physical target edge length; struts are 2 t h / l wide unless
    `width` is given.

    Raises:
        ValidationError: empty lattice, empty raster, or no connected load path
    """
    logger = get_child_logger('latopt.cli.validate')
    if lattice.dim != 2:
        raise ValidationError('Cross-validation rasterizes 2D lattices only')
    if lattice.is_empty():
        raise ValidationError('Cannot validate an empty lattice')
    factor = raster_factor(domain, factor, max_nx, max_ny)
    shape = (domain.nx * factor, domain.ny * factor)
    pixel = domain.element_size / factor
    width = 2.0 * spec.t * h / spec.l if width is None else width

    mask = rasterize_lattice(lattice, shape, pixel, width)
    if not mask.any():
        raise ValidationError('Rasterized lattice has no solid pixels')
    fine_all = GridDomain(shape, pixel)
    fine_bc, stats = transfer_bc(bc, fine_all, factor, mask)

    labels, n_labels = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    supported = _node_components(labels, _node_ijk(fine_bc.supported_nodes(), fine_bc.node_shape))
    loaded = _node_components(labels, _node_ijk(fine_bc.loaded_nodes(), fine_bc.node_shape))
    if not loaded or not loaded <= supported:
        raise ValidationError('Rasterized lattice has no connected load path to the supports')
    keep = np.isin(labels, sorted(supported))
    stats['islands_removed'] = n_labels - len(supported)
    if stats['islands_removed']:
        logger.warning(f'Removed {stats["islands_removed"]} floating raster islands')

    fine = GridDomain(shape, pixel, keep.ravel())
    elem = QuadElement(2, pixel)
    Ke = elem.stiffness(isotropic_stiffness(spec.base_E, spec.base_nu, 2, plane_stress))
    edof = element_dofs(fine)
    K = assemble(np.broadcast_to(Ke, (fine.n_active,) + Ke.shape), edof, fine_bc.n_dofs)
    state = solve_system(K, fine_bc.F, fine_bc.free_mask, edof, solver)
    J_full = state.compliance(fine_bc.F)

    result = ValidationResult(J_homog, J_full, tolerance, shape, keep.mean(), stats)
    log = logger.info if result.passed else logger.warning
    log(
        f'Validation at {shape[0]}x{shape[1]}: J_homog {J_homog:.5g}, J_full {J_full:.5g}, '
        f'difference {100 * result.rel_diff:.2f}%'
    )
    return result
