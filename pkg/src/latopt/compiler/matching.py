"""Frame matching and edge transforms between neighbouring vertices

Frames carry the lattice axes as columns. Because per-axis scales differ,
axes are never permuted: a neighbour's frame is matched by flipping the
signs of its columns, keeping det = +1.
"""
from typing import Optional, Tuple

import numpy as np

from latopt.common.errors import GeometryError

_FLIPS = {
    2: np.array([[1, 1], [-1, -1]], dtype=float),
    3: np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float),
}


def sign_flip_candidates(dim: int) -> np.ndarray:
    """(c, k) column sign patterns with det = +1, identity first"""
    try:
        return _FLIPS[dim]
    except KeyError:
        raise GeometryError(f'Frames must be 2D or 3D, got k={dim}')


def closest_matching_batch(Ri: np.ndarray, Rj: np.ndarray) -> np.ndarray:
    """(m, k) sign vectors r minimizing ||Ri - Rj diag(r)||_F per pair

    Ties go to the earlier candidate.
    """
    Ri = np.asarray(Ri, dtype=float)
    Rj = np.asarray(Rj, dtype=float)
    flips = sign_flip_candidates(Ri.shape[-1])
    # ||Ri - Rj r||^2 = const - 2 sum_a r_a <Ri[:, a], Rj[:, a]>
    column_dots = np.einsum('mia,mia->ma', Ri, Rj)
    score = column_dots @ flips.T
    return flips[np.argmax(score, axis=1)]


def closest_matching(
    Ri: np.ndarray, Rj: np.ndarray, Si: Optional[np.ndarray] = None, Sj: Optional[np.ndarray] = None
) -> np.ndarray:
    """Diagonal sign matrix r bringing frame Rj closest to Ri

    Scales take no part: only signs change, so axis a of j stays paired with axis a of i.
    """
    r = closest_matching_batch(np.asarray(Ri)[None], np.asarray(Rj)[None])[0]
    return np.diag(r)


def matching_distance(Ri: np.ndarray, Rj: np.ndarray, r: np.ndarray) -> float:
    r = np.diag(r) if np.ndim(r) == 2 else np.asarray(r)
    return float(np.linalg.norm(Ri - Rj * r))


def interpolate_frames_batch(
    Ri: np.ndarray, Si: np.ndarray, Rj: np.ndarray, Sj: np.ndarray, r: Optional[np.ndarray] = None
) -> np.ndarray:
    """(m, k, k) transforms M_ij = normalize(Ri + Rj r) diag((Si + Sj) / 2)

    Si, Sj are (m, k) per-axis unit lengths; directions and lengths blend separately.
    """
    if r is None:
        r = closest_matching_batch(Ri, Rj)
    directions = Ri + Rj * r[:, None, :]
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise GeometryError('Matched frames are antipodal, cannot blend their axes')
    return directions / norms * (0.5 * (Si + Sj))[:, None, :]


def interpolate_frames(
    Ri: np.ndarray, Si: np.ndarray, Rj: np.ndarray, Sj: np.ndarray, r: Optional[np.ndarray] = None
) -> np.ndarray:
    """Single-edge form of `interpolate_frames_batch`; S may be vectors or diagonal matrices"""
    Si, Sj = (np.diag(S) if np.ndim(S) == 2 else np.asarray(S, float) for S in (Si, Sj))
    r = None if r is None else (np.diag(r) if np.ndim(r) == 2 else np.asarray(r, float))[None]
    return interpolate_frames_batch(
        np.asarray(Ri, float)[None], Si[None], np.asarray(Rj, float)[None], Sj[None], r
    )[0]


def integer_translation_batch(pi: np.ndarray, pj: np.ndarray, M: np.ndarray) -> np.ndarray:
    """(m, k) int labels round(M^-1 (pi - pj))"""
    local = np.linalg.solve(M, (pi - pj)[..., None])[..., 0]
    return np.rint(local).astype(np.int64)


def integer_translation(pi: np.ndarray, pj: np.ndarray, M: np.ndarray) -> np.ndarray:
    return integer_translation_batch(
        np.asarray(pi, float)[None], np.asarray(pj, float)[None], np.asarray(M, float)[None]
    )[0]


def anchor_to_lattice(p: np.ndarray, x: np.ndarray, M: np.ndarray) -> np.ndarray:
    """p + M round(M^-1 (x - p)), the lattice point of (p, M) nearest x"""
    shift = np.rint(np.linalg.solve(M, (x - p)[..., None])[..., 0])
    return p + np.einsum('nij,nj->ni', M, shift)


def label_norm(t: np.ndarray) -> np.ndarray:
    """Number of nonzero components per label"""
    return np.count_nonzero(t, axis=-1)


def edge_transforms(graph) -> Tuple[np.ndarray, np.ndarray]:
    """(M, r) for every stored edge (i, j), i < j, taken from i's side

    The reverse transform is M_ji = M_ij diag(r), so t_ji = -diag(r) t_ij.
    """
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    unit = graph.h * graph.scales
    r = closest_matching_batch(graph.frames[i], graph.frames[j])
    M = interpolate_frames_batch(graph.frames[i], unit[i], graph.frames[j], unit[j], r)
    return M, r
