from typing import Dict, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from latopt.common.errors import GeometryError
from latopt.common.util import get_child_logger
from latopt.compiler.graph import (
    PROVENANCE_AXIS,
    PROVENANCE_RELABELED,
    FrameGraph,
    LatticeGraph,
    normalize_edges,
)
from latopt.compiler.matching import label_norm
from latopt.compiler.parameterization import edge_labels

MAX_COLLAPSE_ROUNDS = 8
FALLBACK_SPREAD = 0.5


def collapse_groups(graph: FrameGraph, t: np.ndarray) -> Tuple[int, np.ndarray]:
    """Union of the vertices joined by zero-label edges"""
    n = graph.n_vertices
    zero = graph.edges[label_norm(t) == 0]
    adj = sparse.csr_matrix(
        (np.ones(len(zero), dtype=np.int8), (zero[:, 0], zero[:, 1])), shape=(n, n)
    )
    return connected_components(adj, directed=False)


def collapse(graph: FrameGraph, t: np.ndarray, diagnostics: Dict) -> FrameGraph:
    """One vertex per group at the mean member origin, edges inherited and deduplicated

    Groups whose origins spread further than 0.5 h min(s) fall back to the mean position.
    """
    n_groups, group = collapse_groups(graph, t)
    counts = np.bincount(group, minlength=n_groups).astype(float)

    def mean(values):
        total = np.zeros((n_groups,) + values.shape[1:])
        np.add.at(total, group, values)
        return total / counts[:, None]

    origins = mean(graph.origins)
    x = mean(graph.x)
    scales = mean(graph.scales)

    spread = np.linalg.norm(graph.origins - origins[group], axis=1)
    max_spread = np.zeros(n_groups)
    np.maximum.at(max_spread, group, spread)
    min_scale = np.full(n_groups, np.inf)
    np.minimum.at(min_scale, group, graph.scales.min(axis=1))
    fallback = max_spread > FALLBACK_SPREAD * graph.h * min_scale
    origins[fallback] = x[fallback]
    diagnostics['position_fallbacks'] += int(fallback.sum())
    diagnostics['collapsed_vertices'] += graph.n_vertices - n_groups

    # frame of the lowest-index member
    first = np.full(n_groups, graph.n_vertices, dtype=np.int64)
    np.minimum.at(first, group, np.arange(graph.n_vertices))
    return FrameGraph(
        x, graph.frames[first], scales, normalize_edges(group[graph.edges]), graph.h, origins
    )


def incident_directions(graph: FrameGraph) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Both orientations of every edge with its nearest signed frame direction at the start vertex

    Returns (edge id, start vertex, direction id in [0, 2k), cosine to that direction).
    """
    k = graph.dim
    m = graph.n_edges
    start = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
    end = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    edge_id = np.concatenate([np.arange(m), np.arange(m)])
    vec = graph.origins[end] - graph.origins[start]
    length = np.linalg.norm(vec, axis=1)
    unit = vec / np.where(length > 0, length, 1.0)[:, None]
    # columns a and k + a are +axis a and -axis a
    dots = np.einsum('eia,ei->ea', graph.frames[start], unit)
    dots = np.concatenate([dots, -dots], axis=1)
    direction = np.argmax(dots, axis=1)
    cosine = dots[np.arange(len(start)), direction]
    return edge_id, start, direction, cosine


def select_edges(graph: FrameGraph, t: np.ndarray, diagnostics: Dict) -> np.ndarray:
    """Per edge provenance code: 0 dropped, 1 axis, 2 relabeled diagonal

    A signed direction at a vertex reached by no axis edge keeps the diagonal
    closest to it in angle.
    """
    norm = label_norm(t)
    keep = np.where(norm == 1, 1, 0)
    diagonal = norm >= 2
    if not np.any(diagonal):
        return keep

    n_dirs = 2 * graph.dim
    edge_id, start, direction, cosine = incident_directions(graph)
    slot = start * n_dirs + direction
    covered = np.zeros(graph.n_vertices * n_dirs, dtype=bool)
    covered[slot[norm[edge_id] == 1]] = True

    candidate = diagonal[edge_id] & ~covered[slot]
    if np.any(candidate):
        c_slot, c_cos, c_edge = slot[candidate], cosine[candidate], edge_id[candidate]
        order = np.lexsort((c_edge, -c_cos, c_slot))
        c_slot, c_edge = c_slot[order], c_edge[order]
        best = np.ones(len(c_slot), dtype=bool)
        best[1:] = c_slot[1:] != c_slot[:-1]
        keep[c_edge[best]] = 2
    diagnostics['relabeled_diagonals'] += int(np.sum(keep == 2))
    diagnostics['dropped_diagonals'] += int(np.sum(diagonal & (keep == 0)))
    return keep


def extract_lattice(graph: FrameGraph) -> LatticeGraph:
    """Lattice graph from an optimized parameterization

    Zero-label edges are collapsed (repeated while new ones appear), unit
    labels become struts, diagonals survive only where they are the sole
    representative of a signed frame direction at one of their ends.
    """
    logger = get_child_logger('latopt.compiler.extraction')
    if graph.origins is None:
        raise GeometryError('Graph has no parameterization origins')
    diagnostics = {
        'collapsed_vertices': 0,
        'position_fallbacks': 0,
        'relabeled_diagonals': 0,
        'dropped_diagonals': 0,
        'isolated_dropped': 0,
        'long_labels': 0,
        'collapse_rounds': 0,
    }
    if not graph.n_vertices:
        return LatticeGraph(np.zeros((0, graph.dim)), np.zeros((0, 2)), [], diagnostics)

    current = graph
    t = edge_labels(current)
    while np.any(label_norm(t) == 0) and diagnostics['collapse_rounds'] < MAX_COLLAPSE_ROUNDS:
        current = collapse(current, t, diagnostics)
        diagnostics['collapse_rounds'] += 1
        t = edge_labels(current)
    if np.any(label_norm(t) == 0):
        logger.warning(f'{int(np.sum(label_norm(t) == 0))} zero-label edges left after collapsing')

    diagnostics['long_labels'] = int(np.sum(np.abs(t).max(axis=1, initial=0) > 1))
    code = select_edges(current, t, diagnostics)
    kept = code > 0
    edges = current.edges[kept]
    provenance = np.where(code[kept] == 2, PROVENANCE_RELABELED, PROVENANCE_AXIS)

    used = np.zeros(current.n_vertices, dtype=bool)
    used[edges.ravel()] = True
    diagnostics['isolated_dropped'] = int(np.sum(~used))
    if diagnostics['isolated_dropped']:
        logger.warning(f'Dropped {diagnostics["isolated_dropped"]} isolated lattice vertices')
    if diagnostics['position_fallbacks']:
        logger.warning(
            f'{diagnostics["position_fallbacks"]} collapsed groups placed at their mean position'
        )
    remap = np.cumsum(used) - 1
    lattice = LatticeGraph(
        current.origins[used], remap[edges], provenance.tolist(), diagnostics
    )
    lattice.validate()
    logger.info(
        f'Extracted {lattice.n_vertices} vertices, {lattice.n_edges} struts '
        f'({diagnostics["relabeled_diagonals"]} relabeled diagonals)'
    )
    return lattice
