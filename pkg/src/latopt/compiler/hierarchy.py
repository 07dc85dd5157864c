import math
from typing import List, Optional, Tuple

import numpy as np

from latopt.common.util import get_child_logger
from latopt.compiler.graph import FrameGraph, normalize_edges
from latopt.compiler.matching import closest_matching_batch


class Hierarchy(object):
    """Coarsened copies of a graph, finest first

    Properties:
        levels (List[FrameGraph]): levels[0] is the input graph
        maps (List[np.ndarray]): maps[l][v] is the vertex of levels[l + 1] containing vertex v of levels[l]
    """

    def __init__(self, levels: List[FrameGraph], maps: List[np.ndarray]):
        super(Hierarchy, self).__init__()
        self.levels = levels
        self.maps = maps

    @property
    def depth(self) -> int:
        return len(self.levels)

    def sizes(self) -> List[int]:
        return [g.n_vertices for g in self.levels]


def alignment_weights(graph: FrameGraph) -> np.ndarray:
    """Per edge sum_a r_a <R_i[:, a], R_j[:, a]> under the closest matching, k for equal frames"""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    Ri, Rj = graph.frames[i], graph.frames[j]
    r = closest_matching_batch(Ri, Rj)
    return np.einsum('mia,mia,ma->m', Ri, Rj, r)


def greedy_matching(graph: FrameGraph) -> np.ndarray:
    """Group id per vertex: best aligned edges matched first, leftovers join a matched neighbour"""
    n = graph.n_vertices
    group = np.full(n, -1, dtype=np.int64)
    if not graph.n_edges:
        return np.arange(n)
    order = np.argsort(-alignment_weights(graph), kind='stable')
    n_groups = 0
    for a, b in graph.edges[order]:
        if group[a] < 0 and group[b] < 0:
            group[a] = group[b] = n_groups
            n_groups += 1

    adj = graph.adjacency()
    for v in np.flatnonzero(group < 0):
        neighbours = adj.indices[adj.indptr[v] : adj.indptr[v + 1]]
        matched = np.sort(neighbours[group[neighbours] >= 0])
        if matched.size:
            group[v] = group[matched[0]]
        else:
            group[v] = n_groups
            n_groups += 1
    # renumber by first member so coarse ids follow fine ids
    _, first = np.unique(group, return_index=True)
    rank = np.empty(n_groups, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(n_groups)
    return rank[group]


def average_frames(frames: np.ndarray, group: np.ndarray, n_groups: int) -> np.ndarray:
    """Per group, the rotation nearest the sum of member frames matched to the first member"""
    k = frames.shape[-1]
    _, first = np.unique(group, return_index=True)
    reference = frames[first][group]
    r = closest_matching_batch(reference, frames)
    total = np.zeros((n_groups, k, k))
    np.add.at(total, group, frames * r[:, None, :])
    U, _, Vt = np.linalg.svd(total)
    R = U @ Vt
    flip = np.linalg.det(R) < 0
    U[flip, :, -1] *= -1
    R[flip] = U[flip] @ Vt[flip]
    return R


def coarsen(graph: FrameGraph) -> Tuple[FrameGraph, np.ndarray]:
    group = greedy_matching(graph)
    n_groups = int(group.max(initial=-1)) + 1
    counts = np.bincount(group, minlength=n_groups).astype(float)

    def mean(values):
        total = np.zeros((n_groups,) + values.shape[1:])
        np.add.at(total, group, values)
        return total / counts.reshape((-1,) + (1,) * (values.ndim - 1))

    coarse = FrameGraph(
        mean(graph.x),
        average_frames(graph.frames, group, n_groups),
        mean(graph.scales),
        normalize_edges(group[graph.edges]),
        graph.h,
    )
    return coarse, group


def build_hierarchy(graph: FrameGraph, max_levels: Optional[int] = None) -> Hierarchy:
    """Coarsen until one vertex per component remains or a level would not halve"""
    logger = get_child_logger('latopt.compiler.hierarchy')
    levels, maps = [graph], []
    while levels[-1].n_edges and (max_levels is None or len(levels) < max_levels):
        fine = levels[-1]
        coarse, mapping = coarsen(fine)
        if coarse.n_vertices > math.ceil(fine.n_vertices / 2):
            break
        levels.append(coarse)
        maps.append(mapping)
    logger.debug(f'Hierarchy sizes {[g.n_vertices for g in levels]}')
    return Hierarchy(levels, maps)
