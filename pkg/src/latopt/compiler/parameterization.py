from typing import List, Optional

import numpy as np

from latopt.common.util import get_child_logger
from latopt.compiler.graph import FrameGraph
from latopt.compiler.hierarchy import Hierarchy, build_hierarchy
from latopt.compiler.matching import anchor_to_lattice, edge_transforms, integer_translation_batch


def edge_labels(graph: FrameGraph, M: Optional[np.ndarray] = None) -> np.ndarray:
    """(m, k) integer translations t_ij of the stored edges from the current origins"""
    if M is None:
        M, _ = edge_transforms(graph)
    if not graph.n_edges:
        return np.zeros((0, graph.dim), dtype=np.int64)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return integer_translation_batch(graph.origins[i], graph.origins[j], M)


def edge_residuals(graph: FrameGraph, M: np.ndarray, t: np.ndarray) -> np.ndarray:
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return graph.origins[i] - graph.origins[j] - np.einsum('mab,mb->ma', M, t)


def parameterization_energy(
    graph: FrameGraph, M: Optional[np.ndarray] = None, t: Optional[np.ndarray] = None
) -> float:
    """Sum over vertices and their neighbours of ||p_i - (M_ij t_ij + p_j)||^2

    Every edge appears from both sides with the same squared residual.
    """
    if not graph.n_edges:
        return 0.0
    if M is None:
        M, _ = edge_transforms(graph)
    if t is None:
        t = edge_labels(graph, M)
    return 2.0 * float(np.sum(edge_residuals(graph, M, t) ** 2))


def greedy_coloring(graph: FrameGraph) -> np.ndarray:
    """Smallest free color per vertex in index order; adjacent vertices never share a color"""
    adj = graph.adjacency()
    colors = np.full(graph.n_vertices, -1, dtype=np.int64)
    for v in range(graph.n_vertices):
        used = set(colors[adj.indices[adj.indptr[v] : adj.indptr[v + 1]]].tolist())
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def random_origins(graph: FrameGraph, rng: np.random.Generator) -> np.ndarray:
    """Origins drawn uniformly inside the local unit cell around each position"""
    u = rng.uniform(-0.5, 0.5, size=graph.x.shape)
    return graph.x + np.einsum('nij,nj->ni', graph.unit_matrices(), u)


def anchor_origins(graph: FrameGraph) -> np.ndarray:
    if not graph.n_vertices:
        return graph.origins
    return anchor_to_lattice(graph.origins, graph.x, graph.unit_matrices())


def gauss_seidel_sweep(
    graph: FrameGraph,
    M: np.ndarray,
    colors: np.ndarray,
    frozen_labels: Optional[np.ndarray] = None,
    anchor: bool = True,
) -> np.ndarray:
    """One sweep over the color classes, updating graph.origins in place

    Each vertex moves to the mean of its neighbours' predictions p_j + M_ij t_ij,
    labels taken from the current origins unless frozen, then snaps to the
    lattice point nearest its position. Vertices without neighbours only snap.
    """
    p = graph.origins
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    unit = graph.unit_matrices()
    k = graph.dim
    for color in range(int(colors.max(initial=-1)) + 1):
        members = colors == color
        at_i = members[i]
        at_j = members[j]
        # labels only for the edges touching this color class
        touched = at_i | at_j
        if frozen_labels is None:
            t = integer_translation_batch(p[i[touched]], p[j[touched]], M[touched])
        else:
            t = frozen_labels[touched]
        step = np.zeros((len(i), k))
        step[touched] = np.einsum('mab,mb->ma', M[touched], t)
        sums = np.zeros((graph.n_vertices, k))
        counts = np.zeros(graph.n_vertices)
        # predictions for i from j and for j from i
        np.add.at(sums, i[at_i], p[j[at_i]] + step[at_i])
        np.add.at(counts, i[at_i], 1.0)
        np.add.at(sums, j[at_j], p[i[at_j]] - step[at_j])
        np.add.at(counts, j[at_j], 1.0)

        moved = members & (counts > 0)
        p[moved] = sums[moved] / counts[moved, None]
        if anchor and np.any(members):
            p[members] = anchor_to_lattice(p[members], graph.x[members], unit[members])
    return p


def relax(
    graph: FrameGraph,
    iterations: int,
    logger=None,
    level: int = 0,
) -> List[float]:
    """Run `iterations` anchored sweeps on graph.origins; returns the energy after each"""
    if not graph.n_edges:
        graph.origins = anchor_origins(graph)
        return [0.0] * iterations
    M, _ = edge_transforms(graph)
    colors = greedy_coloring(graph)
    energies = []
    for _ in range(iterations):
        gauss_seidel_sweep(graph, M, colors)
        energies.append(parameterization_energy(graph, M))
    if logger is not None and energies:
        logger.info(
            f'level {level}: {graph.n_vertices} vertices, energy {energies[0]:.4g} -> {energies[-1]:.4g}'
        )
    return energies


def optimize_parameterization(
    graph: FrameGraph,
    iterations: Optional[int] = None,
    seed=0,
    hierarchy: Optional[Hierarchy] = None,
) -> FrameGraph:
    """Hierarchical local parameterization of one graph

    Random origins on the coarsest level, sweeps on every level, prolongation
    by copying the coarse origin and snapping it near the fine position.
    `seed` is an int or a numpy SeedSequence.
    """
    logger = get_child_logger('latopt.compiler.parameterization')
    graph = graph.copy()
    if not graph.n_vertices:
        graph.origins = np.zeros((0, graph.dim))
        return graph
    if iterations is None:
        iterations = 50 if graph.dim == 2 else 200
    if hierarchy is None:
        hierarchy = build_hierarchy(graph)
    else:
        # relax private copies, the caller keeps its levels untouched
        hierarchy = Hierarchy([graph] + [g.copy() for g in hierarchy.levels[1:]], hierarchy.maps)
    rng = np.random.default_rng(seed)

    coarsest = hierarchy.levels[-1]
    coarsest.origins = random_origins(coarsest, rng)
    coarsest.origins = anchor_origins(coarsest)
    relax(coarsest, iterations, logger, hierarchy.depth - 1)
    for level in range(hierarchy.depth - 2, -1, -1):
        fine = hierarchy.levels[level]
        fine.origins = hierarchy.levels[level + 1].origins[hierarchy.maps[level]].copy()
        fine.origins = anchor_origins(fine)
        relax(fine, iterations, logger, level)

    graph.origins = hierarchy.levels[0].origins.copy()
    return graph
