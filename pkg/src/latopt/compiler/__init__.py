import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional, Tuple

import numpy as np

from latopt.common.util import get_child_logger
from latopt.compiler.extraction import extract_lattice
from latopt.compiler.graph import FrameGraph, LatticeGraph
from latopt.compiler.hierarchy import build_hierarchy
from latopt.compiler.parameterization import optimize_parameterization, parameterization_energy


class LatticeCompiler(object):
    """Field-aligned parameterization and lattice extraction, one connected component at a time

    Properties:
        seed (int): root seed, every component draws from its own spawned stream
        iterations (Optional[int]): sweeps per hierarchy level, 50 in 2D and 200 in 3D when None
        serial (bool): compile components one after another
        threads (int): worker threads otherwise
        timings (Dict): T_pre, T_posy, T_extr of the last compile, summed over components
        energy (float): parameterization energy of the last compile
    """

    def __init__(
        self, seed: int = 0, iterations: Optional[int] = None, serial: bool = False, threads: int = 4
    ):
        super(LatticeCompiler, self).__init__()
        self.seed = seed
        self.iterations = iterations
        self.serial = serial
        self.threads = max(1, int(threads))
        self.timings: Dict[str, float] = {}
        self.energy = 0.0
        self.logger = get_child_logger('latopt.compiler')

    def _compile_component(self, graph: FrameGraph, seed) -> Tuple[LatticeGraph, Dict, float]:
        t0 = time.time()
        hierarchy = build_hierarchy(graph)
        t1 = time.time()
        graph = optimize_parameterization(graph, self.iterations, seed, hierarchy)
        t2 = time.time()
        energy = parameterization_energy(graph)
        lattice = extract_lattice(graph)
        t3 = time.time()
        return lattice, {'T_pre': t1 - t0, 'T_posy': t2 - t1, 'T_extr': t3 - t2}, energy

    def compile(self, graph: FrameGraph) -> LatticeGraph:
        graph.validate()
        if not graph.n_vertices:
            self.timings = {'T_pre': 0.0, 'T_posy': 0.0, 'T_extr': 0.0}
            self.energy = 0.0
            return LatticeGraph.empty(graph.dim)
        n_components, labels = graph.components()
        seeds = np.random.SeedSequence(self.seed).spawn(max(n_components, 1))
        parts = [graph.subgraph(np.flatnonzero(labels == c)) for c in range(n_components)]
        self.logger.info(
            f'Compiling {graph.n_vertices} vertices, {graph.n_edges} edges in {n_components} components'
        )

        if self.serial or self.threads == 1 or n_components < 2:
            results = [self._compile_component(g, s) for g, s in zip(parts, seeds)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                results = list(executor.map(self._compile_component, parts, seeds))

        self.timings = {'T_pre': 0.0, 'T_posy': 0.0, 'T_extr': 0.0}
        for _, timing, _ in results:
            for key, value in timing.items():
                self.timings[key] += value
        self.energy = float(sum(energy for _, _, energy in results))
        lattice = LatticeGraph.merge([lattice for lattice, _, _ in results], graph.dim)
        lattice.validate()
        return lattice


def compile_frame_graph(
    graph: FrameGraph,
    seed: int = 0,
    iterations: Optional[int] = None,
    serial: bool = False,
    threads: int = 4,
) -> LatticeGraph:
    return LatticeCompiler(seed, iterations, serial, threads).compile(graph)
