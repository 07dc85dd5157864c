from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from latopt.common import serialization
from latopt.common.errors import FormatError, GeometryError

PROVENANCE_AXIS = 'axis'
PROVENANCE_RELABELED = 'relabeled-diagonal'


def normalize_edges(edges: np.ndarray) -> np.ndarray:
    """Sorted (i < j) unique edge rows, self-loops removed"""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    edges = np.sort(edges, axis=1)
    edges = edges[edges[:, 0] != edges[:, 1]]
    if not edges.size:
        return edges.reshape(0, 2)
    return np.unique(edges, axis=0)


class FrameGraph(object):
    """Input graph of the lattice compiler

    Properties:
        x (np.ndarray): (n, k) vertex positions
        frames (np.ndarray): (n, k, k) orthonormal frames, columns are the lattice axes
        scales (np.ndarray): (n, k) positive per-axis scales s
        edges (np.ndarray): (m, 2) vertex pairs, i < j
        h (float): target edge length, a unit step along axis a at vertex i is h * s[i, a]
        origins (Optional[np.ndarray]): (n, k) parameterization origins p
    """

    KIND = 'frame_graph'

    def __init__(
        self,
        x: np.ndarray,
        frames: np.ndarray,
        scales: np.ndarray,
        edges: np.ndarray,
        h: float,
        origins: Optional[np.ndarray] = None,
    ):
        super(FrameGraph, self).__init__()
        self.x = np.asarray(x, dtype=float)
        self.frames = np.asarray(frames, dtype=float)
        self.scales = np.asarray(scales, dtype=float)
        self.edges = normalize_edges(edges)
        self.h = float(h)
        self.origins = None if origins is None else np.asarray(origins, dtype=float)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.x.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def validate(self):
        n, k = self.x.shape
        if k not in (2, 3):
            raise GeometryError(f'Graph dimension must be 2 or 3, got {k}')
        if self.frames.shape != (n, k, k) or self.scales.shape != (n, k):
            raise GeometryError(
                f'Inconsistent vertex data: x {self.x.shape}, frames {self.frames.shape}, '
                f'scales {self.scales.shape}'
            )
        if self.origins is not None and self.origins.shape != (n, k):
            raise GeometryError(f'Origins shape {self.origins.shape} does not match x {self.x.shape}')
        if not self.h > 0:
            raise GeometryError(f'Target edge length must be positive, got {self.h}')
        if n and self.scales.min() <= 0:
            raise GeometryError('Vertex scales must be positive')
        if self.n_edges and (self.edges.min() < 0 or self.edges.max() >= n):
            raise GeometryError('Edge references a missing vertex')
        if n:
            err = np.abs(np.einsum('nji,njk->nik', self.frames, self.frames) - np.eye(k)).max()
            if err > 1e-8:
                raise GeometryError(f'Frames are not orthonormal, max error {err:.3e}')
            if np.any(np.linalg.det(self.frames) < 0):
                raise GeometryError('Frames must be right-handed (det = +1)')

    def adjacency(self) -> sparse.csr_matrix:
        n = self.n_vertices
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.n_edges, dtype=np.int8)
        return sparse.csr_matrix(
            (data, (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)
        )

    def components(self) -> Tuple[int, np.ndarray]:
        return connected_components(self.adjacency(), directed=False)

    def subgraph(self, vertices: np.ndarray) -> 'FrameGraph':
        vertices = np.asarray(vertices, dtype=np.int64)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[vertices] = np.arange(vertices.size)
        keep = (remap[self.edges[:, 0]] >= 0) & (remap[self.edges[:, 1]] >= 0)
        return FrameGraph(
            self.x[vertices],
            self.frames[vertices],
            self.scales[vertices],
            remap[self.edges[keep]],
            self.h,
            None if self.origins is None else self.origins[vertices],
        )

    def unit_matrices(self) -> np.ndarray:
        """Per-vertex M = R S with S = diag(h s)"""
        return self.frames * (self.h * self.scales)[:, None, :]

    def copy(self) -> 'FrameGraph':
        return FrameGraph(
            self.x.copy(),
            self.frames.copy(),
            self.scales.copy(),
            self.edges.copy(),
            self.h,
            None if self.origins is None else self.origins.copy(),
        )

    def to_bytes(self) -> bytes:
        payload = {
            'k': self.dim,
            'h': self.h,
            'x': serialization.pack_array(self.x),
            'frames': serialization.pack_array(self.frames),
            'scales': serialization.pack_array(self.scales),
            'edges': serialization.pack_array(self.edges),
        }
        if self.origins is not None:
            payload['origins'] = serialization.pack_array(self.origins)
        return serialization.to_bytes(FrameGraph.KIND, payload)

    @classmethod
    def from_bytes(cls, encoded: bytes) -> 'FrameGraph':
        payload = serialization.from_bytes(FrameGraph.KIND, encoded)
        try:
            graph = cls(
                serialization.unpack_array(payload['x']),
                serialization.unpack_array(payload['frames']),
                serialization.unpack_array(payload['scales']),
                serialization.unpack_array(payload['edges']),
                payload['h'],
                serialization.unpack_array(payload['origins']) if 'origins' in payload else None,
            )
        except KeyError as e:
            raise FormatError(f'Frame graph data misses {e}')
        if graph.dim != payload.get('k'):
            raise FormatError(f'Frame graph header says k={payload.get("k")}, data has {graph.dim}')
        graph.validate()
        return graph

    def save(self, path: str):
        path = Path(path)
        path.parent.mkdir(parents=1, exist_ok=1)
        path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> 'FrameGraph':
        try:
            encoded = Path(path).read_bytes()
        except OSError as e:
            raise FormatError(f'Cannot read frame graph {path}: {e}')
        return cls.from_bytes(encoded)


class LatticeGraph(object):
    """Output lattice: strut endpoints and struts

    Properties:
        vertices (np.ndarray): (n, k) positions
        edges (np.ndarray): (m, 2) vertex pairs, i < j, unique
        provenance (List[str]): per edge, 'axis' or 'relabeled-diagonal'
        diagnostics (Dict): extraction counters
    """

    def __init__(
        self,
        vertices: np.ndarray,
        edges: np.ndarray,
        provenance: Optional[List[str]] = None,
        diagnostics: Optional[Dict] = None,
    ):
        super(LatticeGraph, self).__init__()
        self.vertices = np.asarray(vertices, dtype=float).reshape(len(vertices), -1)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.provenance = (
            list(provenance) if provenance is not None else [PROVENANCE_AXIS] * len(self.edges)
        )
        self.diagnostics = diagnostics or {}

    @classmethod
    def empty(cls, dim: int = 2) -> 'LatticeGraph':
        return cls(np.zeros((0, dim)), np.zeros((0, 2), dtype=np.int64), [])

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def is_empty(self) -> bool:
        return self.n_edges == 0

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    def validate(self):
        if self.n_edges:
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise GeometryError('Lattice has self-loops')
            if len(np.unique(np.sort(self.edges, axis=1), axis=0)) != self.n_edges:
                raise GeometryError('Lattice has duplicate edges')
        if not np.all(np.isfinite(self.vertices)):
            raise GeometryError('Lattice has non-finite vertex positions')
        if len(self.provenance) != self.n_edges:
            raise GeometryError('Provenance does not match edge count')

    @staticmethod
    def merge(parts: List['LatticeGraph'], dim: int) -> 'LatticeGraph':
        vertices, edges, provenance = [], [], []
        diagnostics: Dict[str, int] = {}
        offset = 0
        for part in parts:
            vertices.append(part.vertices)
            edges.append(part.edges + offset)
            provenance.extend(part.provenance)
            offset += part.n_vertices
            for key, value in part.diagnostics.items():
                diagnostics[key] = diagnostics.get(key, 0) + value
        if not parts:
            return LatticeGraph.empty(dim)
        return LatticeGraph(
            np.concatenate(vertices).reshape(-1, dim),
            np.concatenate(edges).reshape(-1, 2),
            provenance,
            diagnostics,
        )

    def to_dict(self) -> Dict:
        return {
            'k': self.dim,
            'vertices': self.vertices.tolist(),
            'edges': self.edges.tolist(),
            'provenance': list(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: Dict) -> 'LatticeGraph':
        try:
            k = int(d['k'])
            vertices = np.asarray(d['vertices'], dtype=float).reshape(-1, k)
            return cls(vertices, np.asarray(d['edges'], dtype=np.int64), d['provenance'])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f'Invalid lattice data: {e}')
