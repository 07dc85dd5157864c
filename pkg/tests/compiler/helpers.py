import numpy as np
from latopt.compiler.graph import FrameGraph


def grid_graph(nx, ny, spacing=1.0, h=1.0, frame=None, diagonals=False, origins=None):
    """Vertices on an nx x ny grid with 4-neighbour (and optionally diagonal) edges"""
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    x = np.stack([ix, iy], axis=1) * spacing
    index = lambda i, j: j * nx + i
    edges = []
    for j in range(ny):
        for i in range(nx):
            if i + 1 < nx:
                edges.append((index(i, j), index(i + 1, j)))
            if j + 1 < ny:
                edges.append((index(i, j), index(i, j + 1)))
            if diagonals and i + 1 < nx and j + 1 < ny:
                edges.append((index(i, j), index(i + 1, j + 1)))
    frame = np.eye(2) if frame is None else frame
    n = nx * ny
    return FrameGraph(
        x, np.tile(frame, (n, 1, 1)), np.ones((n, 2)), np.array(edges), h, origins
    )
