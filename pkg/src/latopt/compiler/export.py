import json
from pathlib import Path
from typing import List

import numpy as np

from latopt.common.errors import FormatError
from latopt.compiler.graph import PROVENANCE_RELABELED, LatticeGraph
from latopt.fields.grid import UnitCellSpec


def strut_width(spec: UnitCellSpec, h: float) -> float:
    """Two neighbouring cell walls of thickness t, scaled from cell size l to edge length h"""
    return 2.0 * spec.t * h / spec.l


def write_lattice_json(path: str, lattice: LatticeGraph):
    Path(path).parent.mkdir(parents=1, exist_ok=1)
    data = lattice.to_dict()
    data['diagnostics'] = lattice.diagnostics
    with open(path, 'w') as f:
        json.dump(data, f, indent=1)


def read_lattice_json(path: str) -> LatticeGraph:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise FormatError(f'Cannot read lattice {path}: {e}')
    lattice = LatticeGraph.from_dict(data)
    lattice.diagnostics = data.get('diagnostics', {})
    lattice.validate()
    return lattice


def write_lattice_obj(path: str, lattice: LatticeGraph):
    """`v x y z` and 1-based `l i j` records; 2D lattices get z = 0"""
    vertices = lattice.vertices
    if lattice.dim == 2:
        vertices = np.hstack([vertices, np.zeros((lattice.n_vertices, 1))])
    lines = [f'# {lattice.n_vertices} vertices, {lattice.n_edges} struts']
    lines += [f'v {x:.9g} {y:.9g} {z:.9g}' for x, y, z in vertices]
    lines += [f'l {i + 1} {j + 1}' for i, j in lattice.edges]
    Path(path).parent.mkdir(parents=1, exist_ok=1)
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')


def write_lattice_svg(path: str, lattice: LatticeGraph, width: float, margin: float = 1.0):
    """Struts as round-capped lines of the given width, y axis pointing up"""
    if lattice.dim != 2:
        raise FormatError('SVG export needs a 2D lattice')
    if lattice.n_vertices:
        lo = lattice.vertices.min(axis=0) - margin
        hi = lattice.vertices.max(axis=0) + margin
    else:
        lo, hi = np.zeros(2), np.ones(2)
    size = hi - lo

    def to_svg(p):
        return p[0] - lo[0], hi[1] - p[1]

    svg_lines: List[str] = []
    svg_lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    svg_lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size[0]:.6f}" height="{size[1]:.6f}" '
        f'viewBox="0 0 {size[0]:.6f} {size[1]:.6f}">'
    )
    svg_lines.append(
        f'  <g fill="none" stroke="black" stroke-linecap="round" stroke-width="{width:.6f}">'
    )
    for (i, j), provenance in zip(lattice.edges, lattice.provenance):
        x1, y1 = to_svg(lattice.vertices[i])
        x2, y2 = to_svg(lattice.vertices[j])
        cls = ' class="relabeled"' if provenance == PROVENANCE_RELABELED else ''
        svg_lines.append(
            f'    <line x1="{x1:.6f}" y1="{y1:.6f}" x2="{x2:.6f}" y2="{y2:.6f}"{cls} />'
        )
    svg_lines.append('  </g>')
    svg_lines.append('</svg>')
    Path(path).parent.mkdir(parents=1, exist_ok=1)
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(svg_lines) + '\n')
