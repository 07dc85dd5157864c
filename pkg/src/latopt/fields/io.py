import re
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from latopt.common.errors import FormatError
from latopt.fields.grid import DesignFields, GridDomain

FIELDS_HEADER = 'ix,iy,phi,alpha_x,alpha_y,theta'


def rotation_angle(R: np.ndarray) -> np.ndarray:
    """Angle of the first local axis, R rows being the axes"""
    return np.arctan2(R[..., 0, 1], R[..., 0, 0])


def rotation_from_angle(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], axis=-1), np.stack([-s, c], axis=-1)], axis=-2)


def write_fields_csv(path: str, domain: GridDomain, fields: DesignFields):
    """One row per active element with the fields that drive compilation

    phi is the projected lattice fraction, alpha the filtered scaling.
    """
    if domain.dim != 2:
        raise FormatError('Fields CSV is defined for 2D grids only')
    ijk = domain.element_ijk()
    table = np.column_stack(
        [ijk[:, 0], ijk[:, 1], fields.phi_bar, fields.alpha_tilde, rotation_angle(fields.R)]
    )
    path = Path(path)
    path.parent.mkdir(parents=1, exist_ok=1)
    np.savetxt(
        path,
        table,
        fmt=['%d', '%d', '%.17g', '%.17g', '%.17g', '%.17g'],
        delimiter=',',
        header=FIELDS_HEADER,
        comments='',
    )


def read_fields_csv(
    path: str, element_size: float = 1.0, shape: Optional[Tuple[int, int]] = None
) -> Tuple[GridDomain, DesignFields]:
    """Inverse of `write_fields_csv`; grid elements missing from the file are inactive

    Raw, filtered and projected fields of the result all equal the file values.
    """
    path = Path(path)
    try:
        with open(path) as f:
            header = f.readline().strip()
        table = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise FormatError(f'Cannot read fields file {path}: {e}')
    if header != FIELDS_HEADER:
        raise FormatError(f'Unexpected fields header "{header}" in {path}')
    if not len(table):
        raise FormatError(f'Fields file {path} has no rows')

    ij = table[:, :2].astype(np.int64)
    if shape is None:
        shape = (int(ij[:, 0].max()) + 1, int(ij[:, 1].max()) + 1)
    nx, ny = shape
    if ij.min() < 0 or ij[:, 0].max() >= nx or ij[:, 1].max() >= ny:
        raise FormatError(f'Element index outside the {nx}x{ny} grid in {path}')

    flat = ij[:, 0] + nx * ij[:, 1]
    if len(np.unique(flat)) != len(flat):
        raise FormatError(f'Duplicate element rows in {path}')
    mask = np.zeros(nx * ny, dtype=bool)
    mask[flat] = True
    domain = GridDomain((nx, ny), element_size, mask)

    # rows in active order
    order = np.argsort(flat)
    phi = table[order, 2]
    alpha = table[order, 3:5]
    R = rotation_from_angle(table[order, 5])
    return domain, DesignFields(phi, alpha, R, phi.copy(), alpha.copy(), phi.copy())


def write_pgm(path: str, domain: GridDomain, values: np.ndarray):
    """Binary grayscale image, one pixel per element, +y up; inactive elements are black"""
    if domain.dim != 2:
        raise FormatError('PGM export is defined for 2D grids only')
    image = np.zeros(domain.n_total)
    image[domain.active_indices] = np.clip(values, 0.0, 1.0)
    pixels = np.round(255 * image.reshape(domain.ny, domain.nx)[::-1]).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=1, exist_ok=1)
    with open(path, 'wb') as f:
        f.write(f'P5\n{domain.nx} {domain.ny}\n255\n'.encode('ascii'))
        f.write(pixels.tobytes())


def read_pgm(path: str) -> np.ndarray:
    """Pixel values in [0, 1], rows top to bottom"""
    data = Path(path).read_bytes()
    m = re.match(rb'P5\s+(\d+)\s+(\d+)\s+(\d+)\s', data)
    if not m:
        raise FormatError(f'{path} is not a binary PGM file')
    width, height, maxval = (int(g) for g in m.groups())
    pixels = np.frombuffer(data[m.end() : m.end() + width * height], dtype=np.uint8)
    return pixels.reshape(height, width) / float(maxval)
