import hashlib
import itertools
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from latopt.common import config, serialization
from latopt.common.errors import FormatError, GeometryError
from latopt.common.util import get_child_logger
from latopt.fields.fractions import cell_volume_fraction, cell_volume_fraction_grad
from latopt.fields.grid import UnitCellSpec
from latopt.homogenization.cell import CellDiscretization, homogenize_cell
from latopt.homogenization.voigt import voigt_size

CLAMP_TOL = 1e-12
MIN_SAMPLES = 4


class ElasticityLookup(object):
    """Homogenized tensors sampled on a regular grid over the scaling box

    Properties:
        bounds (np.ndarray): (k, 2) per-axis [lo, hi]
        counts (List[int]): samples per axis
        entries (np.ndarray): (n_1, ..., n_k, q, q) tensors, axis a indexed by sample of alpha_a
        v_table (Optional[np.ndarray]): (n_1, ..., n_k) solid fractions, required in 3D
        clamp_count (int): number of queries clamped into the box
    """

    KIND = 'D_table'

    def __init__(
        self,
        bounds: np.ndarray,
        entries: np.ndarray,
        v_table: Optional[np.ndarray] = None,
        meta: Optional[Dict] = None,
    ):
        super(ElasticityLookup, self).__init__()
        self.bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        self.entries = np.asarray(entries, dtype=float)
        self.v_table = None if v_table is None else np.asarray(v_table, dtype=float)
        self.meta = meta or {}
        self.clamp_count = 0
        self._lock = threading.Lock()
        self._logger = get_child_logger('latopt.homogenization.lookup')
        self.validate()

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def counts(self) -> List[int]:
        return list(self.entries.shape[: self.dim])

    @property
    def samples(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.bounds, self.counts)]

    def validate(self):
        k = self.dim
        q = voigt_size(k)
        if k not in (2, 3):
            raise FormatError(f'Lookup dimension must be 2 or 3, got {k}')
        if self.entries.ndim != k + 2 or self.entries.shape[k:] != (q, q):
            raise FormatError(f'Lookup entries shape {self.entries.shape} does not fit k={k}')
        if min(self.counts) < 2 or np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise FormatError('Lookup sample grid must be strictly increasing on every axis')
        if self.v_table is not None and self.v_table.shape != tuple(self.counts):
            raise FormatError(f'Fraction table shape {self.v_table.shape} != {self.counts}')
        if k == 3 and self.v_table is None:
            raise FormatError('3D lookups must carry a solid fraction table')
        flat = self.entries.reshape(-1, q, q)
        if not np.allclose(flat, np.swapaxes(flat, 1, 2), rtol=0, atol=1e-12 * np.abs(flat).max()):
            raise FormatError('Lookup holds non-symmetric tensors')
        if np.linalg.eigvalsh(flat).min() <= 0:
            raise FormatError('Lookup holds tensors that are not positive definite')

    def _locate(self, alpha: np.ndarray):
        """Clamp, then per-axis cell index, local coordinate and inside flag"""
        clamped = np.clip(alpha, self.bounds[:, 0], self.bounds[:, 1])
        outside = np.abs(clamped - alpha) > CLAMP_TOL
        n_out = int(np.any(outside, axis=1).sum())
        if n_out:
            with self._lock:
                self.clamp_count += n_out
            self._logger.warning(
                f'{n_out} scaling queries outside the lookup box were clamped '
                f'(total {self.clamp_count})'
            )
        idx, w, step = [], [], []
        for a, s in enumerate(self.samples):
            i = np.clip(np.searchsorted(s, clamped[:, a], side='right') - 1, 0, len(s) - 2)
            h = s[i + 1] - s[i]
            idx.append(i)
            w.append((clamped[:, a] - s[i]) / h)
            step.append(h)
        return idx, w, step, outside

    def _blend(self, table: np.ndarray, alpha: np.ndarray, grad: bool):
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        idx, w, step, outside = self._locate(alpha)
        k = self.dim
        n = alpha.shape[0]
        tail = table.shape[k:]
        value = np.zeros((n,) + tail)
        deriv = np.zeros((n, k) + tail) if grad else None
        for corner in itertools.product((0, 1), repeat=k):
            factors = [w[a] if c else 1.0 - w[a] for a, c in enumerate(corner)]
            sample = table[tuple(idx[a] + c for a, c in enumerate(corner))]
            weight = np.prod(factors, axis=0)
            value += weight.reshape((n,) + (1,) * len(tail)) * sample
            if grad:
                for a, c in enumerate(corner):
                    others = np.prod([f for b, f in enumerate(factors) if b != a], axis=0)
                    dw = (1.0 if c else -1.0) / step[a] * others
                    deriv[:, a] += dw.reshape((n,) + (1,) * len(tail)) * sample
        if grad:
            # clamped axes are flat
            deriv[outside] = 0.0
        return value, deriv

    def interpolate(self, alpha: np.ndarray) -> np.ndarray:
        """Multilinear D(alpha); (k,) gives (q, q), (n, k) gives (n, q, q)"""
        single = np.ndim(alpha) == 1
        value, _ = self._blend(self.entries, alpha, grad=False)
        return value[0] if single else value

    def interpolate_grad(self, alpha: np.ndarray) -> np.ndarray:
        """dD/d(alpha_a) of the interpolant, (n, k, q, q)"""
        _, deriv = self._blend(self.entries, alpha, grad=True)
        return deriv

    def fraction(self, alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
        if self.v_table is None:
            return cell_volume_fraction(alpha, spec)
        value, _ = self._blend(self.v_table, alpha, grad=False)
        return value if np.ndim(alpha) > 1 else value[0]

    def fraction_grad(self, alpha: np.ndarray, spec: UnitCellSpec) -> np.ndarray:
        if self.v_table is None:
            return cell_volume_fraction_grad(alpha, spec)
        _, deriv = self._blend(self.v_table, alpha, grad=True)
        return deriv

    def to_bytes(self) -> bytes:
        payload = {
            'k': self.dim,
            'bounds': self.bounds.tolist(),
            'samples': self.counts,
            'entries': serialization.pack_array(self.entries),
            'meta': self.meta,
        }
        if self.v_table is not None:
            payload['v_table'] = serialization.pack_array(self.v_table)
        return serialization.to_bytes(ElasticityLookup.KIND, payload)

    @classmethod
    def from_bytes(cls, encoded: bytes) -> 'ElasticityLookup':
        payload = serialization.from_bytes(ElasticityLookup.KIND, encoded)
        try:
            lookup = cls(
                payload['bounds'],
                serialization.unpack_array(payload['entries']),
                serialization.unpack_array(payload['v_table']) if 'v_table' in payload else None,
                payload.get('meta'),
            )
        except KeyError as e:
            raise FormatError(f'Lookup data misses {e}')
        if lookup.dim != payload['k'] or lookup.counts != list(payload['samples']):
            raise FormatError('Lookup header does not match its entries')
        return lookup

    def save(self, path: str):
        path = Path(path)
        path.parent.mkdir(parents=1, exist_ok=1)
        path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> 'ElasticityLookup':
        try:
            encoded = Path(path).read_bytes()
        except OSError as e:
            raise FormatError(f'Cannot read lookup table {path}: {e}')
        return cls.from_bytes(encoded)


def interpolate_D(lookup: ElasticityLookup, alpha: np.ndarray) -> np.ndarray:
    return lookup.interpolate(alpha)


def _mirror(D: np.ndarray) -> np.ndarray:
    """Tensor of the cell with x and y exchanged"""
    P = np.array([1, 0, 2])
    return D[P][:, P]


def build_lookup(
    spec: UnitCellSpec,
    samples_per_axis: int,
    disc: CellDiscretization,
    threads: int = 1,
) -> ElasticityLookup:
    """Homogenize the cell on a linspace grid over [alpha_lo, alpha_hi]^2

    Cells with ax > ay are the mirror images of computed ones.
    """
    logger = get_child_logger('latopt.homogenization.lookup')
    if spec.dim != 2:
        raise GeometryError('In-process lookup construction is 2D only, ingest 3D tables from files')
    if samples_per_axis < MIN_SAMPLES:
        raise GeometryError(f'Need >= {MIN_SAMPLES} samples per axis, got {samples_per_axis}')

    s = np.linspace(spec.alpha_lo, spec.alpha_hi, samples_per_axis)
    pairs = [(i, j) for i in range(len(s)) for j in range(i, len(s))]

    def work(pair):
        i, j = pair
        return homogenize_cell(np.array([s[i], s[j]]), spec, disc)

    t0 = time.time()
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(pair) for pair in pairs]

    entries = np.zeros((len(s), len(s), 3, 3))
    for (i, j), D in zip(pairs, results):
        entries[i, j] = D
        entries[j, i] = _mirror(D)
    logger.info(
        f'Built {len(s)}x{len(s)} lookup ({len(pairs)} cells homogenized) '
        f'in {time.time() - t0:.1f}s'
    )
    meta = {'cell': spec.to_dict(), 'discretization': disc.to_dict()}
    return ElasticityLookup(spec.bounds(), entries, None, meta)


def lookup_digest(spec: UnitCellSpec, samples_per_axis: int, disc: CellDiscretization) -> str:
    key = {'cell': spec.to_dict(), 'discretization': disc.to_dict(), 'samples': samples_per_axis}
    return hashlib.sha1(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


def load_or_build_lookup(
    spec: UnitCellSpec,
    samples_per_axis: int,
    disc: CellDiscretization,
    threads: int = 1,
    working_dir: Optional[str] = None,
    use_cache: bool = True,
) -> ElasticityLookup:
    """Cached `build_lookup`, stored under the working dir's cache folder"""
    logger = get_child_logger('latopt.homogenization.lookup')
    path = config.cache_dir(working_dir).joinpath(
        f'D_table_{lookup_digest(spec, samples_per_axis, disc)}.msgpack'
    )
    if use_cache and path.exists():
        try:
            lookup = ElasticityLookup.load(path)
            logger.info(f'Loaded cached lookup {path}')
            return lookup
        except FormatError as e:
            logger.warning(f'Ignoring unreadable cached lookup {path}: {e}')

    lookup = build_lookup(spec, samples_per_axis, disc, threads)
    if use_cache:
        lookup.save(path)
        logger.info(f'Cached lookup at {path}')
    return lookup
