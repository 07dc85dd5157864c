from typing import Dict

import msgpack
import numpy as np

from latopt.common.errors import FormatError

FORMAT_VERSION = 1


def pack_array(a: np.ndarray) -> Dict:
    a = np.ascontiguousarray(a)
    return {'dtype': a.dtype.str, 'shape': list(a.shape), 'data': a.tobytes()}


def unpack_array(d: Dict) -> np.ndarray:
    try:
        return np.frombuffer(d['data'], dtype=np.dtype(d['dtype'])).reshape(d['shape']).copy()
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f'Invalid packed array: {e}')


def to_bytes(kind: str, payload: Dict) -> bytes:
    """Serialize a payload using `MessagePack`, tagged with kind and format version"""
    return msgpack.packb({'kind': kind, 'version': FORMAT_VERSION, 'payload': payload})


def from_bytes(kind: str, encoded: bytes) -> Dict:
    """Restore a payload written by `to_bytes`

    Raises:
        FormatError: undecodable data, other kind or unsupported version
    """
    try:
        data = msgpack.unpackb(encoded)
    except Exception:
        raise FormatError(f'Invalid encoded {kind} data')

    if not isinstance(data, dict) or data.get('kind') != kind:
        found = data.get('kind') if isinstance(data, dict) else type(data).__name__
        raise FormatError(f'Expected {kind} data, found {found}')
    if data.get('version') != FORMAT_VERSION:
        raise FormatError(
            f'Unsupported {kind} format version {data.get("version")}, expected {FORMAT_VERSION}'
        )
    return data['payload']
