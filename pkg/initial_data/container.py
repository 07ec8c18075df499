"""
Flat binary container and plain-text table for node fields.

Binary layout (all integers in the declared byte order):

    magic       4 bytes  b'HPFC'
    byteorder   1 byte   b'<' or b'>'
    version     u2
    order       u1       stencil order p
    dim         u1       active axes
    nr          u4       nodes per unit length
    meta_len    u4       length of the UTF-8 JSON metadata
    n_arrays    u4
    metadata    meta_len bytes
    per array:
        name_len u2, name (UTF-8), kind (1 byte: b'f' float64, b'b' bool,
        b'i' int64), ndim u1, shape u8 × ndim, payload in row-major order

Text table: '#'-prefixed key=value header lines, one line of column names
``name`` or ``name:i.j`` (flattened trailing indices), then one row per node.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from core.error_handler import ContainerFormatError

logger = logging.getLogger(__name__)

MAGIC = b'HPFC'
VERSION = 1
TABLE_MARKER = 'hardphase-table'

_KINDS = {b'f': np.float64, b'b': np.bool_, b'i': np.int64}

PathLike = Union[str, Path]


@dataclass
class Container:
    """
    :ivar arrays: named arrays with the node axis first
    :ivar metadata: JSON-serialisable run metadata
    """
    arrays: Dict[str, np.ndarray]
    dim: int
    nr: int
    order: int
    metadata: Dict[str, Any] = field(default_factory=dict)
    byteorder: str = '<'
    version: int = VERSION


def _kind_of(array: np.ndarray) -> bytes:
    if array.dtype == np.bool_:
        return b'b'
    if np.issubdtype(array.dtype, np.integer):
        return b'i'
    if np.iscomplexobj(array):
        raise ContainerFormatError("Complex arrays cannot be stored", context={'dtype': str(array.dtype)})
    return b'f'


def _uint(value: int, code: str, byteorder: str) -> bytes:
    return np.array(value, dtype=np.dtype(code).newbyteorder(byteorder)).tobytes()


def write_container(path: PathLike, container: Container) -> Path:
    """Write ``container`` to ``path``; returns the path written."""
    path = Path(path)
    bo = container.byteorder
    if bo not in ('<', '>'):
        raise ContainerFormatError("Byte order must be '<' or '>'", context={'byteorder': bo})
    meta = json.dumps(container.metadata, sort_keys=True, default=str).encode('utf-8')

    chunks = [
        MAGIC,
        bo.encode('ascii'),
        _uint(container.version, 'u2', bo),
        _uint(container.order, 'u1', bo),
        _uint(container.dim, 'u1', bo),
        _uint(container.nr, 'u4', bo),
        _uint(len(meta), 'u4', bo),
        _uint(len(container.arrays), 'u4', bo),
        meta,
    ]
    for name, value in container.arrays.items():
        array = np.ascontiguousarray(value)
        kind = _kind_of(array)
        encoded = name.encode('utf-8')
        chunks.append(_uint(len(encoded), 'u2', bo))
        chunks.append(encoded)
        chunks.append(kind)
        chunks.append(_uint(array.ndim, 'u1', bo))
        chunks.append(np.asarray(array.shape, dtype=np.dtype('u8').newbyteorder(bo)).tobytes())
        dtype = np.dtype(_KINDS[kind]).newbyteorder(bo)
        chunks.append(array.astype(dtype, copy=False).tobytes(order='C'))

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b''.join(chunks))
    logger.debug(f"Wrote container {path} with {len(container.arrays)} arrays")
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path
        self.byteorder = '<'

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise ContainerFormatError(
                "Container is truncated",
                context={'path': str(self.path), 'offset': self.pos, 'needed': count}
            )
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def uint(self, code: str) -> int:
        dtype = np.dtype(code).newbyteorder(self.byteorder)
        return int(np.frombuffer(self.take(dtype.itemsize), dtype=dtype)[0])


def read_container(path: PathLike) -> Container:
    """
    Read a binary container.

    :raises ContainerFormatError: on a bad magic, unknown version or
        truncated payload
    """
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic = reader.take(4)
    if magic != MAGIC:
        raise ContainerFormatError("Not a field container", context={'path': str(path), 'magic': repr(magic)})
    bo = reader.take(1).decode('ascii', errors='replace')
    if bo not in ('<', '>'):
        raise ContainerFormatError("Unknown byte order flag", context={'path': str(path), 'byteorder': bo})
    reader.byteorder = bo
    version = reader.uint('u2')
    if version > VERSION:
        raise ContainerFormatError(
            "Container version is newer than this reader",
            context={'path': str(path), 'version': version, 'supported': VERSION}
        )
    order = reader.uint('u1')
    dim = reader.uint('u1')
    nr = reader.uint('u4')
    meta_len = reader.uint('u4')
    n_arrays = reader.uint('u4')
    try:
        metadata = json.loads(reader.take(meta_len).decode('utf-8')) if meta_len else {}
    except ValueError as exc:
        raise ContainerFormatError("Container metadata is not valid JSON", context={'path': str(path), 'error': str(exc)})

    arrays = {}
    for _ in range(n_arrays):
        name = reader.take(reader.uint('u2')).decode('utf-8')
        kind = reader.take(1)
        if kind not in _KINDS:
            raise ContainerFormatError("Unknown array kind", context={'path': str(path), 'array': name, 'kind': repr(kind)})
        ndim = reader.uint('u1')
        shape_dtype = np.dtype('u8').newbyteorder(bo)
        shape = tuple(int(s) for s in np.frombuffer(reader.take(8 * ndim), dtype=shape_dtype))
        dtype = np.dtype(_KINDS[kind]).newbyteorder(bo)
        count = int(np.prod(shape, dtype=np.int64))
        payload = np.frombuffer(reader.take(count * dtype.itemsize), dtype=dtype)
        arrays[name] = payload.reshape(shape).astype(_KINDS[kind])
    if reader.pos != len(reader.data):
        raise ContainerFormatError(
            "Trailing bytes after the last array",
            context={'path': str(path), 'offset': reader.pos, 'size': len(reader.data)}
        )
    return Container(arrays=arrays, dim=dim, nr=nr, order=order, metadata=metadata, byteorder=bo, version=version)


def _columns(name: str, array: np.ndarray):
    trailing = array.shape[1:]
    if not trailing:
        return [name]
    return [f"{name}:{'.'.join(str(i) for i in idx)}" for idx in np.ndindex(*trailing)]


def write_table(path: PathLike, arrays: Dict[str, np.ndarray], header: Optional[Dict[str, Any]] = None) -> Path:
    """Write node arrays as a whitespace-separated table."""
    path = Path(path)
    names, blocks = [], []
    count = None
    for name, value in arrays.items():
        array = np.asarray(value, dtype=float)
        if count is None:
            count = array.shape[0]
        elif array.shape[0] != count:
            raise ContainerFormatError(
                "Table arrays disagree on the node count",
                context={'array': name, 'nodes': array.shape[0], 'expected': count}
            )
        names.extend(_columns(name, array))
        blocks.append(array.reshape(count, -1))
    lines = [f"# {TABLE_MARKER} v{VERSION}"]
    lines.extend(f"# {key}={value}" for key, value in (header or {}).items())
    lines.append(' '.join(names))
    table = np.hstack(blocks) if blocks else np.zeros((0, 0))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
        np.savetxt(handle, table, fmt='%.17g')
    return path


def read_table(path: PathLike):
    """
    Read a table written by :func:`write_table`.

    :return: (arrays, header) with header values kept as strings
    """
    path = Path(path)
    header: Dict[str, str] = {}
    columns = None
    with path.open('r', encoding='utf-8') as handle:
        for line in handle:
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith('#'):
                body = stripped.lstrip('#').strip()
                if '=' in body:
                    key, value = body.split('=', 1)
                    header[key.strip()] = value.strip()
                continue
            columns = stripped.split()
            break
        if columns is None:
            raise ContainerFormatError("Table has no column line", context={'path': str(path)})
        values = np.loadtxt(handle, ndmin=2)
    if values.size and values.shape[1] != len(columns):
        raise ContainerFormatError(
            "Row width does not match the column line",
            context={'path': str(path), 'columns': len(columns), 'width': values.shape[1]}
        )

    groups: Dict[str, list] = {}
    for position, column in enumerate(columns):
        name, _, index = column.partition(':')
        idx = tuple(int(i) for i in index.split('.')) if index else ()
        groups.setdefault(name, []).append((idx, position))
    arrays = {}
    for name, entries in groups.items():
        if entries[0][0] == ():
            arrays[name] = values[:, entries[0][1]].copy()
            continue
        shape = tuple(max(idx[k] for idx, _ in entries) + 1 for k in range(len(entries[0][0])))
        array = np.zeros((values.shape[0],) + shape)
        for idx, position in entries:
            array[(slice(None),) + idx] = values[:, position]
        arrays[name] = array
    return arrays, header
