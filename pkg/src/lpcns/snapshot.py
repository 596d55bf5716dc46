"""Binary field snapshots and flat key-value manifests.

Snapshot byte layout (all little-endian)::

    offset  size  type     content
    0       8     bytes    magic b"LPCNSNAP"
    8       4     uint32   format version (1)
    12      4     uint32   dim
    16      4     uint32   N (points per axis)
    20      4     uint32   components
    24      8     float64  time
    32      ...   float64  values, row-major over (components, N, ..., N)

Manifests are UTF-8 text, one ``key = value`` per line, ``#`` comments.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import RealField, TorusGrid

MAGIC = b"LPCNSNAP"
VERSION = 1
_HEADER = struct.Struct("<8sIIIId")
HEADER_SIZE = _HEADER.size


class SnapshotError(ValueError):
    """Malformed or truncated snapshot file."""


def encode_snapshot(f: RealField, time: float) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, f.grid.dim, f.grid.n, f.components, float(time))
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def decode_snapshot(data: bytes, grid: TorusGrid | None = None) -> tuple[RealField, float]:
    if len(data) < HEADER_SIZE:
        raise SnapshotError("truncated header")
    magic, version, dim, n, comps, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError("bad magic")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if dim not in (2, 3) or n < 8 or n & (n - 1) or comps not in (1, dim):
        raise SnapshotError(f"invalid header dim={dim} N={n} components={comps}")
    count = comps * n**dim
    if len(data) != HEADER_SIZE + 8 * count:
        raise SnapshotError(f"payload size {len(data) - HEADER_SIZE} != {8 * count}")
    if grid is None:
        grid = TorusGrid(dim, n)
    elif (grid.dim, grid.n) != (dim, n):
        raise SnapshotError(f"snapshot grid ({dim}, {n}) does not match ({grid.dim}, {grid.n})")
    values = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE, count=count)
    return RealField(grid, values.reshape((comps,) + grid.shape).astype(np.float64)), time


def write_snapshot(path, f: RealField, time: float) -> None:
    Path(path).write_bytes(encode_snapshot(f, time))


def read_snapshot(path, grid: TorusGrid | None = None) -> tuple[RealField, float]:
    return decode_snapshot(Path(path).read_bytes(), grid)


def read_header(path) -> dict:
    data = Path(path).read_bytes()[:HEADER_SIZE]
    if len(data) < HEADER_SIZE:
        raise SnapshotError("truncated header")
    magic, version, dim, n, comps, time = _HEADER.unpack(data)
    if magic != MAGIC:
        raise SnapshotError("bad magic")
    return {"version": version, "dim": dim, "n_per_axis": n, "components": comps, "time": time}


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ", ".join(format_value(float(x) if isinstance(x, (float, np.floating)) else x)
                         for x in v)
    return str(v)


def write_manifest(path, items: dict) -> None:
    lines = [f"{k} = {format_value(v)}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out
