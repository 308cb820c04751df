"""Writer/reader for the engine's RDTF tensor container.

Implemented here independently so the exporter depends on the wire
format, not on the engine package.  Layout (little-endian): magic
``RDTF``, version byte 1, ndim byte (1..4), ndim u32 dims, dtype byte
(0 = float32, 1 = uint8), then the row-major payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"RDTF"
VERSION = 1
_CODES = {np.dtype("<f4"): 0, np.dtype("u1"): 1}
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("u1")}


def write_tensor(arr: np.ndarray, path: str | Path) -> None:
    arr = np.asarray(arr)
    if arr.dtype == np.float32:
        code = 0
    elif arr.dtype == np.uint8:
        code = 1
    else:
        raise ValueError(f"RDTF stores float32 or uint8, got {arr.dtype}")
    if not 1 <= arr.ndim <= 4 or any(d < 1 for d in arr.shape):
        raise ValueError(f"bad dims {arr.shape}")
    header = MAGIC + bytes([VERSION, arr.ndim])
    header += b"".join(struct.pack("<I", d) for d in arr.shape)
    header += bytes([code])
    payload = np.ascontiguousarray(arr.astype(_DTYPES[code], copy=False)).tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC or blob[4] != VERSION:
        raise ValueError(f"{path}: not an RDTF v{VERSION} file")
    ndim = blob[5]
    end = 6 + 4 * ndim
    dims = struct.unpack("<%dI" % ndim, blob[6:end])
    dtype = _DTYPES[blob[end]]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = blob[end + 1 :]
    if len(payload) != expected:
        raise ValueError(f"{path}: payload {len(payload)} != expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()
