"""Self-describing binary container for 4-D tensors.

Layout, all little-endian:

    bytes 0..3   magic "DWM1"
    u32          rank, always 4
    4 x u32      dims (N, C, H, W)
    u8           precision tag: 0 = binary32, 1 = binary64
    payload      elements, row-major N,C,H,W

The format is deliberately trivial so any language can read and write it
identically, and binary floats avoid text round-trip drift.
"""

import struct

import numpy as np

from .tensor import require_tensor4

MAGIC = b"DWM1"
_HEADER = struct.Struct("<4sI4IB")
_TAG_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_TO_TAG = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def write_tensor(path, tensor: np.ndarray) -> None:
    require_tensor4(tensor)
    tag = _DTYPE_TO_TAG.get(tensor.dtype)
    if tag is None:
        raise TypeError(f"only binary32/binary64 tensors can be stored, got {tensor.dtype}")
    header = _HEADER.pack(MAGIC, 4, *tensor.shape, tag)
    payload = np.ascontiguousarray(tensor).astype(_TAG_TO_DTYPE[tag], copy=False).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, rank, n, c, h, w, tag = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if rank != 4:
        raise ValueError(f"{path}: rank {rank} unsupported, expected 4")
    if tag not in _TAG_TO_DTYPE:
        raise ValueError(f"{path}: unknown precision tag {tag}")
    dtype = _TAG_TO_DTYPE[tag]
    count = n * c * h * w
    expected = _HEADER.size + count * dtype.itemsize
    if len(blob) != expected:
        raise ValueError(f"{path}: payload is {len(blob) - _HEADER.size} bytes, "
                         f"expected {count * dtype.itemsize}")
    data = np.frombuffer(blob, dtype=dtype, offset=_HEADER.size, count=count)
    return data.reshape(n, c, h, w).astype(dtype.newbyteorder("="), copy=True)
