"""Binary tensor container for channel/observation batches and dictionaries.

Layout: magic (4 bytes), version u32, N u32, M u32, count u32, scale f64,
then count x 2 x N x M little-endian f32 planes in row-major order.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC_CHANNELS = b"NFWC"
MAGIC_OBSERVATIONS = b"NFWO"
MAGIC_DICTIONARY = b"NFWD"
VERSION = 1

_HEADER = struct.Struct("<4sIIIId")


def write_tensor_file(path, planes: np.ndarray, scale: float = 1.0, magic: bytes = MAGIC_CHANNELS):
    """planes: (count, 2, N, M) real array."""
    planes = np.asarray(planes)
    if planes.ndim != 4 or planes.shape[1] != 2:
        raise ValueError("planes must have shape (count, 2, N, M)")
    count, _, N, M = planes.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, VERSION, N, M, count, scale))
        fh.write(planes.astype("<f4").tobytes())


def read_tensor_file(path, expect_magic: bytes | None = None):
    """Returns (planes (count, 2, N, M) float32, scale, magic)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, N, M, count, scale = _HEADER.unpack(header)
        if expect_magic is not None and magic != expect_magic:
            raise ValueError(f"unexpected magic {magic!r}, want {expect_magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported tensor file version {version}")
        data = np.frombuffer(fh.read(4 * count * 2 * N * M), dtype="<f4")
    if data.size != count * 2 * N * M:
        raise ValueError("truncated tensor file")
    return data.reshape(count, 2, N, M).copy(), scale, magic


def write_complex_batch(path, batch: np.ndarray, scale: float = 1.0, magic: bytes = MAGIC_CHANNELS):
    """batch: (count, N, M) complex; stored as real/imag planes divided by scale."""
    planes = np.stack([batch.real, batch.imag], axis=1) / scale
    write_tensor_file(path, planes, scale=scale, magic=magic)


def read_complex_batch(path, expect_magic: bytes | None = None):
    """Returns (batch (count, N, M) complex, scale)."""
    planes, scale, _ = read_tensor_file(path, expect_magic)
    return (planes[:, 0] + 1j * planes[:, 1]) * scale, scale
