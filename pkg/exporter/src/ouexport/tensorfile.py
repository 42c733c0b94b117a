"""Minimal float32 writer for the toolchain's tensor file format.

Layout ("OUFT", version 1, little-endian): magic, u16 version, u8 dtype
tag (0 = float32), u8 rank, u32 dims, row-major payload, u32 CRC32 of
everything before it.  Kept dependency-free so the exporter works without
the consumer package installed.
"""
import struct
import zlib

import numpy as np

MAGIC = b"OUFT"
VERSION = 1
_F32_TAG = 0


def write_f32(path, arr):
    """Write a float32 array (rank 1..4) as a tensor file."""
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if not 1 <= arr.ndim <= 4:
        raise ValueError("rank must be 1..4")
    header = MAGIC + struct.pack("<HBB", VERSION, _F32_TAG, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.tobytes()
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
        f.write(struct.pack("<I", crc))
