"""Weight/activation tensor loading, pruning, int8 quantization, bit planes.

File format ("OUFT", version 1, little-endian):

    magic   4 bytes  b"OUFT"
    version u16
    dtype   u8       0 = float32, 1 = int8
    rank    u8       1..4
    dims    u32 * rank
    payload row-major
    crc     u32      CRC32 of header + payload

`.npy` files are also accepted on read for convenience.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

MAGIC = b"OUFT"
VERSION = 1
BITS = 8  # weight/activation bit width; plane BITS-1 is the sign plane

_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("i1")}
_TAG_FOR_DTYPE = {np.dtype("<f4"): 0, np.dtype("i1"): 1}


class TensorFormatError(ValueError):
    """Raised for malformed tensor files."""


@dataclass(frozen=True)
class QuantizedTensor:
    """Signed 8-bit weight matrix with its quantization scale.

    sparsity is the exact fraction of zero entries.
    """

    values: np.ndarray  # int8, 2-D
    scale: float
    sparsity: float

    def __post_init__(self):
        v = self.values
        if v.dtype != np.int8 or v.ndim != 2:
            raise ValueError("values must be a 2-D int8 array")
        expect = float(np.count_nonzero(v == 0)) / v.size if v.size else 0.0
        if abs(expect - self.sparsity) > 1e-12:
            raise ValueError("sparsity does not match zero count")


@dataclass(frozen=True)
class BitPlaneSet:
    """Two's-complement bit planes, planes[i] holding bit i of every value."""

    planes: np.ndarray  # (BITS, m, n) uint8 of 0/1

    @property
    def shape(self):
        return self.planes.shape[1:]

    def reconstruct(self) -> np.ndarray:
        """Exact inverse of to_bit_planes (sign plane weighted -2**(B-1))."""
        p = self.planes.astype(np.int32)
        acc = -p[BITS - 1] * (1 << (BITS - 1))
        for i in range(BITS - 1):
            acc += p[i] << i
        return acc.astype(np.int8)


def flatten_to_matrix(arr: np.ndarray) -> np.ndarray:
    """Flatten rank>2 tensors to 2-D.

    Conv-style (out_ch, in_ch, kh, kw) becomes (kh*kw*in_ch) x out_ch so each
    filter is one column; rank 1 becomes a single column.
    """
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim == 2:
        return arr
    out_ch = arr.shape[0]
    return arr.reshape(out_ch, -1).T


def prune_magnitude(tensor: np.ndarray, target_sparsity: float) -> np.ndarray:
    """Zero the floor(target_sparsity * size) smallest-magnitude entries.

    Ties are broken by lowest (row, col) index so results are reproducible.
    """
    if tensor.size == 0:
        raise ValueError("empty input")
    if not 0.0 <= target_sparsity <= 1.0:
        raise ValueError("target_sparsity must be in [0, 1]")
    out = np.array(tensor, dtype=np.float64, copy=True)
    k = int(target_sparsity * out.size)
    if k == 0:
        return out
    # stable sort on flat |v|: equal magnitudes keep row-major order,
    # which is exactly the (row, col) lexicographic tie-break
    order = np.argsort(np.abs(out).ravel(), kind="stable")
    flat = out.ravel()
    flat[order[:k]] = 0.0
    return out


def quantize_i8(tensor: np.ndarray) -> QuantizedTensor:
    """Symmetric per-tensor quantization to signed 8-bit.

    scale = max|v| / 127; zeros map to zero exactly, so sparsity is preserved.
    An all-zero tensor gets scale 1.0.
    """
    if tensor.size == 0:
        raise ValueError("empty input")
    x = flatten_to_matrix(np.asarray(tensor, dtype=np.float64))
    amax = float(np.max(np.abs(x)))
    scale = amax / 127.0 if amax > 0.0 else 1.0
    q = np.clip(np.rint(x / scale), -128, 127).astype(np.int8)
    sparsity = float(np.count_nonzero(q == 0)) / q.size
    return QuantizedTensor(values=q, scale=scale, sparsity=sparsity)


def to_bit_planes(q: QuantizedTensor | np.ndarray) -> BitPlaneSet:
    """Decompose int8 values into 8 two's-complement bit planes."""
    values = q.values if isinstance(q, QuantizedTensor) else np.asarray(q, dtype=np.int8)
    u = values.view(np.uint8)
    planes = np.stack([(u >> i) & 1 for i in range(BITS)]).astype(np.uint8)
    return BitPlaneSet(planes=planes)


def save_tensor(path, arr: np.ndarray) -> None:
    """Write an array in the OUFT binary format."""
    arr = np.asarray(arr)
    if arr.dtype == np.float64 or arr.dtype == np.float32:
        arr = arr.astype("<f4")
    elif arr.dtype != np.int8:
        raise TensorFormatError(f"unsupported dtype {arr.dtype}")
    if not 1 <= arr.ndim <= 4:
        raise TensorFormatError("rank must be 1..4")
    tag = _TAG_FOR_DTYPE[arr.dtype]
    header = MAGIC + struct.pack("<HBB", VERSION, tag, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = np.ascontiguousarray(arr).tobytes()
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
        f.write(struct.pack("<I", crc))


def load_tensor(path) -> np.ndarray:
    """Read an OUFT file (or a .npy file) back into an array."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:6] == b"\x93NUMPY":
        return np.load(path)
    if blob[:4] != MAGIC:
        raise TensorFormatError("bad magic")
    if len(blob) < 12:
        raise TensorFormatError("truncated file")
    version, tag, rank = struct.unpack_from("<HBB", blob, 4)
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    if tag not in _DTYPE_TAGS:
        raise TensorFormatError(f"unknown dtype tag {tag}")
    if not 1 <= rank <= 4:
        raise TensorFormatError(f"bad rank {rank}")
    hdr_len = 8 + 4 * rank
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    dtype = _DTYPE_TAGS[tag]
    n = int(np.prod(dims))
    payload_len = n * dtype.itemsize
    if len(blob) != hdr_len + payload_len + 4:
        raise TensorFormatError("payload length does not match header")
    (crc,) = struct.unpack_from("<I", blob, hdr_len + payload_len)
    if zlib.crc32(blob[: hdr_len + payload_len]) & 0xFFFFFFFF != crc:
        raise TensorFormatError("checksum mismatch")
    arr = np.frombuffer(blob, dtype=dtype, count=n, offset=hdr_len)
    return arr.reshape(dims).copy()
