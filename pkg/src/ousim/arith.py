"""Exact two's-complement shift-and-add/subtract MAC arithmetic.

Golden reference for the crossbar simulator: a signed BxB multiply is the
sum of four partial products (sign*sign, sign*magnitude twice, and
magnitude*magnitude), of which only the two mixed sign/magnitude terms
are subtracted.
"""
from __future__ import annotations

import numpy as np

from .tensorio import BITS

_SIGN_W = 1 << (BITS - 1)  # 128
_MAG_MASK = _SIGN_W - 1  # 0x7f


def signed_mul_decomposed(input_val, weight_val):
    """Multiply two signed 8-bit values via the four-term decomposition.

    Accepts scalars or numpy arrays (broadcast).  Result is int32 and equals
    direct signed multiplication.
    """
    a = np.asarray(input_val, dtype=np.int32)
    b = np.asarray(weight_val, dtype=np.int32)
    if np.any(a < -128) or np.any(a > 127) or np.any(b < -128) or np.any(b > 127):
        raise ValueError("operands must be signed 8-bit")
    au = a & 0xFF
    bu = b & 0xFF
    a_sign = (au >> (BITS - 1)) & 1
    b_sign = (bu >> (BITS - 1)) & 1
    a_mag = au & _MAG_MASK
    b_mag = bu & _MAG_MASK
    term1 = a_sign * b_sign * (1 << (2 * (BITS - 1)))
    term2 = -a_sign * _SIGN_W * b_mag
    term3 = -b_sign * _SIGN_W * a_mag
    term4 = a_mag * b_mag
    out = (term1 + term2 + term3 + term4).astype(np.int32)
    if out.ndim == 0:
        return int(out)
    return out


def input_bit(values: np.ndarray, cycle: int) -> np.ndarray:
    """Bit `cycle` (LSB-first) of the two's-complement form of int8 values."""
    return (np.asarray(values, dtype=np.int8).view(np.uint8) >> cycle) & 1


def shift_is_subtract(plane: int, cycle: int) -> bool:
    """True when the partial sum at (weight plane, input cycle) is subtracted.

    Subtraction applies when exactly one of the two bits is a sign bit:
    the weight sign plane paired with input magnitude cycles, or the input
    sign cycle (the last one) paired with weight magnitude planes.
    """
    return (plane == BITS - 1) != (cycle == BITS - 1)


def bit_serial_mac(inputs: np.ndarray, weight_planes: np.ndarray) -> int:
    """Bit-serial dot product of int8 inputs with per-plane weight bit columns.

    Inputs are streamed LSB-first over 8 cycles; weight_planes is (8, len)
    with plane 7 the sign plane.  Returns the exact signed dot product.
    """
    inputs = np.asarray(inputs, dtype=np.int8)
    weight_planes = np.asarray(weight_planes, dtype=np.uint8)
    if weight_planes.shape != (BITS, inputs.shape[0]):
        raise ValueError("length mismatch between inputs and weight planes")
    acc = 0
    for cycle in range(BITS):
        ib = input_bit(inputs, cycle).astype(np.int64)
        for plane in range(BITS):
            partial = int(ib @ weight_planes[plane].astype(np.int64))
            term = partial << (plane + cycle)
            acc += -term if shift_is_subtract(plane, cycle) else term
    return acc
