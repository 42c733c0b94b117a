import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ousim.arith import bit_serial_mac, shift_is_subtract, signed_mul_decomposed
from ousim.tensorio import to_bit_planes


def test_exhaustive_all_pairs():
    a = np.arange(-128, 128, dtype=np.int32)
    aa, bb = np.meshgrid(a, a)
    assert np.array_equal(signed_mul_decomposed(aa, bb), (aa * bb).astype(np.int32))


def test_sign_times_sign():
    assert signed_mul_decomposed(-128, -128) == 16384


def test_zero_input():
    for w in range(-128, 128):
        assert signed_mul_decomposed(0, w) == 0


def test_small_case():
    assert signed_mul_decomposed(-3, 5) == -15


def test_range_check():
    with pytest.raises(ValueError):
        signed_mul_decomposed(200, 1)


def test_subtract_rule():
    # only sign-with-magnitude combinations subtract
    assert not shift_is_subtract(7, 7)
    assert shift_is_subtract(7, 0)
    assert shift_is_subtract(0, 7)
    assert not shift_is_subtract(3, 4)


def _planes_for(weights):
    w = np.asarray(weights, dtype=np.int8).reshape(-1, 1)
    return to_bit_planes(w).planes[:, :, 0]


class TestBitSerialMac:
    def test_unit(self):
        assert bit_serial_mac(np.array([1], dtype=np.int8), _planes_for([1])) == 1

    def test_all_ones_planes(self):
        inputs = np.array([-1, -1], dtype=np.int8)
        assert bit_serial_mac(inputs, _planes_for([-1, -1])) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bit_serial_mac(np.array([1, 2], dtype=np.int8), _planes_for([1]))

    @given(
        st.lists(st.integers(-128, 127), min_size=1, max_size=16),
        st.lists(st.integers(-128, 127), min_size=1, max_size=16),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_dot_product(self, ins, ws):
        n = min(len(ins), len(ws))
        ins = np.array(ins[:n], dtype=np.int8)
        ws = np.array(ws[:n], dtype=np.int8)
        expect = int(ins.astype(np.int64) @ ws.astype(np.int64))
        assert bit_serial_mac(ins, _planes_for(ws)) == expect

    def test_random_bulk(self, rng):
        # exact equality across many random length-16 vectors
        for _ in range(200):
            ins = rng.integers(-128, 128, size=16).astype(np.int8)
            ws = rng.integers(-128, 128, size=16).astype(np.int8)
            expect = int(ins.astype(np.int64) @ ws.astype(np.int64))
            assert bit_serial_mac(ins, _planes_for(ws)) == expect

    def test_linearity_over_concatenation(self, rng):
        a_in = rng.integers(-128, 128, size=8).astype(np.int8)
        b_in = rng.integers(-128, 128, size=8).astype(np.int8)
        a_w = rng.integers(-128, 128, size=8).astype(np.int8)
        b_w = rng.integers(-128, 128, size=8).astype(np.int8)
        whole = bit_serial_mac(
            np.concatenate([a_in, b_in]), _planes_for(np.concatenate([a_w, b_w]))
        )
        parts = bit_serial_mac(a_in, _planes_for(a_w)) + bit_serial_mac(b_in, _planes_for(b_w))
        assert whole == parts
