import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ousim.tensorio import (
    BITS,
    QuantizedTensor,
    TensorFormatError,
    flatten_to_matrix,
    load_tensor,
    prune_magnitude,
    quantize_i8,
    save_tensor,
    to_bit_planes,
)


class TestPrune:
    def test_half(self):
        x = np.array([[1.0, -0.1], [0.2, 3.0]])
        out = prune_magnitude(x, 0.5)
        assert np.array_equal(out, [[1.0, 0.0], [0.0, 3.0]])

    def test_zero_ratio_is_identity(self):
        x = np.array([[0.5, -2.0], [1.0, 0.25]])
        assert np.array_equal(prune_magnitude(x, 0.0), x)

    def test_tie_break_lexicographic(self):
        x = np.full((2, 2), 0.3)
        out = prune_magnitude(x, 0.25)
        assert out[0, 0] == 0.0
        assert np.count_nonzero(out == 0) == 1

    def test_tie_break_oracle(self, rng):
        # oracle: sort by (|v|, row, col), zero the first k
        x = rng.choice([0.1, 0.2, 0.3], size=(5, 4))
        k = int(0.4 * x.size)
        keyed = sorted(
            ((abs(x[r, c]), r, c) for r in range(5) for c in range(4))
        )
        expect = x.copy()
        for _, r, c in keyed[:k]:
            expect[r, c] = 0.0
        assert np.array_equal(prune_magnitude(x, 0.4), expect)

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="empty"):
            prune_magnitude(np.empty((0, 3)), 0.5)

    @given(
        arrays(np.float64, (6, 5), elements=st.floats(-10, 10, allow_nan=False)),
        st.floats(0, 1),
    )
    @settings(max_examples=50, deadline=None)
    def test_idempotent(self, x, ratio):
        once = prune_magnitude(x, ratio)
        assert np.array_equal(prune_magnitude(once, ratio), once)


class TestQuantize:
    def test_extreme(self):
        q = quantize_i8(np.array([[127.0, 0.0]]))
        assert q.scale == 1.0
        assert np.array_equal(q.values, [[127, 0]])

    def test_symmetric(self):
        q = quantize_i8(np.array([[-1.0, 1.0]]))
        assert np.array_equal(q.values, [[-127, 127]])
        assert q.scale == pytest.approx(1 / 127)

    def test_rounding(self):
        q = quantize_i8(np.array([[0.5, -0.25, 1.0]]))
        assert np.array_equal(q.values, [[64, -32, 127]])
        assert q.scale == pytest.approx(1 / 127)

    def test_all_zero(self):
        q = quantize_i8(np.zeros((3, 3)))
        assert q.scale == 1.0
        assert not q.values.any()

    @given(arrays(np.float64, (4, 6), elements=st.floats(-100, 100, allow_nan=False)))
    @settings(max_examples=100, deadline=None)
    def test_preserves_zero_positions(self, x):
        q = quantize_i8(x)
        assert np.all((x == 0) <= (q.values == 0))  # zeros stay zero
        in_sparsity = np.count_nonzero(x == 0) / x.size
        assert q.sparsity >= in_sparsity


class TestBitPlanes:
    def test_minus_128(self):
        planes = to_bit_planes(np.array([[-128]], dtype=np.int8)).planes
        assert planes[BITS - 1, 0, 0] == 1
        assert not planes[: BITS - 1].any()

    def test_zero_and_minus_one(self):
        planes = to_bit_planes(np.array([[0, -1]], dtype=np.int8)).planes
        assert not planes[:, 0, 0].any()
        assert planes[:, 0, 1].all()

    def test_round_trip_exhaustive(self):
        vals = np.arange(-128, 128, dtype=np.int8).reshape(16, 16)
        ps = to_bit_planes(vals)
        assert np.array_equal(ps.reconstruct(), vals)


class TestFlatten:
    def test_conv_filters_to_columns(self):
        w = np.zeros((16, 8, 3, 3))
        assert flatten_to_matrix(w).shape == (72, 16)

    def test_vector(self):
        assert flatten_to_matrix(np.zeros(5)).shape == (5, 1)


class TestTensorFile:
    def test_round_trip_f32(self, tmp_path, rng):
        arr = rng.normal(size=(3, 4, 5)).astype(np.float32)
        path = tmp_path / "t.ouft"
        save_tensor(path, arr)
        assert np.array_equal(load_tensor(path), arr)

    def test_round_trip_i8(self, tmp_path, rng):
        arr = rng.integers(-128, 128, size=(7, 9)).astype(np.int8)
        path = tmp_path / "t.ouft"
        save_tensor(path, arr)
        back = load_tensor(path)
        assert back.dtype == np.int8
        assert np.array_equal(back, arr)

    def test_npy_accepted(self, tmp_path):
        arr = np.arange(6, dtype=np.int8).reshape(2, 3)
        path = tmp_path / "t.npy"
        np.save(path, arr)
        assert np.array_equal(load_tensor(path), arr)

    def test_corrupt_checksum(self, tmp_path):
        path = tmp_path / "t.ouft"
        save_tensor(path, np.zeros((2, 2), dtype=np.int8))
        blob = bytearray(path.read_bytes())
        blob[12] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(TensorFormatError):
            load_tensor(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "t.ouft"
        save_tensor(path, np.zeros((2, 2), dtype=np.int8))
        path.write_bytes(path.read_bytes()[:-6])
        with pytest.raises(TensorFormatError):
            load_tensor(path)


def test_quantized_tensor_validates_sparsity():
    with pytest.raises(ValueError):
        QuantizedTensor(values=np.zeros((2, 2), dtype=np.int8), scale=1.0, sparsity=0.5)
