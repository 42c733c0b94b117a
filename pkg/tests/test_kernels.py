import subprocess
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ousim.kernels import BACKEND, _pairwise_shd_numpy, pairwise_shd


def _reference(bits):
    m, n = bits.shape
    d = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            d[i, j] = int(np.count_nonzero(bits[:, i] ^ bits[:, j]))
    return d


def test_backend_identified():
    assert BACKEND in ("cython", "python")


def test_small_example():
    bits = np.array([[0, 1, 1], [1, 1, 0], [0, 0, 0]], dtype=np.uint8)
    assert np.array_equal(pairwise_shd(bits), _reference(bits))


def test_empty_columns():
    bits = np.zeros((5, 0), dtype=np.uint8)
    assert pairwise_shd(bits).shape == (0, 0)


def test_single_column():
    bits = np.ones((9, 1), dtype=np.uint8)
    assert np.array_equal(pairwise_shd(bits), np.zeros((1, 1), dtype=np.int64))


def test_word_boundaries():
    # packed-popcount backends chunk rows into 64-bit words
    for m in (1, 63, 64, 65, 127, 128, 129):
        rng = np.random.default_rng(m)
        bits = rng.integers(0, 2, size=(m, 5), dtype=np.uint8)
        assert np.array_equal(pairwise_shd(bits), _reference(bits))


@given(
    hnp.arrays(
        np.uint8,
        st.tuples(st.integers(1, 40), st.integers(1, 12)),
        elements=st.integers(0, 1),
    )
)
@settings(max_examples=150, deadline=None)
def test_backends_agree(bits):
    fast = pairwise_shd(bits)
    slow = _pairwise_shd_numpy(bits)
    assert np.array_equal(fast, slow)
    assert np.array_equal(fast, fast.T)
    assert not fast.diagonal().any()


def test_pure_python_env_forces_fallback():
    code = (
        "from ousim.kernels import BACKEND; print(BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "OUSIM_PURE_PYTHON": "1"},
    )
    assert out.stdout.strip() == "python"
