"""Hot-loop kernels with a compiled fast path.

The reordering passes spend nearly all their time computing pairwise
similarity Hamming distances between bit columns.  A Cython extension
(`ousim._shd_cy`) provides a packed-popcount implementation; if it was
not built (or OUSIM_PURE_PYTHON=1 is set) a numpy fallback is used.
Both backends return identical values.
"""
from __future__ import annotations

import os

import numpy as np


def _pairwise_shd_numpy(bits: np.ndarray) -> np.ndarray:
    """Pairwise differing-row counts via a Gram matrix.

    d(i, j) = s_i + s_j - 2 * <c_i, c_j> for 0/1 columns.  float64 matmul
    is exact here (counts are far below 2**53).
    """
    x = np.ascontiguousarray(bits, dtype=np.float64)
    s = x.sum(axis=0)
    g = x.T @ x
    d = s[:, None] + s[None, :] - 2.0 * g
    d = np.rint(d).astype(np.int64)
    np.fill_diagonal(d, 0)
    return d


if os.environ.get("OUSIM_PURE_PYTHON") == "1":
    pairwise_shd = _pairwise_shd_numpy
    BACKEND = "python"
else:
    try:
        from ousim._shd_cy import pairwise_shd  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pairwise_shd = _pairwise_shd_numpy
        BACKEND = "python"
