import itertools

import numpy as np
import pytest

from ousim.tensorio import QuantizedTensor


def make_q(values: np.ndarray) -> QuantizedTensor:
    values = np.asarray(values, dtype=np.int8)
    return QuantizedTensor(
        values=values,
        scale=1.0,
        sparsity=float(np.count_nonzero(values == 0)) / values.size,
    )


def brute_force_max_pairs(bits: np.ndarray) -> int:
    """Maximum number of disjoint column pairs identical on *all* rows,
    by exhaustive search over pairings (use only for <= 6 columns)."""
    n = bits.shape[1]
    cols = list(range(n))

    def best(remaining):
        if len(remaining) < 2:
            return 0
        first = remaining[0]
        rest = remaining[1:]
        score = best(rest)  # leave `first` unpaired
        for j, other in enumerate(rest):
            if np.array_equal(bits[:, first], bits[:, other]):
                score = max(score, 1 + best(rest[:j] + rest[j + 1 :]))
        return score

    return best(cols)


def exhaustive_zero_rows(bits: np.ndarray, rows: np.ndarray, cols, ou_width: int) -> int:
    """Max number of removable all-zero OU row segments over all column
    permutations (use only for <= 8 columns)."""
    best = 0
    for perm in itertools.permutations(cols):
        removed = 0
        for start in range(0, len(perm), ou_width):
            group = list(perm[start : start + ou_width])
            seg = bits[np.ix_(rows, group)]
            removed += int(np.count_nonzero(~seg.any(axis=1)))
        best = max(best, removed)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
