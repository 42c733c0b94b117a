"""Closed-form and empirical bit-level statistics.

Covers the zero-bit ratio model, the identical-row binomial model for
column groups, the all-zero-row model at high sparsity, and seeded
Monte-Carlo validators for each.  The PRNG is numpy's default_rng
(PCG64); results are bit-reproducible per seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensorio import BITS, BitPlaneSet

# above this row count the exact-rational binomial sum gets slow;
# switch to log-domain evaluation (the two paths agree to 1e-12 relative)
_EXACT_M_LIMIT = 60


@dataclass(frozen=True)
class SimilarityModelParams:
    """Parameters of the identical-row model.

    m: column length (rows), n: group size, k: identical-row threshold,
    p: sparsity ratio (only used by the all-zero-row variant).
    """

    m: int
    n: int
    k: int
    p: float = 0.0

    def __post_init__(self):
        if self.m < 1 or self.n < 2 or not 0 <= self.k <= self.m:
            raise ValueError("require m >= 1, n >= 2, 0 <= k <= m")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")


def zero_bit_ratio(p: float) -> float:
    """Expected fraction of zero bits at sparsity p: 0.5*p + 0.5."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return 0.5 * p + 0.5


def measured_zero_bit_ratio(planes: BitPlaneSet) -> float:
    """Actual fraction of zero bits over all planes of a tensor."""
    total = planes.planes.size
    if total == 0:
        raise ValueError("empty planes")
    return 1.0 - float(planes.planes.sum()) / total


def identical_row_prob(n: int) -> float:
    """Probability that one row agrees (all 0s or all 1s) across n columns."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return 1.0 / (1 << (n - 1))


def _binom_tail_exact(m: int, k: int, prob: Fraction) -> float:
    total = Fraction(0)
    for i in range(k):
        total += math.comb(m, i) * prob**i * (1 - prob) ** (m - i)
    return float(1 - total)


def _binom_tail_log(m: int, k: int, prob: float) -> float:
    if prob <= 0.0:
        return 0.0 if k >= 1 else 1.0
    if prob >= 1.0:
        return 1.0
    logp = math.log(prob)
    logq = math.log1p(-prob)

    def logpmf(i):
        return (
            math.lgamma(m + 1)
            - math.lgamma(i + 1)
            - math.lgamma(m - i + 1)
            + i * logp
            + (m - i) * logq
        )

    # sum whichever side is smaller for accuracy
    if k - 1 < m * prob:
        s = sum(math.exp(logpmf(i)) for i in range(k))
        return max(0.0, 1.0 - s)
    return min(1.0, sum(math.exp(logpmf(i)) for i in range(k, m + 1)))


def binom_tail(m: int, k: int, prob) -> float:
    """P(X >= k) for X ~ Binomial(m, prob), numerically stable up to m ~ 1024."""
    if k <= 0:
        return 1.0
    if k > m:
        return 0.0
    if m <= _EXACT_M_LIMIT:
        return _binom_tail_exact(m, k, Fraction(prob))
    return _binom_tail_log(m, k, float(prob))


def prob_at_least_k_identical(params: SimilarityModelParams) -> float:
    """P(at least k identical rows among n random bit columns of length m)."""
    return binom_tail(params.m, params.k, Fraction(1, 1 << (params.n - 1)))


def prob_all_zero_rows(m: int, n: int, k: int, p: float) -> float:
    """P(at least k all-zero rows) with per-row success probability p**n."""
    params = SimilarityModelParams(m=m, n=n, k=k, p=p)
    return binom_tail(params.m, params.k, Fraction(p) ** n)


def expected_all_zero_rows(m: int, n: int, p: float) -> float:
    """E[number of all-zero rows] = m * p**n."""
    return m * p**n


def expected_identical_rows(m: int, n: int, p: float) -> float:
    """E[identical rows] counting both all-zero and all-one rows."""
    return m * (p**n + (1.0 - p) ** n)


def _mc_counts(params: SimilarityModelParams, trials: int, seed, chunk=20000):
    """Per-trial identical-row hit counts, chunked with spawned child seeds.

    Chunking keeps memory bounded and gives a fixed work partition so the
    result is identical no matter how chunks are scheduled.
    """
    ss = np.random.SeedSequence(seed)
    n_chunks = (trials + chunk - 1) // chunk
    children = ss.spawn(n_chunks)
    hits = 0
    for ci in range(n_chunks):
        t = min(chunk, trials - ci * chunk)
        rng = np.random.default_rng(children[ci])
        bits = rng.integers(0, 2, size=(t, params.m, params.n), dtype=np.uint8)
        rowsum = bits.sum(axis=2)
        same = (rowsum == 0) | (rowsum == params.n)
        hits += int(np.count_nonzero(same.sum(axis=1) >= params.k))
    return hits


def monte_carlo_identical_rows(
    params: SimilarityModelParams, trials: int, seed: int
) -> tuple[float, float]:
    """Empirical P(>= k identical rows) and its binomial standard error."""
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    hits = _mc_counts(params, trials, seed)
    est = hits / trials
    stderr = math.sqrt(est * (1.0 - est) / trials)
    return est, stderr


def monte_carlo_all_zero_rows(
    m: int, n: int, p: float, trials: int, seed: int, chunk: int = 20000
) -> tuple[float, float]:
    """Mean all-zero-row count over Bernoulli(p)-zero bit matrices + std error."""
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    ss = np.random.SeedSequence(seed)
    n_chunks = (trials + chunk - 1) // chunk
    children = ss.spawn(n_chunks)
    total = 0
    sq = 0.0
    for ci in range(n_chunks):
        t = min(chunk, trials - ci * chunk)
        rng = np.random.default_rng(children[ci])
        zeros = rng.random(size=(t, m, n)) < p
        counts = zeros.all(axis=2).sum(axis=1)
        total += int(counts.sum())
        sq += float((counts.astype(np.float64) ** 2).sum())
    mean = total / trials
    var = sq / trials - mean**2
    stderr = math.sqrt(max(var, 0.0) / trials)
    return mean, stderr


def synthetic_i8_matrix(m: int, n: int, sparsity: float, seed: int) -> np.ndarray:
    """Seeded int8 matrix: zeros at the given fraction, uniform nonzero elsewhere."""
    rng = np.random.default_rng(seed)
    vals = rng.integers(-128, 128, size=(m, n), dtype=np.int16)
    vals[vals == 0] = 1
    k = int(round(sparsity * m * n))
    if k:
        idx = rng.choice(m * n, size=k, replace=False)
        vals.ravel()[idx] = 0
    return vals.astype(np.int8)


def zero_bit_ratio_rows(tensor_planes: BitPlaneSet, sparsity: float):
    """(sparsity, ideal ratio, measured ratio) triple for report CSVs."""
    return sparsity, zero_bit_ratio(sparsity), measured_zero_bit_ratio(tensor_planes)
