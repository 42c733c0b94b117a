"""Similarity-driven row reordering of bit planes into OU row bands.

Greedy pipeline:
  1. column_pair groups columns into pairs by ascending similarity Hamming
     distance (sHD = number of differing rows).
  2. reorder_similarity chains pairs: starting from a seed pair it keeps
     restricting to the agreeing rows and pairing further columns until
     fewer than OU_height rows agree, then commits the best band found.

All tie-breaks are fixed (lexicographically smallest column labels, first
candidate on equal pair counts) so plans are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import pairwise_shd


@dataclass(frozen=True)
class BitMatrix:
    """A 0/1 matrix whose rows/columns carry their original indices.

    Reordering only ever re-indexes; bit content is immutable.
    """

    bits: np.ndarray  # (m, n) uint8
    row_labels: np.ndarray  # (m,) int64
    col_labels: np.ndarray  # (n,) int64

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "BitMatrix":
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        m, n = bits.shape
        return cls(bits=bits, row_labels=np.arange(m), col_labels=np.arange(n))

    @property
    def shape(self):
        return self.bits.shape


@dataclass
class BandAssignment:
    """One OU row band: up to OU_height rows plus the column pairs that are
    bit-identical on those rows.  All other columns sit in the band unpaired.
    """

    rows: np.ndarray  # original row indices, length <= ou_height
    pairs: list[tuple[int, int]] = field(default_factory=list)
    padding: int = 0  # inactive rows appended to reach ou_height


def shd(a: np.ndarray, b: np.ndarray) -> int:
    """Count of differing rows between two equal-length bit columns."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return int(np.count_nonzero(a ^ b))


def _min_pair(dist: np.ndarray, active: np.ndarray):
    """Smallest-sHD pair among active column positions, lex tie-break.

    active must be sorted ascending; returns (pos_i, pos_j, shd).
    """
    sub = dist[np.ix_(active, active)].astype(np.float64)
    k = len(active)
    sub[np.tril_indices(k)] = np.inf
    flat = int(np.argmin(sub))  # row-major first occurrence == lex smallest
    i, j = divmod(flat, k)
    return int(active[i]), int(active[j]), int(sub[i, j])


def column_pair(bm: BitMatrix):
    """Greedy minimum-sHD column pairing.

    Returns (pairs, leftover) where pairs is an ordered dict
    {(label_i, label_j): (agreeing row labels, count)} in discovery order
    and leftover is the unpaired column label when the count is odd.
    """
    m, n = bm.shape
    pairs: dict[tuple[int, int], tuple[np.ndarray, int]] = {}
    if n < 2:
        leftover = int(bm.col_labels[0]) if n == 1 else None
        return pairs, leftover
    dist = pairwise_shd(bm.bits)
    active = np.arange(n)
    while len(active) >= 2:
        pi, pj, d = _min_pair(dist, active)
        mask = bm.bits[:, pi] ^ bm.bits[:, pj]
        rowid = bm.row_labels[mask == 0]
        key = (int(bm.col_labels[pi]), int(bm.col_labels[pj]))
        pairs[key] = (rowid, m - d)
        active = active[(active != pi) & (active != pj)]
    leftover = int(bm.col_labels[active[0]]) if len(active) else None
    return pairs, leftover


def _chain_candidate(bits, seed_pair, rowid, avail_cols, h):
    """Extend a seed pair by repeatedly pairing the most similar remaining
    columns on the shrinking agreeing-row set; stop once fewer than h rows
    would remain and truncate to h rows.

    Returns (row indices of length h, pair list) or None if the seed's
    agreeing rows are already below h.
    """
    if len(rowid) < h:
        return None
    l_pair = [seed_pair]
    cols = [c for c in avail_cols if c not in seed_pair]
    while True:
        if len(cols) < 2:
            return rowid[:h], l_pair
        sub = np.ascontiguousarray(bits[np.ix_(rowid, cols)])
        dist = pairwise_shd(sub)
        pa, pb, d = _min_pair(dist, np.arange(len(cols)))
        if len(rowid) - d < h:
            return rowid[:h], l_pair
        mask = sub[:, pa] ^ sub[:, pb]
        rowid = rowid[mask == 0]
        a, b = cols[pa], cols[pb]
        l_pair.append((a, b))
        cols = [c for c in cols if c != a and c != b]


def reorder_similarity(bm: BitMatrix, ou_height: int, trace=None):
    """Partition rows into OU bands maximizing identical column pairs.

    Returns (bands, leftover_rows).  Band row sets are pairwise disjoint and
    their union plus leftover_rows is exactly the input rows.  A column
    appears in at most one pair across the whole plan.
    """
    if ou_height < 1:
        raise ValueError("ou_height must be >= 1")
    bits = bm.bits
    # work in positions; map back to the caller's labels when emitting
    s_r = list(range(bm.shape[0]))
    s_c = list(range(bm.shape[1]))

    bands: list[BandAssignment] = []
    step = 0
    while len(s_r) >= ou_height:
        step += 1
        sub = np.ascontiguousarray(bits[np.ix_(s_r, s_c)])
        sub_bm = BitMatrix(
            bits=sub,
            row_labels=np.array(s_r, dtype=np.int64),
            col_labels=np.array(s_c, dtype=np.int64),
        )
        pair_dict, _ = column_pair(sub_bm)
        if trace is not None:
            trace.append(
                f"step {step}: {len(s_r)} rows x {len(s_c)} pairable cols, "
                f"{len(pair_dict)} seed pairs"
            )
        best = None
        for order, ((ci, cj), (rowid, _num)) in enumerate(pair_dict.items()):
            cand = _chain_candidate(bits, (ci, cj), rowid, s_c, ou_height)
            if cand is None:
                continue
            rows, l_pair = cand
            if best is None or len(l_pair) > len(best[1]):
                best = (rows, l_pair, order)
        if best is None:
            # no pair chain survives at this height: emit a plain band
            rows = np.array(s_r[:ou_height], dtype=np.int64)
            l_pair = []
        else:
            rows, l_pair = best[0], best[1]
        band = BandAssignment(
            rows=bm.row_labels[np.asarray(rows, dtype=np.int64)],
            pairs=[(int(bm.col_labels[a]), int(bm.col_labels[b])) for a, b in l_pair],
        )
        bands.append(band)
        if trace is not None and l_pair:
            trace.append(
                f"step {step}: band {len(bands) - 1} rows "
                f"{band.rows.tolist()} pairs {band.pairs}"
            )
        used = set(int(r) for r in rows)
        s_r = [r for r in s_r if r not in used]
        paired = {c for pr in l_pair for c in pr}
        s_c = [c for c in s_c if c not in paired]
    leftover = bm.row_labels[np.array(s_r, dtype=np.int64)] if s_r else np.array([], dtype=np.int64)
    return bands, leftover


def naive_bands(bm: BitMatrix, ou_height: int):
    """Left-to-right packing: consecutive row slabs, no pairing."""
    m = bm.shape[0]
    bands = []
    for start in range(0, m, ou_height):
        rows = bm.row_labels[start : start + ou_height]
        bands.append(BandAssignment(rows=np.asarray(rows), padding=max(0, ou_height - len(rows))))
    return bands


def compress_rows(bits: np.ndarray, band: BandAssignment, ou_width: int, gather_zeros=True):
    """Arrange a band's stored columns into OU tiles and drop all-zero rows.

    Pair columns are frozen at the front (one stored column per pair);
    movable singleton columns are sorted by descending zero count so
    all-zero OU rows cluster in the same tiles and can be removed.  Returns
    a list of tiles: (stored column label groups, active row labels).
    Columns that are entirely zero on the band rows are dropped outright.
    """
    rows = np.asarray(band.rows, dtype=np.int64)
    paired_cols = {c for pr in band.pairs for c in pr}
    n = bits.shape[1]
    singles = [c for c in range(n) if c not in paired_cols]

    stored: list[tuple[int, ...]] = []
    for a, b in band.pairs:
        if gather_zeros and not bits[rows, a].any():
            continue  # identical all-zero pair: neither side is stored
        stored.append((a, b))
    if gather_zeros:
        singles = [c for c in singles if bits[rows, c].any()]
        zero_counts = {c: int(np.count_nonzero(bits[rows, c] == 0)) for c in singles}
        singles.sort(key=lambda c: (-zero_counts[c], c))
    stored.extend((c,) for c in singles)

    tiles = []
    for start in range(0, len(stored), ou_width):
        group = stored[start : start + ou_width]
        cols = [g[0] for g in group]
        nonzero_rows = bits[np.ix_(rows, cols)].any(axis=1)
        active = rows[nonzero_rows] if gather_zeros else rows
        if gather_zeros and len(active) == 0:
            continue
        tiles.append((group, active))
    return tiles
