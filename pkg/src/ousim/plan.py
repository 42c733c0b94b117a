"""Deployable crossbar programs: bit-split placement, routing, index streams.

Each of the 8 bit planes of a weight chunk goes to its own Computation
Unit, so every result in one crossbar is shifted by the same plane-wide
amount and no per-weight shift values need to be recorded.  Large
matrices are split into crossbar-sized chunks first; each chunk's planes
are reordered independently.

Plan file ("OUPL", version 1, little-endian): header, geometry, per-chunk
per-plane band/tile tables with packed cell bits, CRC32 trailer.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .reorder import BandAssignment, BitMatrix, compress_rows, naive_bands, reorder_similarity
from .tensorio import BITS, QuantizedTensor, to_bit_planes

PLAN_MAGIC = b"OUPL"
PLAN_VERSION = 1

MODES = ("naive", "zeros", "reordered")
DIRECTIONS = ("horizontal", "vertical")


class PlanError(ValueError):
    """Raised for malformed plans or capacity violations."""


@dataclass(frozen=True)
class Geometry:
    """Crossbar and OU dimensions.  Defaults: 128x128 crossbar, 7x8 OU."""

    crossbar_height: int = 128
    crossbar_width: int = 128
    ou_height: int = 7
    ou_width: int = 8

    def __post_init__(self):
        if not (1 <= self.ou_height <= self.crossbar_height):
            raise PlanError("ou_height must be in [1, crossbar_height]")
        if not (1 <= self.ou_width <= self.crossbar_width):
            raise PlanError("ou_width must be in [1, crossbar_width]")

    @property
    def band_slots(self) -> int:
        return self.crossbar_height // self.ou_height

    @property
    def tile_slots(self) -> int:
        return self.crossbar_width // self.ou_width

    @property
    def usable_rows(self) -> int:
        # rows beyond the OU grid are unusable; chunking respects this
        return self.band_slots * self.ou_height

    @property
    def adc_bits(self) -> int:
        # the ADC must resolve a 0..ou_height one-bit-cell partial sum
        return max(1, (self.ou_height).bit_length())


@dataclass
class StoredColumn:
    """One physical column in an OU tile.

    labels holds the logical output column(s) it serves: two for an
    identical pair (the result fans out), one otherwise.
    """

    labels: tuple[int, ...]
    bits: np.ndarray  # (len(tile.rows),) uint8


@dataclass
class Tile:
    """One OU activation: up to ou_height active rows x ou_width columns."""

    rows: np.ndarray  # active original row indices within the chunk
    stored: list[StoredColumn]

    @property
    def pair_count(self) -> int:
        return sum(1 for s in self.stored if len(s.labels) == 2)


@dataclass
class BandPlan:
    rows: np.ndarray  # band row indices within the chunk (<= ou_height)
    tiles: list[Tile]


@dataclass
class PlanePlan:
    plane: int
    bands: list[BandPlan]


@dataclass
class ChunkProgram:
    row_offset: int
    col_offset: int
    n_rows: int
    n_cols: int
    planes: list[PlanePlan]


@dataclass
class CrossbarProgram:
    n_rows: int
    n_cols: int
    geometry: Geometry
    direction: str
    mode: str
    chunks: list[ChunkProgram]
    weight_crc: int
    scale: float = 1.0

    def tile_count(self) -> int:
        return sum(
            len(b.tiles) for ch in self.chunks for pl in ch.planes for b in pl.bands
        )

    def stored_column_count(self) -> int:
        return sum(
            len(t.stored)
            for ch in self.chunks
            for pl in ch.planes
            for b in pl.bands
            for t in b.tiles
        )


@dataclass(frozen=True)
class OutputIndexStream:
    """Delta-encoded output column indices for one tile.

    Pair indices come first (2 per pair, encoded as min-delta then span),
    then unique column indices; the decoder only needs pair_count and the
    stream length.
    """

    deltas: tuple[int, ...]
    pair_count: int


def weight_checksum(q: QuantizedTensor) -> int:
    return zlib.crc32(np.ascontiguousarray(q.values).tobytes()) & 0xFFFFFFFF


def _plan_plane(plane_bits: np.ndarray, geom: Geometry, mode: str, trace=None) -> list[BandPlan]:
    bm = BitMatrix.from_bits(plane_bits)
    if mode == "reordered":
        bands, leftover = reorder_similarity(bm, geom.ou_height, trace=trace)
        if len(leftover):
            bands.append(
                BandAssignment(
                    rows=leftover, padding=geom.ou_height - len(leftover)
                )
            )
    else:
        bands = naive_bands(bm, geom.ou_height)
    gather = mode != "naive"
    out = []
    for band in bands:
        tiles = []
        for groups, active in compress_rows(plane_bits, band, geom.ou_width, gather_zeros=gather):
            stored = [
                StoredColumn(labels=tuple(int(c) for c in g), bits=plane_bits[active, g[0]])
                for g in groups
            ]
            tiles.append(Tile(rows=active, stored=stored))
        out.append(BandPlan(rows=np.asarray(band.rows, dtype=np.int64), tiles=tiles))
    return out


def build_program(
    q: QuantizedTensor,
    geometry: Geometry = Geometry(),
    direction: str = "horizontal",
    mode: str = "reordered",
    trace=None,
) -> CrossbarProgram:
    """Split a quantized matrix into chunks, reorder every bit plane, and
    assemble the full multi-plane deployment.
    """
    if direction not in DIRECTIONS:
        raise PlanError(f"unknown direction {direction!r}")
    if mode not in MODES:
        raise PlanError(f"unknown mode {mode!r}")
    m, n = q.values.shape
    usable_cols = geometry.tile_slots * geometry.ou_width
    chunks = []
    for row_off in range(0, m, geometry.usable_rows):
        for col_off in range(0, n, usable_cols):
            sub = q.values[
                row_off : row_off + geometry.usable_rows,
                col_off : col_off + usable_cols,
            ]
            planes = to_bit_planes(sub).planes
            plane_plans = [
                PlanePlan(plane=b, bands=_plan_plane(planes[b], geometry, mode, trace=trace))
                for b in range(BITS)
            ]
            chunk = ChunkProgram(
                row_offset=row_off,
                col_offset=col_off,
                n_rows=sub.shape[0],
                n_cols=sub.shape[1],
                planes=plane_plans,
            )
            _check_capacity(chunk, geometry)
            chunks.append(chunk)
    return CrossbarProgram(
        n_rows=m,
        n_cols=n,
        geometry=geometry,
        direction=direction,
        mode=mode,
        chunks=chunks,
        weight_crc=weight_checksum(q),
        scale=q.scale,
    )


def _check_capacity(chunk: ChunkProgram, geom: Geometry) -> None:
    slots = geom.band_slots * geom.tile_slots
    overflow = [
        pl.plane
        for pl in chunk.planes
        if len(pl.bands) > geom.band_slots
        or any(len(b.tiles) > geom.tile_slots for b in pl.bands)
        or sum(len(b.tiles) for b in pl.bands) > slots
    ]
    if overflow:
        raise PlanError(f"plan exceeds crossbar OU capacity on planes {overflow}")


def reconstruct_weights(program: CrossbarProgram) -> np.ndarray:
    """Rebuild the signed weight matrix from a program (routing inverse).

    Must equal the original matrix exactly; dropped all-zero content
    reconstructs as zero.
    """
    out_planes = np.zeros((BITS, program.n_rows, program.n_cols), dtype=np.uint8)
    for ch in program.chunks:
        for pl in ch.planes:
            for band in pl.bands:
                for tile in band.tiles:
                    rows = ch.row_offset + tile.rows
                    for sc in tile.stored:
                        for label in sc.labels:
                            out_planes[pl.plane, rows, ch.col_offset + label] = sc.bits
    from .tensorio import BitPlaneSet

    return BitPlaneSet(planes=out_planes).reconstruct()


def encode_output_indices(tile: Tile) -> OutputIndexStream:
    """Delta-encode a tile's output column indices, pairs first."""
    pairs = sorted(
        (tuple(sorted(s.labels)) for s in tile.stored if len(s.labels) == 2)
    )
    uniques = sorted(s.labels[0] for s in tile.stored if len(s.labels) == 1)
    deltas: list[int] = []
    prev = 0
    for lo, hi in pairs:
        deltas.append(lo - prev)
        deltas.append(hi - lo)
        prev = lo
    prev = 0
    for c in uniques:
        deltas.append(c - prev)
        prev = c
    return OutputIndexStream(deltas=tuple(deltas), pair_count=len(pairs))


def decode_output_indices(stream: OutputIndexStream):
    """Exact inverse of encode_output_indices: (pair list, unique list)."""
    deltas = stream.deltas
    r = stream.pair_count
    if len(deltas) < 2 * r or any(d < 0 for d in deltas):
        raise PlanError("malformed index stream")
    pairs = []
    prev = 0
    for i in range(r):
        lo = prev + deltas[2 * i]
        hi = lo + deltas[2 * i + 1]
        pairs.append((lo, hi))
        prev = lo
    uniques = []
    prev = 0
    for d in deltas[2 * r :]:
        prev += d
        uniques.append(prev)
    return pairs, uniques


DELTA_WIDTH_BITS = 8  # column indices stay below 128 in a 128-wide crossbar
SHIFT_RECORD_BITS = 3  # bits to name one of 8 planes in a co-located layout


def index_overhead_bits(program: CrossbarProgram) -> dict:
    """Routing-table and output-index storage costs in bits.

    Also reports what a same-crossbar layout would pay: with all 8 planes
    of a weight co-located, every stored column needs its shift amount
    recorded, which bit splitting avoids entirely.
    """
    row_bits = 0
    col_bits = 0
    stored = 0
    for ch in program.chunks:
        addr = max(1, (max(ch.n_rows - 1, 1)).bit_length())
        for pl in ch.planes:
            for band in pl.bands:
                for tile in band.tiles:
                    row_bits += len(tile.rows) * addr
                    col_bits += len(encode_output_indices(tile).deltas) * DELTA_WIDTH_BITS
                    stored += len(tile.stored)
    total = row_bits + col_bits
    reordered = program.mode != "naive"
    baseline = total + (SHIFT_RECORD_BITS * stored if reordered else 0)
    return {
        "row_routing_bits": row_bits,
        "output_index_bits": col_bits,
        "total_bits": total,
        "stored_columns": stored,
        "same_crossbar_baseline_bits": baseline,
    }


# ---------------------------------------------------------------------------
# plan file serialization


def _pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def _unpack_bits(blob: bytes, n: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(blob, dtype=np.uint8), count=n).astype(np.uint8)


def save_plan(path, program: CrossbarProgram) -> None:
    out = bytearray()
    out += PLAN_MAGIC
    g = program.geometry
    out += struct.pack(
        "<HIIHHHHBBIId",
        PLAN_VERSION,
        program.n_rows,
        program.n_cols,
        g.crossbar_height,
        g.crossbar_width,
        g.ou_height,
        g.ou_width,
        DIRECTIONS.index(program.direction),
        MODES.index(program.mode),
        program.weight_crc,
        len(program.chunks),
        program.scale,
    )
    for ch in program.chunks:
        out += struct.pack("<IIII", ch.row_offset, ch.col_offset, ch.n_rows, ch.n_cols)
        out += struct.pack("<B", len(ch.planes))
        for pl in ch.planes:
            out += struct.pack("<BI", pl.plane, len(pl.bands))
            for band in pl.bands:
                out += struct.pack("<H", len(band.rows))
                out += np.asarray(band.rows, dtype="<u4").tobytes()
                out += struct.pack("<H", len(band.tiles))
                for tile in band.tiles:
                    out += struct.pack("<H", len(tile.rows))
                    out += np.asarray(tile.rows, dtype="<u4").tobytes()
                    out += struct.pack("<H", len(tile.stored))
                    for sc in tile.stored:
                        out += struct.pack("<B", len(sc.labels))
                        out += struct.pack(f"<{len(sc.labels)}I", *sc.labels)
                        out += _pack_bits(sc.bits)
    crc = zlib.crc32(bytes(out)) & 0xFFFFFFFF
    out += struct.pack("<I", crc)
    with open(path, "wb") as f:
        f.write(bytes(out))


def load_plan(path) -> CrossbarProgram:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != PLAN_MAGIC:
        raise PlanError("bad plan magic")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != crc:
        raise PlanError("plan checksum mismatch")
    off = 4
    (
        version,
        n_rows,
        n_cols,
        cb_h,
        cb_w,
        ou_h,
        ou_w,
        dir_tag,
        mode_tag,
        wcrc,
        n_chunks,
        scale,
    ) = struct.unpack_from("<HIIHHHHBBIId", blob, off)
    off += struct.calcsize("<HIIHHHHBBIId")
    if version != PLAN_VERSION:
        raise PlanError(f"unsupported plan version {version}")
    geom = Geometry(cb_h, cb_w, ou_h, ou_w)
    chunks = []
    for _ in range(n_chunks):
        row_off, col_off, ch_rows, ch_cols = struct.unpack_from("<IIII", blob, off)
        off += 16
        (n_planes,) = struct.unpack_from("<B", blob, off)
        off += 1
        planes = []
        for _ in range(n_planes):
            plane, n_bands = struct.unpack_from("<BI", blob, off)
            off += 5
            bands = []
            for _ in range(n_bands):
                (nr,) = struct.unpack_from("<H", blob, off)
                off += 2
                band_rows = np.frombuffer(blob, dtype="<u4", count=nr, offset=off).astype(np.int64)
                off += 4 * nr
                (nt,) = struct.unpack_from("<H", blob, off)
                off += 2
                tiles = []
                for _ in range(nt):
                    (tr,) = struct.unpack_from("<H", blob, off)
                    off += 2
                    tile_rows = np.frombuffer(blob, dtype="<u4", count=tr, offset=off).astype(np.int64)
                    off += 4 * tr
                    (ns,) = struct.unpack_from("<H", blob, off)
                    off += 2
                    stored = []
                    for _ in range(ns):
                        (nl,) = struct.unpack_from("<B", blob, off)
                        off += 1
                        labels = struct.unpack_from(f"<{nl}I", blob, off)
                        off += 4 * nl
                        nbytes = (tr + 7) // 8
                        bits = _unpack_bits(blob[off : off + nbytes], tr)
                        off += nbytes
                        stored.append(StoredColumn(labels=tuple(int(x) for x in labels), bits=bits))
                    tiles.append(Tile(rows=tile_rows, stored=stored))
                bands.append(BandPlan(rows=band_rows, tiles=tiles))
            planes.append(PlanePlan(plane=plane, bands=bands))
        chunks.append(
            ChunkProgram(
                row_offset=row_off,
                col_offset=col_off,
                n_rows=ch_rows,
                n_cols=ch_cols,
                planes=planes,
            )
        )
    return CrossbarProgram(
        n_rows=n_rows,
        n_cols=n_cols,
        geometry=geom,
        direction=DIRECTIONS[dir_tag],
        mode=MODES[mode_tag],
        chunks=chunks,
        weight_crc=wcrc,
        scale=scale,
    )


def plan_summary(program: CrossbarProgram) -> dict:
    """Human-readable sidecar contents."""
    overhead = index_overhead_bits(program)
    return {
        "shape": [program.n_rows, program.n_cols],
        "geometry": {
            "crossbar": [program.geometry.crossbar_height, program.geometry.crossbar_width],
            "ou": [program.geometry.ou_height, program.geometry.ou_width],
            "adc_bits": program.geometry.adc_bits,
        },
        "direction": program.direction,
        "mode": program.mode,
        "chunks": len(program.chunks),
        "tiles": program.tile_count(),
        "stored_columns": program.stored_column_count(),
        "weight_crc": program.weight_crc,
        "scale": program.scale,
        "index_overhead": overhead,
    }


def save_plan_with_sidecar(path, program: CrossbarProgram) -> None:
    save_plan(path, program)
    with open(str(path) + ".json", "w") as f:
        json.dump(plan_summary(program), f, indent=2)
        f.write("\n")
