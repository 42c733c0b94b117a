"""Functional, cycle-counted execution of a CrossbarProgram.

Inputs stream LSB-first over 8 cycles; each tile activation digitizes one
partial sum per stored column and accumulates it with a plane+cycle shift,
subtracting exactly when one (and only one) of the weight plane / input
cycle is the sign position.  Outputs are exact: they equal the dense
signed matmul of the activations with the original weight matrix.

Event tallies are structural (per single inference pass): they do not
depend on activation values, matching the worst case of no input sparsity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arith import shift_is_subtract
from .plan import CrossbarProgram, PlanError, QuantizedTensor, weight_checksum
from .tensorio import BITS

EVENT_KEYS = (
    "dac_drives",
    "adc_conversions",
    "adc_switches",
    "readout_rows",
    "shift_adds",
    "shift_subtracts",
    "buffer_accesses",
)


@dataclass
class CycleRecord:
    plane: int
    chunk: int
    band: int
    tile: int
    input_bit: int
    rows_active: int
    adc_conversions: int
    subtract: bool


@dataclass
class ExecutionTrace:
    """Aggregated event tallies plus (optionally) per-cycle records."""

    tallies: dict = field(default_factory=lambda: {k: 0 for k in EVENT_KEYS})
    per_plane: dict = field(default_factory=dict)
    cycles_per_cu: dict = field(default_factory=dict)  # (chunk, plane) -> cycles
    records: list = field(default_factory=list)
    ou_activations: int = 0

    def bump(self, plane, key, count=1):
        self.tallies[key] += count
        self.per_plane.setdefault(plane, {k: 0 for k in EVENT_KEYS})[key] += count

    @property
    def total_cycles(self) -> int:
        return sum(self.cycles_per_cu.values())


def _schedule(bands, direction):
    """Yield (band_index, tile_index, band_start) in execution order."""
    if direction == "horizontal":
        for bi, band in enumerate(bands):
            for ti in range(len(band.tiles)):
                yield bi, ti, ti == 0
    else:
        n_strips = max((len(b.tiles) for b in bands), default=0)
        for ti in range(n_strips):
            for bi, band in enumerate(bands):
                if ti < len(band.tiles):
                    yield bi, ti, True  # inputs reload on every step


def simulate(
    program: CrossbarProgram,
    activations: np.ndarray,
    direction: str | None = None,
    weights: QuantizedTensor | None = None,
    collect_records: bool = False,
):
    """Run a program on int8 activations.

    activations: (samples, n_rows) int8.  Returns (outputs int64
    (samples, n_cols), ExecutionTrace).  If `weights` is given its checksum
    is verified against the plan.
    """
    direction = direction or program.direction
    if direction not in ("horizontal", "vertical"):
        raise PlanError(f"unknown direction {direction!r}")
    acts = np.asarray(activations)
    if acts.ndim == 1:
        acts = acts[None, :]
    if acts.dtype != np.int8:
        raise PlanError("activations must be int8")
    if acts.shape[1] != program.n_rows:
        raise PlanError(
            f"activation length {acts.shape[1]} != weight rows {program.n_rows}"
        )
    if weights is not None and weight_checksum(weights) != program.weight_crc:
        raise PlanError("plan/weight checksum mismatch")

    geom = program.geometry
    samples = acts.shape[0]
    out = np.zeros((samples, program.n_cols), dtype=np.int64)
    trace = ExecutionTrace()
    act_u8 = acts.view(np.uint8)

    for ci, ch in enumerate(program.chunks):
        for pl in ch.planes:
            plane = pl.plane
            cycles = 0
            for cyc in range(BITS):
                last_band = None
                last_strip = None
                for bi, ti, loads_input in _schedule(pl.bands, direction):
                    band = pl.bands[bi]
                    tile = band.tiles[ti]
                    nrows = len(tile.rows)
                    nstored = len(tile.stored)
                    if nrows > geom.ou_height:
                        raise PlanError("tile activates more rows than OU height")
                    cycles += 1
                    trace.ou_activations += 1

                    rows = ch.row_offset + tile.rows
                    in_bits = ((act_u8[:, rows] >> cyc) & 1).astype(np.int64)
                    wmat = (
                        np.stack([sc.bits for sc in tile.stored], axis=1).astype(np.int64)
                        if nstored
                        else np.zeros((nrows, 0), dtype=np.int64)
                    )
                    partial = in_bits @ wmat  # (samples, nstored), each <= ou_height
                    if partial.size and int(partial.max()) >= (1 << geom.adc_bits):
                        raise PlanError("partial sum exceeds ADC resolution")
                    sub = shift_is_subtract(plane, cyc)
                    shifted = partial << (plane + cyc)
                    contrib = -shifted if sub else shifted
                    for si, sc in enumerate(tile.stored):
                        for label in sc.labels:
                            out[:, ch.col_offset + label] += contrib[:, si]

                    if direction == "horizontal":
                        if loads_input:
                            trace.bump(plane, "dac_drives", len(band.rows))
                            trace.bump(plane, "buffer_accesses", 1)
                        if last_band == bi:
                            trace.bump(plane, "adc_switches", 1)
                        last_band = bi
                    else:
                        trace.bump(plane, "dac_drives", nrows)
                        trace.bump(plane, "buffer_accesses", 1)
                        if last_strip is not None and ti != last_strip:
                            trace.bump(plane, "adc_switches", 1)
                        last_strip = ti
                    trace.bump(plane, "adc_conversions", nstored)
                    trace.bump(plane, "readout_rows", nrows)
                    trace.bump(
                        plane, "shift_subtracts" if sub else "shift_adds", nstored
                    )
                    if collect_records:
                        trace.records.append(
                            CycleRecord(
                                plane=plane,
                                chunk=ci,
                                band=bi,
                                tile=ti,
                                input_bit=cyc,
                                rows_active=nrows,
                                adc_conversions=nstored,
                                subtract=sub,
                            )
                        )
            trace.cycles_per_cu[(ci, plane)] = cycles
            bound = BITS * geom.band_slots * geom.tile_slots
            if cycles > bound:
                raise PlanError("cycle count exceeds the per-CU bound")
    return out, trace


def count_events(trace: ExecutionTrace) -> dict:
    """Event tallies per component class, per plane and total."""
    return {
        "total": dict(trace.tallies),
        "per_plane": {p: dict(v) for p, v in sorted(trace.per_plane.items())},
        "cycles_per_cu": {f"{c}:{p}": n for (c, p), n in sorted(trace.cycles_per_cu.items())},
        "ou_activations": trace.ou_activations,
        "total_cycles": trace.total_cycles,
    }


def dense_reference(q_values: np.ndarray, activations: np.ndarray) -> np.ndarray:
    """Direct signed matmul oracle: activations (S, m) x weights (m, n)."""
    a = np.asarray(activations, dtype=np.int64)
    if a.ndim == 1:
        a = a[None, :]
    return a @ np.asarray(q_values, dtype=np.int64)
