"""ousim: bit-level similarity reordering compiler and OU-granular
crossbar simulator for sparse int8 weight matrices."""

from .tensorio import (
    BITS,
    BitPlaneSet,
    QuantizedTensor,
    load_tensor,
    prune_magnitude,
    quantize_i8,
    save_tensor,
    to_bit_planes,
)
from .arith import bit_serial_mac, signed_mul_decomposed
from .reorder import BitMatrix, column_pair, compress_rows, reorder_similarity, shd
from .plan import (
    CrossbarProgram,
    Geometry,
    OutputIndexStream,
    build_program,
    decode_output_indices,
    encode_output_indices,
    index_overhead_bits,
    load_plan,
    reconstruct_weights,
    save_plan,
)
from .sim import count_events, dense_reference, simulate
from .cost import PowerTable, compare_baseline, cost, run_pipeline, sweep_ou_height

__version__ = "0.1.0"

__all__ = [
    "BITS",
    "BitMatrix",
    "BitPlaneSet",
    "CrossbarProgram",
    "Geometry",
    "OutputIndexStream",
    "PowerTable",
    "QuantizedTensor",
    "bit_serial_mac",
    "build_program",
    "column_pair",
    "compare_baseline",
    "compress_rows",
    "cost",
    "count_events",
    "decode_output_indices",
    "dense_reference",
    "encode_output_indices",
    "index_overhead_bits",
    "load_plan",
    "load_tensor",
    "prune_magnitude",
    "quantize_i8",
    "reconstruct_weights",
    "reorder_similarity",
    "run_pipeline",
    "save_plan",
    "save_tensor",
    "shd",
    "signed_mul_decomposed",
    "simulate",
    "sweep_ou_height",
    "to_bit_planes",
]
