"""Pruned-model weight exporter for the crossbar mapping toolchain."""
from .export import apply_pruning, export, flatten_weight, prunable_layers
from .models import REGISTRY, build_model
from .tensorfile import write_f32

__version__ = "0.1.0"

__all__ = [
    "REGISTRY",
    "apply_pruning",
    "build_model",
    "export",
    "flatten_weight",
    "prunable_layers",
    "write_f32",
]
