"""L1 unstructured pruning + per-layer tensor file export.

Each prunable layer (Conv2d, Linear) is pruned at the requested ratio and
written as one float32 TensorFile; conv weights (out, in, kh, kw) are
flattened to (kh*kw*in) x out so every filter becomes one matrix column.
Quantization is deliberately left to the consumer toolchain.
"""
import json
import os

import numpy as np
import torch
from torch import nn
from torch.nn.utils import prune

PRUNABLE = (nn.Conv2d, nn.Linear)


def flatten_weight(w):
    """Conv (out, in, kh, kw) -> (in*kh*kw, out); linear (out, in) -> (in, out)."""
    w = np.asarray(w, dtype=np.float32)
    if w.ndim == 1:
        return w.reshape(-1, 1)
    return w.reshape(w.shape[0], -1).T


def prunable_layers(model):
    return [
        (name, mod)
        for name, mod in model.named_modules()
        if isinstance(mod, PRUNABLE)
    ]


def apply_pruning(model, ratio, scope="per-layer"):
    """Zero the smallest-magnitude weights in place.

    per-layer prunes each layer to `ratio` independently; global uses one
    magnitude threshold across all layers, so per-layer ratios vary.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must be in [0, 1)")
    if scope not in ("per-layer", "global"):
        raise ValueError(f"unknown pruning scope {scope!r}")
    layers = prunable_layers(model)
    if not layers:
        raise ValueError("model has no prunable layers")
    if ratio == 0.0:
        return layers
    if scope == "per-layer":
        for _, mod in layers:
            prune.l1_unstructured(mod, name="weight", amount=ratio)
            prune.remove(mod, "weight")
    else:
        params = [(mod, "weight") for _, mod in layers]
        prune.global_unstructured(params, pruning_method=prune.L1Unstructured, amount=ratio)
        for _, mod in layers:
            prune.remove(mod, "weight")
    return layers


def export(model_name, ratio, out_dir, seed=0, checkpoint=None, scope="per-layer"):
    """Prune and export every layer; returns the manifest dict.

    Writes <layer>.tensor files plus manifest.json into out_dir.
    """
    from .models import build_model

    model = build_model(model_name, seed=seed, checkpoint=checkpoint)
    os.makedirs(out_dir, exist_ok=True)
    layers = apply_pruning(model, ratio, scope)

    entries = []
    with torch.no_grad():
        for name, mod in layers:
            w = mod.weight.detach().cpu().numpy()
            flat = flatten_weight(w)
            fname = f"{name.replace('.', '_')}.tensor"
            path = os.path.join(out_dir, fname)
            from .tensorfile import write_f32

            write_f32(path, flat)
            entries.append(
                {
                    "name": name,
                    "original_shape": list(w.shape),
                    "flattened_shape": list(flat.shape),
                    "sparsity": float(np.count_nonzero(flat == 0)) / flat.size,
                    "path": fname,
                }
            )
    manifest = {
        "model": model_name,
        "pruning_ratio": ratio,
        "pruning_scope": scope,
        "seed": seed,
        "layers": entries,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return manifest
