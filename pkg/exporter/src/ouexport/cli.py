"""CLI: ouexport MODEL --sparsity R --out DIR."""
import argparse
import sys

from .export import export
from .models import REGISTRY


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="ouexport",
        description="Prune a model and write per-layer weight tensor files.",
    )
    ap.add_argument("model", help=f"model id: {', '.join(sorted(REGISTRY))}")
    ap.add_argument("--sparsity", type=float, default=0.0, help="pruning ratio in [0, 1)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--checkpoint", default=None, help="optional state-dict .pt file")
    ap.add_argument("--scope", choices=["per-layer", "global"], default="per-layer")
    args = ap.parse_args(argv)
    try:
        manifest = export(
            args.model,
            args.sparsity,
            args.out,
            seed=args.seed,
            checkpoint=args.checkpoint,
            scope=args.scope,
        )
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    for layer in manifest["layers"]:
        print(
            f"{layer['name']}: {layer['original_shape']} -> "
            f"{layer['flattened_shape']} sparsity={layer['sparsity']:.4f}"
        )
    print(f"wrote {len(manifest['layers'])} tensors + manifest.json to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
