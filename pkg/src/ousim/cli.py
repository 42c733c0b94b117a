"""Command-line pipeline: quantize, analyze, reorder, simulate, report, sweep.

Exit codes: 0 success, 2 invalid configuration/arguments, 3 I/O failure.
Flags override values from --config (flat key=value file).  All artifacts
are written atomically (temp file + rename) so same config + seeds give
byte-identical outputs.
"""
from __future__ import annotations

import csv
import json
import os
import sys
import tempfile

import click
import numpy as np

from . import stats
from .cost import (
    PowerTable,
    compare_baseline,
    report_json,
    sweep_ou_height,
    sweep_sparsity,
)
from .plan import (
    Geometry,
    PlanError,
    build_program,
    load_plan,
    plan_summary,
    save_plan,
)
from .sim import count_events, simulate
from .stats import SimilarityModelParams
from .tensorio import (
    QuantizedTensor,
    TensorFormatError,
    load_tensor,
    prune_magnitude,
    quantize_i8,
    save_tensor,
    to_bit_planes,
)

EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(click.UsageError):
    pass


def _read_config(path):
    cfg = {}
    try:
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(f"bad config line: {line!r}")
                cfg[key.strip()] = value.strip()
    except OSError as e:
        raise ConfigError(str(e))
    return cfg


def _atomic_write(path, data: bytes):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save(path, writer):
    """Run `writer(tmp_path)` then rename into place."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _geometry(cfg, ou_height, ou_width, crossbar):
    cb_h, cb_w = crossbar
    try:
        return Geometry(
            crossbar_height=int(cfg.get("crossbar_height", cb_h)),
            crossbar_width=int(cfg.get("crossbar_width", cb_w)),
            ou_height=int(cfg.get("ou_height", ou_height)),
            ou_width=int(cfg.get("ou_width", ou_width)),
        )
    except (PlanError, ValueError) as e:
        raise ConfigError(str(e))


def _load_q(path) -> QuantizedTensor:
    arr = load_tensor(path)
    if arr.dtype != np.int8:
        raise ConfigError(f"{path}: expected an int8 tensor (run `ousim quantize` first)")
    if arr.ndim != 2:
        raise ConfigError(f"{path}: expected a 2-D tensor")
    return QuantizedTensor(
        values=arr,
        scale=1.0,
        sparsity=float(np.count_nonzero(arr == 0)) / arr.size,
    )


def _power(cfg, power_table):
    path = power_table or cfg.get("power_table")
    if path:
        try:
            return PowerTable.from_config(path)
        except (OSError, TypeError, ValueError) as e:
            raise ConfigError(f"bad power table: {e}")
    return PowerTable()


class _Cli(click.Group):
    def main(self, *args, **kwargs):
        kwargs.setdefault("standalone_mode", False)
        try:
            return super().main(*args, **kwargs)
        except click.exceptions.Exit as e:
            sys.exit(e.exit_code)
        except click.UsageError as e:
            click.echo(f"error: {e.format_message()}", err=True)
            sys.exit(EXIT_CONFIG)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_CONFIG)
        except click.exceptions.Abort:
            sys.exit(EXIT_CONFIG)
        except (PlanError, TensorFormatError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except OSError as e:
            click.echo(f"io error: {e}", err=True)
            sys.exit(EXIT_IO)


@click.group(cls=_Cli)
@click.option("--config", type=click.Path(), default=None, help="Flat key=value config file; flags override it.")
@click.option("--jobs", type=int, default=None, help="Parallel worker count (results are independent of this value).")
@click.pass_context
def main(ctx, config, jobs):
    """Sparse int8 weight reordering toolchain for OU-based crossbars."""
    ctx.ensure_object(dict)
    ctx.obj["cfg"] = _read_config(config) if config else {}
    ctx.obj["jobs"] = jobs


@main.command()
@click.argument("input_file", type=click.Path(exists=True))
@click.argument("output_file", type=click.Path())
@click.option("--sparsity", type=float, default=None, help="Magnitude-prune to this zero fraction before quantizing.")
@click.pass_context
def quantize(ctx, input_file, output_file, sparsity):
    """Prune (optional) and quantize a float32 tensor to signed 8-bit."""
    arr = load_tensor(input_file)
    if arr.dtype == np.int8:
        raise ConfigError("input is already int8")
    arr = arr.astype(np.float64)
    if sparsity is not None:
        if not 0.0 <= sparsity <= 1.0:
            raise ConfigError("--sparsity must be in [0, 1]")
        arr = prune_magnitude(arr, sparsity)
    q = quantize_i8(arr)
    _atomic_save(output_file, lambda p: save_tensor(p, q.values))
    meta = {"scale": q.scale, "sparsity": q.sparsity, "shape": list(q.values.shape)}
    _atomic_write(output_file + ".meta.json", (json.dumps(meta, indent=2) + "\n").encode())
    click.echo(f"wrote {output_file} scale={q.scale:.6g} sparsity={q.sparsity:.4f}")


@main.command()
@click.option("--grid-out", type=click.Path(), default=None, help="CSV of closed-form vs Monte-Carlo identical-row probabilities.")
@click.option("--ratio-out", type=click.Path(), default=None, help="CSV of ideal vs measured zero-bit ratio.")
@click.option("--tensor", "tensor_path", type=click.Path(exists=True), default=None, help="Measure the zero-bit ratio of this int8 tensor.")
@click.option("--trials", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def analyze(ctx, grid_out, ratio_out, tensor_path, trials, seed):
    """Emit bit-statistics CSVs: probability sweep grid and zero-bit ratios."""
    if grid_out is None and ratio_out is None:
        raise ConfigError("nothing to do: pass --grid-out and/or --ratio-out")
    if grid_out:
        rows = [("m", "n", "k", "p", "closed_form", "monte_carlo", "stderr")]
        for m in (8, 14, 20):
            for n in (2, 3, 4):
                for k in sorted({m // 2, 7}):
                    params = SimilarityModelParams(m=m, n=n, k=k)
                    cf = stats.prob_at_least_k_identical(params)
                    mc, se = stats.monte_carlo_identical_rows(params, trials, seed)
                    rows.append((m, n, k, 0.0, f"{cf:.8f}", f"{mc:.8f}", f"{se:.8f}"))
        _write_csv(grid_out, rows)
        click.echo(f"wrote {grid_out}")
    if ratio_out:
        rows = [("sparsity", "ideal_ratio", "measured_ratio")]
        if tensor_path:
            arr = load_tensor(tensor_path)
            if arr.dtype != np.int8:
                raise ConfigError("--tensor must be int8")
            p = float(np.count_nonzero(arr == 0)) / arr.size
            rows.append(_ratio_row(arr, p))
        else:
            for i, p in enumerate((0.0, 0.2, 0.4, 0.6, 0.8)):
                arr = stats.synthetic_i8_matrix(512, 512, p, seed + i)
                rows.append(_ratio_row(arr, p))
        _write_csv(ratio_out, rows)
        click.echo(f"wrote {ratio_out}")


def _ratio_row(arr, p):
    measured = stats.measured_zero_bit_ratio(to_bit_planes(arr))
    return (f"{p:.4f}", f"{stats.zero_bit_ratio(p):.6f}", f"{measured:.6f}")


def _write_csv(path, rows):
    def write(tmp):
        with open(tmp, "w", newline="") as f:
            csv.writer(f).writerows(rows)

    _atomic_save(path, write)


@main.command()
@click.argument("input_file", type=click.Path(exists=True))
@click.argument("plan_file", type=click.Path())
@click.option("--ou-height", type=int, default=7, show_default=True)
@click.option("--ou-width", type=int, default=8, show_default=True)
@click.option("--crossbar", type=(int, int), default=(128, 128), show_default=True)
@click.option("--direction", type=click.Choice(["horizontal", "vertical"]), default="horizontal", show_default=True)
@click.option("--mode", type=click.Choice(["naive", "zeros", "reordered"]), default="reordered", show_default=True)
@click.option("--trace", "trace_out", type=click.Path(), default=None, help="Write a step-by-step reordering log.")
@click.pass_context
def reorder(ctx, input_file, plan_file, ou_height, ou_width, crossbar, direction, mode, trace_out):
    """Reorder an int8 weight tensor and write a deployable plan file."""
    cfg = ctx.obj["cfg"]
    geom = _geometry(cfg, ou_height, ou_width, crossbar)
    q = _load_q(input_file)
    trace = [] if trace_out else None
    program = build_program(q, geometry=geom, direction=direction, mode=mode, trace=trace)
    _atomic_save(plan_file, lambda p: save_plan(p, program))
    _atomic_write(
        plan_file + ".json", (json.dumps(plan_summary(program), indent=2) + "\n").encode()
    )
    if trace_out:
        _atomic_write(trace_out, ("\n".join(trace) + "\n").encode())
    click.echo(
        f"wrote {plan_file}: {program.tile_count()} OU tiles, "
        f"{program.stored_column_count()} stored columns"
    )


@main.command("simulate")
@click.argument("plan_file", type=click.Path(exists=True))
@click.argument("activations_file", type=click.Path(exists=True))
@click.argument("output_file", type=click.Path())
@click.option("--direction", type=click.Choice(["horizontal", "vertical"]), default=None)
@click.option("--trace-out", type=click.Path(), default=None, help="JSON-lines event stream.")
@click.option("--weights", type=click.Path(exists=True), default=None, help="Verify the plan checksum against this tensor.")
@click.pass_context
def simulate_cmd(ctx, plan_file, activations_file, output_file, direction, trace_out, weights):
    """Execute a plan on activations; outputs exact int64 MAC results."""
    program = load_plan(plan_file)
    acts = load_tensor(activations_file)
    if acts.dtype != np.int8:
        raise ConfigError("activations must be int8")
    if acts.ndim == 1:
        acts = acts[None, :]
    if acts.ndim != 2 or acts.shape[1] != program.n_rows:
        raise ConfigError(
            f"activation shape {acts.shape} incompatible with weight rows {program.n_rows}"
        )
    w = _load_q(weights) if weights else None
    out, trace = simulate(
        program, acts, direction=direction, weights=w, collect_records=bool(trace_out)
    )
    # accumulators stay below 2**24 at supported crossbar sizes, so float32
    # round-trips them exactly
    if np.abs(out).max(initial=0) >= (1 << 24):
        raise PlanError("output exceeds exact float32 range")
    _atomic_save(output_file, lambda p: save_tensor(p, out.astype(np.float32)))
    if trace_out:
        lines = [json.dumps(r.__dict__) for r in trace.records]
        _atomic_write(trace_out, ("\n".join(lines) + "\n").encode())
    click.echo(f"wrote {output_file}, cycles={trace.total_cycles}")


@main.command()
@click.argument("input_file", type=click.Path(exists=True))
@click.option("--json-out", type=click.Path(), default=None)
@click.option("--csv-out", type=click.Path(), default=None, help="Compression-ratio-vs-OU-height CSV.")
@click.option("--ou-height", type=int, default=7, show_default=True)
@click.option("--ou-width", type=int, default=8, show_default=True)
@click.option("--crossbar", type=(int, int), default=(128, 128), show_default=True)
@click.option("--power-table", type=click.Path(exists=True), default=None)
@click.pass_context
def report(ctx, input_file, json_out, csv_out, ou_height, ou_width, crossbar, power_table):
    """Cost report: CCQ, energy, compression ratio, baseline comparison."""
    cfg = ctx.obj["cfg"]
    geom = _geometry(cfg, ou_height, ou_width, crossbar)
    power = _power(cfg, power_table)
    q = _load_q(input_file)
    res = compare_baseline(q, geom, power=power)
    text = report_json(res)
    if json_out:
        _atomic_write(json_out, (text + "\n").encode())
    click.echo(text)
    if csv_out:
        heights = sorted({2, 4, geom.ou_height, 14})
        rows = [("ou_height", "ccq_reordered", "ccq_naive", "compression_ratio")]
        for r in sweep_ou_height(q, heights, geom, power):
            rows.append(
                (r["ou_height"], r["ccq_reordered"], r["ccq_naive"], f"{r['compression_ratio']:.6f}")
            )
        _write_csv(csv_out, rows)
        click.echo(f"wrote {csv_out}")


@main.command()
@click.option("--mode", type=click.Choice(["ou-height", "sparsity"]), default="ou-height", show_default=True)
@click.option("--tensor", "tensor_path", type=click.Path(exists=True), default=None, help="int8 tensor (required for --mode ou-height).")
@click.option("--heights", default="2,4,7,14", show_default=True)
@click.option("--sparsities", default="0.0,0.3,0.6,0.9", show_default=True)
@click.option("--shape", type=(int, int), default=(64, 64), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--csv-out", type=click.Path(), required=True)
@click.option("--ou-height", type=int, default=7, show_default=True)
@click.option("--ou-width", type=int, default=8, show_default=True)
@click.option("--crossbar", type=(int, int), default=(128, 128), show_default=True)
@click.pass_context
def sweep(ctx, mode, tensor_path, heights, sparsities, shape, seed, csv_out, ou_height, ou_width, crossbar):
    """Sensitivity sweeps: compression vs OU height, or gains vs sparsity."""
    cfg = ctx.obj["cfg"]
    geom = _geometry(cfg, ou_height, ou_width, crossbar)
    if mode == "ou-height":
        if tensor_path is None:
            raise ConfigError("--tensor is required for --mode ou-height")
        q = _load_q(tensor_path)
        hs = sorted(int(h) for h in heights.split(","))
        rows = [("ou_height", "ccq_reordered", "ccq_naive", "compression_ratio")]
        for r in sweep_ou_height(q, hs, geom):
            rows.append(
                (r["ou_height"], r["ccq_reordered"], r["ccq_naive"], f"{r['compression_ratio']:.6f}")
            )
    else:
        ps = [float(p) for p in sparsities.split(",")]
        rows = [("sparsity", "improvement", "ccq_reordered", "ccq_baseline")]
        for r in sweep_sparsity(shape, ps, seed, geom):
            rows.append(
                (f"{r['sparsity']:.4f}", f"{r['improvement']:.6f}", r["ccq_reordered"], r["ccq_baseline"])
            )
    _write_csv(csv_out, rows)
    click.echo(f"wrote {csv_out}")


if __name__ == "__main__":
    main()
