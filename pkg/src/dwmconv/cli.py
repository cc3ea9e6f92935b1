"""Command-line front door: transform dumps, single convolutions, benchmark
suites and network analysis.

Human-readable output goes to stdout, diagnostics to stderr, and machine
output only to files named with --out.  Every subcommand is deterministic
given its inputs and declared seeds, so identical invocations produce
byte-identical outputs.
"""

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import bench, flops, tensorfile
from .convspec import ConvSpec
from .decompose import plan_decomposition, plan_to_json
from .engines import convolve, direct_conv2d
from .transforms import cook_toom, transform_to_json, verify_transform


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_pair(text: str, name: str) -> tuple[int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) == 2:
        return parts[0], parts[1]
    raise ValueError(f"{name} takes one or two comma-separated integers, got {text!r}")


def _parse_pad(text: str) -> tuple[int, int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        return (parts[0],) * 4
    if len(parts) == 4:
        return tuple(parts)
    raise ValueError(f"--pad takes one or four comma-separated integers, got {text!r}")


def _resolve_config(path_text: str) -> Path:
    """A real path, or the name of a bundled file under dwmconv/data."""
    path = Path(path_text)
    if path.exists():
        return path
    bundled = resources.files("dwmconv").joinpath("data", path_text)
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"config {path_text!r} not found (not a path or bundled name)")


def _load_json(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_gen_transforms(args) -> int:
    points = None
    if args.points is not None:
        try:
            points = [Fraction(p) for p in args.points.split(",")]
        except (ValueError, ZeroDivisionError) as exc:
            return _fail(f"bad rational in --points: {exc}")
    try:
        ts = cook_toom(args.m, args.r, points)
    except ValueError as exc:
        return _fail(str(exc))
    result = verify_transform(ts, trials=args.trials)
    if not result.ok:
        filt, data, want, got = result.failure
        return _fail(
            f"generated transform failed verification after {result.trials} trials: "
            f"filt={filt} data={data} expected={want} got={got}", 2)
    doc = json.dumps(transform_to_json(ts), indent=2)
    if args.out:
        Path(args.out).write_text(doc + "\n", encoding="utf-8")
        print(f"wrote F({args.m},{args.r}) transforms to {args.out} "
              f"(verified, {result.trials} trials)")
    else:
        print(doc)
    return 0


def cmd_conv(args) -> int:
    try:
        data = tensorfile.read_tensor(args.input)
        weights = tensorfile.read_tensor(args.weights)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    kernel = tuple(weights.shape[2:])
    if args.kernel is not None and _parse_pair(args.kernel, "--kernel") != kernel:
        return _fail(f"--kernel {args.kernel} does not match weights file taps {kernel}")
    stride = _parse_pair(args.stride, "--stride")
    pad = _parse_pad(args.pad)
    try:
        spec = ConvSpec(kernel=kernel, stride=stride, pad=pad)
    except ValueError as exc:
        return _fail(str(exc))

    precision = {"f32": np.float32, "f64": np.float64, None: None}[args.precision]
    try:
        out = convolve(data, weights, spec, algo=args.algo, precision=precision)
    except (ValueError, FloatingPointError) as exc:
        return _fail(str(exc))

    stats = (f"algo={args.algo} kernel={kernel[0]}x{kernel[1]} "
             f"stride={stride[0]}x{stride[1]} out={out.y.shape[2]}x{out.y.shape[3]} "
             f"mults_per_channel_filter={out.flops}")
    if args.verify:
        reference = direct_conv2d(data, weights, spec,
                                  precision=precision or data.dtype)
        diff = float(np.max(np.abs(out.y - reference))) if out.y.size else 0.0
        stats += f" max_abs_diff_vs_direct={diff:.6E}"
    print(stats)
    if args.dump_plan:
        print(json.dumps(plan_to_json(plan_decomposition(spec)), indent=2))
    if args.out:
        tensorfile.write_tensor(args.out, out.y)
    return 0


def _parse_flops_config(doc: dict):
    if doc.get("schema") != 1:
        raise ValueError(f"unsupported flops config schema {doc.get('schema')!r}")
    default_out = tuple(doc.get("out", (14, 14)))
    entries = []
    for i, entry in enumerate(doc.get("configs", [])):
        try:
            spec = ConvSpec(kernel=bench.as_pair(entry["kernel"]),
                            stride=bench.as_pair(entry.get("stride", 1)))
            out = tuple(entry.get("out", default_out))
            entries.append((spec, out, entry.get("expected")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed flops config entry {i}: {exc}") from exc
    return entries


def _check_flops(reports, expectations) -> list[str]:
    violations = []
    for rep, expected in zip(reports, expectations):
        if not expected:
            continue
        label = f"{rep.spec.kernel[0]}x{rep.spec.kernel[1]} s{rep.spec.stride[0]}"
        for field, actual in (("direct", rep.direct_mults), ("dwm", rep.dwm_mults),
                              ("winograd", rep.winograd_mults)):
            if field in expected and expected[field] != actual:
                violations.append(f"{label}: {field} = {actual}, expected {expected[field]}")
        for field, actual in (("dwm_speedup", rep.speedup_dwm),
                              ("winograd_speedup", rep.speedup_winograd)):
            if field in expected:
                want = expected[field]
                if actual is None or want is None:
                    if actual is not want:
                        violations.append(f"{label}: {field} = {actual}, expected {want}")
                elif round(actual, 2) != round(want, 2):
                    violations.append(
                        f"{label}: {field} = {actual:.2f}, expected {want:.2f}")
    return violations


def _parse_accuracy_config(doc: dict):
    if doc.get("schema") != 1:
        raise ValueError(f"unsupported accuracy config schema {doc.get('schema')!r}")
    seeds = [int(s) for s in doc.get("seeds", [1])]
    configs = []
    for i, entry in enumerate(doc.get("configs", [])):
        try:
            configs.append(bench.AccuracyConfig(
                kernel=bench.as_pair(entry["kernel"]),
                stride=bench.as_pair(entry.get("stride", 1)),
                hw=int(entry["hw"]),
                channels=int(entry["channels"]),
                filters=int(entry["filters"]),
                batch=int(entry.get("batch", 1)),
                precisions=tuple(entry.get("precisions", bench.PRECISIONS)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed accuracy config entry {i}: {exc}") from exc
    return configs, seeds


def _emit(csv_text: str, json_doc, out_base: str | None) -> None:
    if out_base:
        Path(out_base + ".csv").write_text(csv_text, encoding="utf-8")
        Path(out_base + ".json").write_text(
            json.dumps(json_doc, indent=2) + "\n", encoding="utf-8")
    print(csv_text, end="")


def cmd_bench(args) -> int:
    try:
        doc = _load_json(_resolve_config(args.config))
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    if args.suite == "flops":
        try:
            entries = _parse_flops_config(doc)
        except ValueError as exc:
            return _fail(str(exc))
        reports, csv_text = bench.run_flops_suite([(spec, out) for spec, out, _ in entries])
        _emit(csv_text, flops.reports_to_json(reports), args.out)
        if args.check:
            violations = _check_flops(reports, [exp for _, _, exp in entries])
            for v in violations:
                print(f"check failed: {v}", file=sys.stderr)
            return 1 if violations else 0
        return 0

    try:
        configs, seeds = _parse_accuracy_config(doc)
    except ValueError as exc:
        return _fail(str(exc))
    report = bench.run_accuracy_suite(configs, seeds)
    _emit(report.to_csv(), report.to_json(), args.out)
    if args.check:
        violations = bench.check_accuracy_bands(report)
        for v in violations:
            print(f"check failed: {v}", file=sys.stderr)
        return 1 if violations else 0
    return 0


def cmd_analyze(args) -> int:
    try:
        net = bench.load_network(_load_json(_resolve_config(args.network)))
        layer_reports, totals = bench.analyze_network(net)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    csv_text = bench.network_report_csv(net, layer_reports, totals)
    json_doc = {
        "network": net.name,
        "layers": [
            {
                "name": rep.name, "kernel": list(rep.kernel), "stride": list(rep.stride),
                "out": list(rep.out), "direct": rep.direct,
                "winograd": rep.winograd, "dwm": rep.dwm,
            }
            for rep in layer_reports
        ],
        "totals": totals,
    }
    _emit(csv_text, json_doc, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwmconv",
        description="Decomposable Winograd convolution kernels and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-transforms", help="build and dump F(m, r) transform matrices")
    p.add_argument("m", type=int, help="outputs per tile")
    p.add_argument("r", type=int, help="filter taps")
    p.add_argument("--points", help="comma-separated rational interpolation points, e.g. 0,1,-1")
    p.add_argument("--trials", type=int, default=32, help="verification trials (default 32)")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_gen_transforms)

    p = sub.add_parser("conv", help="run a single convolution on tensor files")
    p.add_argument("--algo", choices=("direct", "winograd", "dwm"), required=True)
    p.add_argument("--in", dest="input", required=True, help="input tensor file (DWM1)")
    p.add_argument("--weights", required=True, help="weights tensor file (F,C,r_h,r_w)")
    p.add_argument("--kernel", help="kernel taps, must match the weights file")
    p.add_argument("--stride", default="1", help="stride, one or two integers")
    p.add_argument("--pad", default="0", help="padding: symmetric value or top,bottom,left,right")
    p.add_argument("--precision", choices=("f32", "f64"), help="compute precision")
    p.add_argument("--out", help="write the output tensor here")
    p.add_argument("--verify", action="store_true",
                   help="also run the direct engine and report max abs difference")
    p.add_argument("--dump-plan", action="store_true",
                   help="print the decomposition plan as JSON")
    p.set_defaults(func=cmd_conv)

    p = sub.add_parser("bench", help="run the FLOP or accuracy suite from a config file")
    p.add_argument("--suite", choices=("flops", "accuracy"), required=True)
    p.add_argument("--config", required=True,
                   help="config JSON path or bundled name (e.g. flops_14x14.json)")
    p.add_argument("--check", action="store_true",
                   help="exit nonzero if acceptance bands or expected values fail")
    p.add_argument("--out", help="basename for .csv and .json report files")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="per-layer FLOP analysis of a network spec")
    p.add_argument("--network", required=True,
                   help="network JSON path or bundled name (e.g. alexnet.json)")
    p.add_argument("--out", help="basename for .csv and .json report files")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
