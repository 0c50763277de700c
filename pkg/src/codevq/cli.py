"""Command-line front end: bounds, code search, benchmarks and a file codec.

Sample files are raw little-endian float64.  CSV outputs start with ``#`` comment
lines recording the package version, seed and a hash of the arguments.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import (DELTAS, POINT_COLUMNS, TEST_SAMPLES, TRAIN_SAMPLES, fit_scale, point_row,
                        run_point)
from .convcode import CodeSpecError, ConvCodeSpec
from .entropy_codec import Bitstream, CodecModel, decode_pair, encode_pair, fit_model
from .gfpoly import FieldError
from .nsm_search import COARSE_SAMPLES, FINE_SAMPLES, REPORT_COLUMNS, report_rows, search_optimal
from .rc_bounds import BOUND_COLUMNS, bound_table
from .sources import parse_source, sample_ggd, snr_db
from .tables import BINARY_CODE_BY_STATES, BOUNDS, OPTIMAL_CODES, REFERENCE_COLUMNS, SNR
from .trellis_quantizer import DEFAULT_BLOCK_LEN, DEFAULT_L, quantize, reconstruct

log = logging.getLogger("codevq")

SAMPLE_DTYPE = np.dtype("<f8")


# -- helpers ------------------------------------------------------------------


def provenance(args: argparse.Namespace) -> list[str]:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "verbose")}
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()
    return [f"# codevq {__version__}", f"# seed={cfg.get('seed')}", f"# config={digest[:16]}"]


def write_csv(rows: list[dict], columns, args, out: str | None) -> str:
    buf = io.StringIO()
    for line in provenance(args):
        buf.write(line + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def read_samples(path: str) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) % SAMPLE_DTYPE.itemsize:
        raise ValueError(f"{path}: size {len(data)} is not a multiple of 8 bytes")
    return np.frombuffer(data, dtype=SAMPLE_DTYPE).astype(float)


def write_samples(path: str, x) -> None:
    Path(path).write_bytes(np.asarray(x, dtype=SAMPLE_DTYPE).tobytes())


def pad_even(x: np.ndarray) -> np.ndarray:
    return np.append(x, 0.0) if x.size % 2 else x


def parse_memory(text: str) -> list[int]:
    """``3``, ``1-4`` or ``1,2,5``."""
    out: list[int] = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def resolve_code(args) -> ConvCodeSpec:
    if getattr(args, "code", None):
        return ConvCodeSpec.from_label(args.code, args.q)
    if args.q != 2:
        raise ValueError("--states picks a binary code; use --code for q > 2")
    try:
        return ConvCodeSpec.from_label(BINARY_CODE_BY_STATES[args.states], 2)
    except KeyError:
        raise ValueError(f"no tabulated binary code with {args.states} states") from None


# -- commands -----------------------------------------------------------------


def cmd_bound(args) -> int:
    rows = []
    for r in bound_table(args.q):
        rows.append({"q": r["q"], "R0": f"{r['R0']:.6f}", "G_opt": f"{r['G_opt']:.6f}",
                     "G_at_half": f"{r['G_at_half']:.6f}"})
    write_csv(rows, BOUND_COLUMNS, args, args.out)
    return 0


def cmd_nsm_search(args) -> int:
    reports = []
    for q in args.q:
        for m in parse_memory(args.memory):
            rep = search_optimal(q, m, args.coarse_samples, args.samples, seed=args.seed)
            log.info("q=%d m=%d: %d candidates, best %s G=%.5f", q, m, rep.candidates,
                     rep.best.label, rep.estimate.G)
            reports.append(rep)
    write_csv(report_rows(reports), REPORT_COLUMNS, args, args.out)
    return 0


def cmd_benchmark(args) -> int:
    source = parse_source(args.source)
    spec = resolve_code(args)
    rows = []
    for rate in args.rate:
        for delta in args.delta:
            point, model = run_point(source, spec, rate, delta, args.train_samples, args.samples,
                                     args.seed, args.L, args.block_len, coded=not args.ideal)
            log.info("%s %s R=%g delta=%g: rate %.4f SNR %.3f dB (SLB %.3f)", source.name,
                     spec.label, rate, delta, point.rate, point.snr_db, point.shannon_db)
            rows.append(point_row(point))
            if args.model_dir:
                d = Path(args.model_dir)
                d.mkdir(parents=True, exist_ok=True)
                model.save(d / f"{source.name}_{spec.num_states}_{rate:g}_{delta:g}.json")
    write_csv(rows, POINT_COLUMNS, args, args.out)
    return 0


def cmd_train(args) -> int:
    spec = resolve_code(args)
    if args.input:
        x = pad_even(read_samples(args.input))
    else:
        x = pad_even(sample_ggd(parse_source(args.source), args.samples, args.seed))
    if x.size < args.min_samples:
        raise ValueError(f"training needs at least {args.min_samples} samples, got {x.size}")
    if args.scale is not None:
        model = fit_model(quantize(x, spec, args.scale, args.delta, args.block_len), args.L)
    else:
        model = fit_scale(spec, x, args.rate, args.delta, args.L, args.block_len).model
    model.save(args.out)
    log.info("model %s: %s scale %.6g delta %g", model.model_id, spec.label, model.scale,
             model.delta)
    return 0


def cmd_quantize(args) -> int:
    model = CodecModel.load(args.model)
    x = read_samples(args.input)
    n = x.size
    xe = pad_even(x)
    stream = quantize(xe, model.spec, model.scale, model.delta, model.block_len)
    bits = encode_pair(model, stream.u, stream.b, model.block_len, samples=n)
    data = bits.to_bytes()
    Path(args.out).write_bytes(data)
    if n:
        y = reconstruct(stream.u, stream.b, model.spec, model.recon, model.scale, model.block_len)
        log.info("%d samples, %.5f bits/sample, SNR %.3f dB", n, 8 * len(bits.payload) / n,
                 snr_db(x, y[:n]))
    return 0


def cmd_dequantize(args) -> int:
    model = CodecModel.load(args.model)
    bits = Bitstream.from_bytes(Path(args.input).read_bytes())
    u, b = decode_pair(model, bits)
    y = reconstruct(u, b, model.spec, model.recon, model.scale, bits.header["block_len"])
    write_samples(args.out, y[: bits.header["samples"]])
    return 0


def published_rows() -> list[dict]:
    rows = []
    for q, (r0, g, gh) in BOUNDS.items():
        rows.append({"table": "bounds", "key": f"q={q}", "value": f"R0={r0} G_opt={g} G_half={gh}"})
    for q, entries in OPTIMAL_CODES.items():
        for states, label, g, gain in entries:
            rows.append({"table": f"codes_q{q}", "key": f"{states}", "value": f"{label} G={g} {gain}dB"})
    for source, points in SNR.items():
        for (rate, delta), by_states in points.items():
            vals = " ".join(f"{s}:{v}" for s, v in by_states.items())
            rows.append({"table": f"snr_{source}", "key": f"R={rate:g} delta={delta:g}", "value": vals})
        for rate, (hd, ecsq) in REFERENCE_COLUMNS[source].items():
            rows.append({"table": f"snr_{source}", "key": f"R={rate:g} reference",
                         "value": f"H(D)={hd} ECSQ={ecsq}"})
    return rows


# benchmark points reproduced by ``tables``: (source, states, rate, delta)
TABLE_POINTS = (
    ("gaussian", 4, 1.0, 0.0), ("gaussian", 4, 2.0, 0.0), ("gaussian", 4, 3.0, 0.0),
    ("laplacian", 4, 1.0, 0.0), ("laplacian", 32, 1.0, 0.25),
    ("ggd:0.5", 2, 0.5, 0.0), ("ggd:0.5", 2, 0.5, 0.5),
)


def cmd_tables(args) -> int:
    if args.published:
        write_csv(published_rows(), ("table", "key", "value"), args, args.out)
        return 0
    out = Path(args.out or "tables")
    out.mkdir(parents=True, exist_ok=True)
    cmd_bound(argparse.Namespace(**{**vars(args), "q": [2, 3, 5, 7], "out": str(out / "bounds.csv")}))
    reports = []
    for q, ms in ((2, range(1, 5)), (3, range(1, 3)), (5, range(1, 2))):
        for m in ms:
            reports.append(search_optimal(q, m, args.coarse_samples, args.samples, seed=args.seed))
    write_csv(report_rows(reports), REPORT_COLUMNS, args, str(out / "codes.csv"))
    rows = []
    for src, states, rate, delta in TABLE_POINTS:
        spec = ConvCodeSpec.from_label(BINARY_CODE_BY_STATES[states], 2)
        point, _ = run_point(parse_source(src), spec, rate, delta, args.train_samples,
                             args.test_samples, args.seed)
        rows.append(point_row(point))
    write_csv(rows, POINT_COLUMNS, args, str(out / "snr.csv"))
    return 0


# -- parser -------------------------------------------------------------------


def _code_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, default=2, help="field size (prime)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--code", help="generator label such as [7;5]")
    g.add_argument("--states", type=int, default=4, help="tabulated binary code by state count")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="codevq", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="random-coding NSM bounds per q")
    p.add_argument("--q", type=int, nargs="+", default=[2, 3, 5, 7])
    p.add_argument("--seed", type=int, default=0, help="unused; kept for uniform provenance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("nsm-search", parents=[common],
                       help="exhaustive search for the best encoder per memory")
    p.add_argument("--q", type=int, nargs="+", default=[2])
    p.add_argument("--memory", default="1-4", help="e.g. 3, 1-4 or 1,2,5")
    p.add_argument("--samples", type=int, default=FINE_SAMPLES, help="finalist budget")
    p.add_argument("--coarse-samples", type=int, default=COARSE_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_nsm_search)

    p = sub.add_parser("benchmark", parents=[common],
                       help="rate-targeted SNR on a generalized Gaussian source")
    p.add_argument("--source", default="gaussian", help="gaussian, laplacian or ggd:<alpha>")
    _code_args(p)
    p.add_argument("--rate", type=float, nargs="+", default=[1.0])
    p.add_argument("--delta", type=float, nargs="+", default=list(DELTAS))
    p.add_argument("--samples", type=int, default=TEST_SAMPLES, help="test samples per point")
    p.add_argument("--train-samples", type=int, default=TRAIN_SAMPLES)
    p.add_argument("--L", type=int, default=DEFAULT_L)
    p.add_argument("--block-len", type=int, default=DEFAULT_BLOCK_LEN)
    p.add_argument("--ideal", action="store_true", help="report model cross-entropy, skip the coder")
    p.add_argument("--model-dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("train", parents=[common], help="train a codec model")
    p.add_argument("--source", default="gaussian")
    p.add_argument("--input", help="raw float64 training file instead of a synthetic source")
    _code_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rate", type=float, default=1.0, help="target bits/sample (bisects the scale)")
    g.add_argument("--scale", type=float, help="fixed lattice scale")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=TRAIN_SAMPLES)
    p.add_argument("--min-samples", type=int, default=TRAIN_SAMPLES)
    p.add_argument("--L", type=int, default=DEFAULT_L)
    p.add_argument("--block-len", type=int, default=DEFAULT_BLOCK_LEN)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("quantize", parents=[common], help="encode a raw float64 file")
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("dequantize", parents=[common], help="decode a bitstream to raw float64")
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dequantize)

    p = sub.add_parser("tables", parents=[common],
                       help="reproduce bounds, code search and SNR points")
    p.add_argument("--published", action="store_true", help="print the reference values only")
    p.add_argument("--samples", type=int, default=4_000_000, help="finalist NSM budget")
    p.add_argument("--coarse-samples", type=int, default=COARSE_SAMPLES)
    p.add_argument("--train-samples", type=int, default=TRAIN_SAMPLES)
    p.add_argument("--test-samples", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (or file with --published)")
    p.set_defaults(func=cmd_tables)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FieldError, CodeSpecError, OSError) as exc:
        print(f"codevq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
