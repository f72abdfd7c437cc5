"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Results go to stdout as JSON; progress goes to stderr. ``DYNTEX_THREADS``
caps BLAS threads (0 or unset = library default).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from dyntex import baselines, binio, harness, kse
from dyntex.errors import DataError, DyntexError, NumericalError
from dyntex.frameio import (
    FrameSequence,
    list_frame_files,
    load_frame,
    load_sequence,
    parse_size,
    save_sequence,
)
from dyntex.kernels import KernelSpec
from dyntex.metrics import PsnrConfig, SsimConfig, evaluate, write_csv

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 1, 2, 3
DEFAULT_KERNEL = "gaussian:gamma=auto"
DEFAULT_LAMBDA = 1e-10
# exponent grids 2^-30..2^10 and 2^-18..2^18, step 2
DEFAULT_LAMBDAS = [2.0 ** e for e in range(-30, 11, 2)]
DEFAULT_GAMMAS = [2.0 ** e for e in range(-18, 19, 2)]


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _kernel(text):
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _size(text):
    try:
        return parse_size(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _float_list(tokens, allow_auto=False):
    values = []
    for token in tokens:
        for part in filter(None, token.split(",")):
            if allow_auto and part.strip().lower() == "auto":
                values.append(None)
            else:
                values.append(float(part))
    return values


def _add_frame_options(p, required=True, name="--frames"):
    p.add_argument(name, required=required, type=Path, metavar="DIR", help="directory of frame images")
    p.add_argument("--max-frames", type=int, default=None, metavar="N",
                   help="use only the first N frames (default: all)")
    p.add_argument("--resize", type=_size, default=None, metavar="WxH",
                   help="bilinear resize, e.g. 150x100 (default: keep size)")
    p.add_argument("--gray", action="store_true", help="convert to grayscale with Rec. 601 luma")


def _load(args, directory=None) -> FrameSequence:
    return load_sequence(directory or args.frames, grayscale=args.gray, resize=args.resize,
                         max_frames=args.max_frames)


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=harness._jsonable)
    sys.stdout.write("\n")


def _log(msg):
    print(msg, file=sys.stderr)


# --- subcommands ----------------------------------------------------------------


def cmd_train(args):
    seq = _load(args)
    _log(f"training on {len(seq)} frames of {seq.geometry}")
    t0 = time.perf_counter()
    model = kse.train(seq, args.kernel, args.lam)
    elapsed = time.perf_counter() - t0
    size = kse.save_model(model, args.out)
    _emit({
        "frames": len(seq),
        "dim": model.dim,
        "lambda": model.lam,
        "kernel": model.kernel.to_text(),
        "jitter": model.jitter_applied,
        "train_seconds": elapsed,
        "model": str(args.out),
        "bytes": size,
    })


def _load_any_model(path):
    magic = binio.sniff_magic(path)
    if magic == kse.MAGIC:
        return kse.load_model(path)
    if magic == baselines.ELM_MAGIC:
        return baselines.load_elm(path)
    if magic == baselines.LDS_MAGIC:
        return baselines.load_lds(path)
    raise binio.BadMagicError(f"bad magic {magic!r} in {path}")


def _seed_frame(args, model):
    if args.seed is not None:
        return load_frame(args.seed, model.geometry)
    if args.seed_frames is not None:
        files = list_frame_files(args.seed_frames)
        index = args.seed_index or 1
        if not 1 <= index <= len(files):
            raise DataError(f"--seed-index {index} outside 1..{len(files)}")
        return load_frame(files[index - 1], model.geometry)
    if isinstance(model, kse.KseModel):
        try:
            return model.training_frame(args.seed_index or 1)
        except IndexError as exc:
            raise DataError(str(exc)) from None
    raise DataError("this model type stores no training frames; pass --seed or --seed-frames")


def cmd_synthesize(args):
    model = _load_any_model(args.model)
    t0 = time.perf_counter()
    if isinstance(model, baselines.LdsModel):
        out = baselines.lds_synthesize(model, args.count)
    else:
        seed = _seed_frame(args, model)
        roll = kse.synthesize if isinstance(model, kse.KseModel) else baselines.elm_synthesize
        out = roll(model, seed, args.count)
    elapsed = time.perf_counter() - t0
    written = save_sequence(out, args.out, args.format)
    _emit({
        "written": written,
        "out": str(args.out),
        "synth_seconds": elapsed,
        "fps": (args.count - 1) / elapsed if args.count > 1 and elapsed > 0 else 0.0,
    })


def cmd_evaluate(args):
    observed = _load(args, args.observed)
    generated = _load(args, args.generated)
    report = evaluate(observed, generated,
                      PsnrConfig(cap_db=args.cap_db, start_index=args.start_index),
                      SsimConfig(start_index=args.start_index))
    if args.csv:
        write_csv(report, args.csv)
    _emit(report.to_dict())


def cmd_gridsearch(args):
    seq = _load(args)
    try:
        grid = harness.GridSpec(_float_list(args.lambdas), _float_list(args.gammas, allow_auto=True))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    eval_frames = args.eval_frames
    train_frames = args.train_frames if args.train_frames is not None else len(seq) - eval_frames
    n_cells = len(grid.lambdas) * len(grid.gammas)
    done = []

    def progress(entry):
        done.append(entry)
        _log(f"[{len(done)}/{n_cells}] lambda={entry.lam:g} gamma={entry.gamma:g} "
             f"psnr={entry.mean_psnr:.3f} ssim={entry.mean_ssim:.4f}")

    result = harness.run_grid(seq, grid, train_frames, eval_frames, progress=progress)
    if args.csv:
        harness.write_grid_csv(result, args.csv)
    summary = {
        "config": {"frames": str(args.frames), "train_frames": train_frames, "eval_frames": eval_frames,
                   "lambdas": grid.lambdas, "gammas": ["auto" if g is None else g for g in grid.gammas]},
        **result.to_dict(),
    }
    if args.json:
        harness.write_json(args.json, summary)
    _emit(summary)


def cmd_baseline(args):
    seq = _load(args)
    if args.kind == "lds":
        model = baselines.lds_train(seq, args.state_dim)
        size = baselines.save_lds(model, args.out)
        info = {"kind": "lds", "state_dim": model.state_dim}
        synth = (lambda n: baselines.lds_synthesize(model, n))
    else:
        model = baselines.elm_train(seq, args.nodes, args.lam, args.rng_seed, args.activation)
        size = baselines.save_elm(model, args.out)
        info = {"kind": "elm", "nodes": model.t_nodes, "lambda": model.lam, "rng_seed": model.rng_seed,
                "activation": model.activation}
        synth = (lambda n: baselines.elm_synthesize(model, seq[0], n))
    info.update({"frames": len(seq), "dim": seq.dim, "model": str(args.out), "bytes": size})
    if args.synth_out is not None:
        info["written"] = save_sequence(synth(args.count), args.synth_out, args.format)
    _emit(info)


def cmd_bench(args):
    if args.frames is not None:
        seq = _load(args)
    else:
        w, h = args.resize or (150, 100)
        seq = harness.make_synthetic(harness.SyntheticSpec(
            "translating_sine", width=w, height=h, period=20, frames=args.max_frames or 200))
    res = harness.run_bench(seq, args.kernel, args.lam, args.gen_frames)
    _emit({"frames": len(seq), "geometry": str(seq.geometry), **res.__dict__})


def cmd_heatmap(args):
    seq = _load(args)
    omega = harness.export_gram_heatmap(seq, args.kernel, args.csv, args.pgm)
    payload = {"n": int(omega.shape[0]), "min": float(omega.min()), "max": float(omega.max()),
               "csv": str(args.csv), "pgm": str(args.pgm) if args.pgm else None}
    if omega.shape[0] >= 4:
        payload["dominant_period"] = harness.dominant_period(omega[0])
    _emit(payload)


def cmd_synthetic(args):
    spec = harness.SyntheticSpec(args.pattern, args.width, args.height, args.period, args.frames,
                                 args.noise, args.rng_seed)
    written = save_sequence(harness.make_synthetic(spec), args.out, args.format)
    _emit({"written": written, "out": str(args.out), "spec": spec.__dict__})


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = Parser(prog="dyntex", formatter_class=fmt,
                    description="Dynamic texture synthesis with kernel similarity embedding.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("train", formatter_class=fmt, help="train a KSE1 model from a frame directory")
    _add_frame_options(p)
    p.add_argument("--out", required=True, type=Path, metavar="FILE", help="model file to write")
    p.add_argument("--kernel", type=_kernel, default=DEFAULT_KERNEL, help="kernel spec, family:key=value,...")
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=DEFAULT_LAMBDA, help="ridge factor")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synthesize", formatter_class=fmt, help="roll a KSE1/ELM1/LDS1 model out to frames")
    p.add_argument("--model", required=True, type=Path, metavar="FILE")
    p.add_argument("--count", type=int, default=100, metavar="L", help="frames to write, seed included")
    seed = p.add_mutually_exclusive_group()
    seed.add_argument("--seed", type=Path, default=None, metavar="IMG",
                      help="seed image (default: training frame 1)")
    p.add_argument("--seed-index", type=int, default=None, metavar="K",
                   help="1-based frame index into --seed-frames, or into the training frames")
    seed.add_argument("--seed-frames", type=Path, default=None, metavar="DIR",
                      help="directory to take the --seed-index frame from")
    p.add_argument("--out", required=True, type=Path, metavar="DIR")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", formatter_class=fmt, help="PSNR/SSIM of generated vs observed frames")
    p.add_argument("--observed", required=True, type=Path, metavar="DIR")
    p.add_argument("--generated", required=True, type=Path, metavar="DIR")
    p.add_argument("--csv", type=Path, default=None, metavar="FILE", help="per-frame CSV output")
    p.add_argument("--start-index", type=int, default=2, help="first compared frame (1-based)")
    p.add_argument("--cap-db", type=_positive_float, default=100.0, help="PSNR ceiling for identical frames")
    p.add_argument("--max-frames", type=int, default=None, metavar="N")
    p.add_argument("--resize", type=_size, default=None, metavar="WxH")
    p.add_argument("--gray", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gridsearch", formatter_class=fmt, help="(lambda, gamma) sweep with a Gaussian kernel")
    _add_frame_options(p)
    p.add_argument("--lambdas", nargs="+", default=[",".join(repr(v) for v in DEFAULT_LAMBDAS)],
                   help="ridge factors, space or comma separated (default: 2^-30..2^10 step 2^2)")
    p.add_argument("--gammas", nargs="+", default=[",".join(repr(v) for v in DEFAULT_GAMMAS)],
                   help="bandwidths or 'auto' (default: 2^-18..2^18 step 2^2)")
    p.add_argument("--train-frames", type=int, default=None, help="default: all frames minus --eval-frames")
    p.add_argument("--eval-frames", type=int, default=0)
    p.add_argument("--csv", type=Path, default=None, metavar="FILE")
    p.add_argument("--json", type=Path, default=None, metavar="FILE", help="summary with config echoed")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("baseline", formatter_class=fmt, help="train an LDS1 or ELM1 baseline model")
    kinds = p.add_subparsers(dest="kind", metavar="KIND", parser_class=Parser)
    kinds.required = True
    for kind in ("lds", "elm"):
        q = kinds.add_parser(kind, formatter_class=fmt, help=f"{kind.upper()} baseline")
        _add_frame_options(q)
        q.add_argument("--out", required=True, type=Path, metavar="FILE")
        q.add_argument("--count", type=int, default=100, help="frames to synthesize with --synth-out")
        q.add_argument("--synth-out", type=Path, default=None, metavar="DIR",
                       help="also write a rollout seeded from frame 1")
        q.add_argument("--format", choices=("png", "pgm"), default="png")
        if kind == "lds":
            q.add_argument("--state-dim", type=int, default=baselines.DEFAULT_STATE_DIM)
        else:
            q.add_argument("--nodes", type=int, default=1000, help="hidden nodes T")
            q.add_argument("--lambda", dest="lam", type=_positive_float, default=1e-6)
            q.add_argument("--rng-seed", type=int, default=0)
            q.add_argument("--activation", choices=sorted(baselines.ACTIVATIONS), default="sigmoid")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("bench", formatter_class=fmt,
                       help="time training and rollout (default: synthetic 150x100, 200 frames)")
    _add_frame_options(p, required=False)
    p.add_argument("--kernel", type=_kernel, default=DEFAULT_KERNEL)
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=DEFAULT_LAMBDA)
    p.add_argument("--gen-frames", type=int, default=1200)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("heatmap", formatter_class=fmt, help="export the training Gram matrix")
    _add_frame_options(p)
    p.add_argument("--kernel", type=_kernel, default=DEFAULT_KERNEL)
    p.add_argument("--csv", required=True, type=Path, metavar="FILE")
    p.add_argument("--pgm", type=Path, default=None, metavar="FILE")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("synthetic", formatter_class=fmt, help="write a synthetic texture sequence")
    p.add_argument("--pattern", choices=harness.PATTERNS, default="translating_sine")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--period", type=int, default=20)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path, metavar="DIR")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=cmd_synthetic)
    return parser


def _thread_limit():
    raw = os.environ.get("DYNTEX_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"DYNTEX_THREADS must be an integer, got {raw!r}") from None
    if n <= 0:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        limiter = _thread_limit()
        try:
            args.func(args)
        finally:
            if limiter is not None:
                limiter.unregister()
    except UsageError as exc:
        print(f"dyntex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"dyntex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DyntexError as exc:
        print(f"dyntex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"dyntex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
