"""Command-line interface: ``repsel {select,evaluate,compare,gen-toy,gen-surrogate}``.

Exit codes: 0 success, 2 bad arguments, 3 invalid data, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from repsel import __version__
from repsel.dataset import DataError, load_csv
from repsel.optimizer import OptimizerConfig

logger = logging.getLogger("repsel")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


# argument types -----------------------------------------------------------

def _ratio(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"ratio must lie in (0, 1], got {text}")
    return v


def _ratios(text):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty ratio list")
    return [_ratio(p.strip()) for p in parts]


def _int_at_least(low):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < low:
            raise argparse.ArgumentTypeError(f"must be >= {low}, got {v}")
        return v
    return parse


def _seed(text):
    v = _int_at_least(0)(text)
    if v >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _batch(text):
    if text == "full":
        return "full"
    return _int_at_least(1)(text)


# manifest -----------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(primary) -> Path:
    primary = Path(primary)
    return primary.with_name(primary.name + ".manifest.json")


def write_manifest(args, started: float, outputs) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")}
    manifest = {
        "command": args.command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "input_sha256": file_digest(args.input) if getattr(args, "input", None) else None,
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    path = args.manifest or manifest_path(outputs[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(n_points=1, max_iters=args.max_iters, tol=args.tol,
                           batch_size=args.batch_size, seed=args.seed)


# commands -----------------------------------------------------------------

def cmd_select(args) -> int:
    from repsel.spnn import select_random, select_spnn

    started = time.perf_counter()
    data = load_csv(args.input, args.label_col)
    target = args.ratio if args.ratio is not None else args.nv
    if args.method == "spnn":
        result = select_spnn(data, target, _optimizer_config(args))
    else:
        result = select_random(data, target, args.seed)
    result.write_ids(args.out_ids)
    result.write_report(args.report)
    outputs = [args.out_ids, args.report]
    if args.figure:
        from repsel.plotting import plot_selection

        plot_selection(data, result, args.figure)
        outputs.append(args.figure)
    write_manifest(args, started, outputs)
    logger.info("selected %d rows (%s) -> %s", result.nv, result.method, args.out_ids)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from repsel.evalharness import holdout_metrics, loo_metrics, positive_class, split
    from repsel.spnn import read_ids

    started = time.perf_counter()
    data = load_csv(args.input, args.label_col)
    ids = read_ids(args.ids)
    if not ids:
        raise DataError(f"{args.ids}: no validation ids")
    data.positions_of(ids)
    positive = positive_class(data.labels, args.positive)
    train, val = split(data, ids)
    report = {
        "validation": holdout_metrics(train, val, args.ridge, positive).as_dict(),
        "loo_train": loo_metrics(train, args.ridge, positive, source="loo-train").as_dict(),
        "n_train": len(train),
        "n_validation": len(val),
        "positive_label": positive,
    }
    _write_json(report, args.out)
    write_manifest(args, started, [args.out])
    return EXIT_OK


def cmd_compare(args) -> int:
    from repsel.evalharness import ratio_sweep, write_table

    started = time.perf_counter()
    data = load_csv(args.input, args.label_col)
    rows = ratio_sweep(data, args.ratios, _optimizer_config(args), args.replicates, args.seed,
                       args.ridge, args.positive)
    write_table(rows, args.out)
    outputs = [args.out]
    if args.figure:
        from repsel.plotting import plot_sweep

        plot_sweep(rows, args.figure)
        outputs.append(args.figure)
    write_manifest(args, started, outputs)
    return EXIT_OK


def cmd_gen_toy(args) -> int:
    from repsel.evalharness import generate_toy

    started = time.perf_counter()
    generate_toy(args.n, args.seed).to_csv(args.out, label_column="y")
    write_manifest(args, started, [args.out])
    return EXIT_OK


def cmd_gen_surrogate(args) -> int:
    from repsel.evalharness import generate_surrogate

    started = time.perf_counter()
    if not 0 < args.n_positive < args.n:
        raise DataError("--n-positive must lie strictly between 0 and --n")
    generate_surrogate(args.n, args.d, args.n_positive, args.seed).to_csv(args.out, label_column="y")
    write_manifest(args, started, [args.out])
    return EXIT_OK


# parser -------------------------------------------------------------------

def _add_data_args(p) -> None:
    p.add_argument("--input", required=True, help="CSV with a header row")
    p.add_argument("--label-col", required=True, help="name of the class label column")


def _add_optimizer_args(p) -> None:
    g = p.add_argument_group("support-point optimizer")
    g.add_argument("--max-iters", type=_int_at_least(1), default=500)
    g.add_argument("--tol", type=_positive_float, default=1e-6)
    g.add_argument("--batch-size", type=_batch, default=None,
                   help="rows per iteration, or 'full' (default: full up to 10000 rows)")


def build_parser() -> argparse.ArgumentParser:
    from repsel.evalharness import DEFAULT_RATIOS, DEFAULT_RIDGE, MIN_REPLICATES

    parser = argparse.ArgumentParser(prog="repsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="choose a stratified validation subset")
    _add_data_args(p)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--ratio", type=_ratio, help="fraction of rows to select")
    size.add_argument("--nv", type=_int_at_least(1), help="number of rows to select")
    p.add_argument("--method", choices=("spnn", "random"), default="spnn")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out-ids", default="validation_ids.csv")
    p.add_argument("--report", default="selection_report.json")
    p.add_argument("--figure", help="optional image of the selection (first two features)")
    p.add_argument("--manifest", help="run manifest path (default: <out-ids>.manifest.json)")
    _add_optimizer_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score a validation split with the logistic protocol")
    _add_data_args(p)
    p.add_argument("--ids", required=True, help="CSV of validation row ids (header 'row_id')")
    p.add_argument("--ridge", type=_nonneg_float, default=DEFAULT_RIDGE)
    p.add_argument("--positive", help="positive class label (default: 1, else the last class)")
    p.add_argument("--out", default="metrics.json")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="SPNN vs random splits over a grid of ratios")
    _add_data_args(p)
    p.add_argument("--ratios", type=_ratios, default=list(DEFAULT_RATIOS),
                   help="comma-separated validation ratios (default: %(default)s)")
    p.add_argument("--replicates", type=_int_at_least(MIN_REPLICATES), default=200)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--ridge", type=_nonneg_float, default=DEFAULT_RIDGE)
    p.add_argument("--positive")
    p.add_argument("--out", default="comparison.csv")
    p.add_argument("--figure", help="optional image of the comparison (error rate, sensitivity)")
    p.add_argument("--manifest")
    _add_optimizer_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-toy", help="write the two-feature indicator toy dataset")
    p.add_argument("--n", type=_int_at_least(2), default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default="toy.csv")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_gen_toy)

    p = sub.add_parser("gen-surrogate", help="write a wide, balanced, overlapping two-class dataset")
    p.add_argument("--n", type=_int_at_least(3), default=90)
    p.add_argument("--d", type=_int_at_least(1), default=25)
    p.add_argument("--n-positive", type=_int_at_least(1), default=44)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default="surrogate.csv")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_gen_surrogate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"repsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal failure", exc_info=True)
        print(f"repsel: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
