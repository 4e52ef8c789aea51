"""Command-line entry point: ``gener <command> ...``.

Exit codes: 0 ok, 2 config error, 3 data error, 4 training failure,
5 checkpoint/data incompatibility.  Standard output carries only the final
JSON document; logs go to standard error as one JSON object per line.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .checkpoint import Checkpoint, read_checkpoint, save_checkpoint, write_atomic
from .config import RunConfig, load_grid, load_run_config
from .core import CompatibilityError, ConfigError, EmptySplit, GenerError, IoFailure, Split
from .ingest import (
    SynthSpec,
    generate_synthetic,
    parse_expression_tsv,
    write_expression_tsv,
    write_pairs_tsv,
)
from .model import ARCH_CNN, ARCH_GENER, build_network
from .pipeline import prepare
from .preprocess import format_manifest, parse_manifest
from .rng import STREAM_INIT, derive_seed
from .trainer import (
    PRECISIONS,
    TrainOptions,
    correlation_baseline,
    evaluate,
    predict,
    split_counts,
    train,
)

log = logging.getLogger("gener")

MANIFEST = "manifest.tsv"
MATRIX = "matrix.norm.tsv"
MODEL = "model.genr"
HISTORY = "history.csv"
REPORT = "report.json"
LEADERBOARD = "leaderboard.csv"
BASELINE_REPORT = "baseline_report.json"


class JsonFormatter(logging.Formatter):
    def format(self, record):
        doc = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        doc.update(getattr(record, "fields", {}))
        return json.dumps(doc, sort_keys=True)


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    root = logging.getLogger("gener")
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO if verbose else logging.WARNING)
    root.propagate = False


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _emit(doc) -> None:
    sys.stdout.write(_dumps(doc))
    sys.stdout.flush()


def _write_text(path: Path, text: str) -> None:
    write_atomic(path, text.encode("utf-8"))


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "uppercase_genes", False):
        cfg.data.uppercase_genes = True
    if getattr(args, "header", False):
        cfg.data.interactions_header = True
    if getattr(args, "subsample_both", None) is not None:
        if not 0 < args.subsample_both <= 1:
            raise ConfigError("--subsample-both must lie in (0, 1]")
        cfg.data.subsample_both = args.subsample_both
    return cfg


def _train_options(cfg: RunConfig, args) -> TrainOptions:
    doc = {**cfg.train, "seed": cfg.seed}
    if getattr(args, "precision", None):
        doc["precision"] = args.precision
    return TrainOptions.parse(doc)


def _load_prepared(args):
    out = Path(args.out)
    manifest_path = Path(args.manifest) if args.manifest else out / MANIFEST
    matrix_path = Path(args.matrix) if args.matrix else out / MATRIX
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {manifest_path}: {exc}") from None
    if not matrix_path.exists():
        raise IoFailure(f"matrix file {matrix_path} does not exist")
    matrix = parse_expression_tsv(matrix_path)
    dataset = parse_manifest(text, str(matrix_path))
    dataset.check_genes(matrix)
    return dataset, matrix


# -- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SynthSpec(args.modules, args.genes_per_module, args.length, args.sigma, args.seed if args.seed is not None else 7)
    matrix, dataset = generate_synthetic(spec)
    out = Path(args.out)
    positives = [p.key for p in dataset if p.label == 1]
    _, counts = np.unique(matrix.values, axis=0, return_counts=True)
    duplicate_rows = int((counts[counts > 1]).sum())
    if duplicate_rows:
        log.warning("identical expression rows", extra={"fields": {"duplicate_rows": duplicate_rows}})
    buf = io.StringIO()
    write_expression_tsv(matrix, buf)
    _write_text(out / "expression.tsv", buf.getvalue())
    buf = io.StringIO()
    write_pairs_tsv(positives, buf)
    _write_text(out / "interactions.tsv", buf.getvalue())
    config = {
        "seed": 42,
        "data": {
            "expression_path": "expression.tsv",
            "interactions_path": "interactions.tsv",
            "normalization": "standardize",
            "negatives": "sampled",
            "split_fractions": {"train": 0.8, "val": 0.1, "test": 0.1},
        },
        "model": {},
        "train": {},
    }
    _write_text(out / "config.json", _dumps(config))
    _emit({
        "genes": len(matrix),
        "L": matrix.L,
        "positives_written": len(positives),
        "duplicate_rows": duplicate_rows,
        "spec": spec.__dict__,
    })
    return 0


def cmd_prepare(args) -> int:
    cfg = _load_config(args)
    prepared = prepare(cfg.data, cfg.seed)
    out = Path(args.out)
    buf = io.StringIO()
    write_expression_tsv(prepared.matrix, buf)
    matrix_text = buf.getvalue()
    manifest_text = format_manifest(prepared.dataset)
    _write_text(out / MATRIX, matrix_text)
    _write_text(out / MANIFEST, manifest_text)
    _emit(prepared.stats)
    return 0


def _arch(args) -> str:
    return ARCH_CNN if args.arch == "cnn" else ARCH_GENER


def cmd_train(args) -> int:
    cfg = _load_config(args)
    opts = _train_options(cfg, args)
    dataset, matrix = _load_prepared(args)
    config = cfg.gener_config().with_L(matrix.L)
    net = build_network(_arch(args), config, opts.dtype, derive_seed(opts.seed, STREAM_INIT))
    ckpt, history = train(net, dataset.by_split(Split.TRAIN), dataset.by_split(Split.VAL), matrix, opts)
    out = Path(args.out)
    report = evaluate(ckpt, dataset.by_split(Split.VAL), matrix, opts.dtype)
    summary = _model_summary(report, dataset, ckpt, "val")
    summary["best_epoch"] = history.best_epoch
    summary["epochs_run"] = len(history.records)
    save_checkpoint(ckpt, out / MODEL)
    _write_text(out / HISTORY, history.to_csv())
    _write_text(out / REPORT, _dumps(summary))
    _emit(summary)
    return 0


def _model_summary(report, dataset, ckpt: Checkpoint, split: str) -> dict:
    for k, v in split_counts(dataset).items():
        setattr(report, k, v)
    summary = report.summary()
    summary.update({
        "architecture": ckpt.architecture,
        "split": split,
        "model_config": ckpt.config.model_dump(),
        "train_options": ckpt.extra.get("train_options"),
    })
    return summary


def _write_curves(out: Path, report, area_prefix: str = "") -> None:
    metrics.export_curve_csv(report.roc, out / "roc.csv", ("fpr", "tpr"))
    metrics.export_curve_csv(report.pr, out / "pr.csv", ("recall", "precision"))
    metrics.render_curve_svg(report.roc, "False positive rate", "True positive rate",
                             out / "roc.svg", f"{area_prefix}micro AUROC", report.auroc_micro)
    metrics.render_curve_svg(report.pr, "Recall", "Precision",
                             out / "pr.svg", f"{area_prefix}micro AUPR", report.aupr_micro)


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    ckpt = read_checkpoint(args.checkpoint or out / MODEL)
    dataset, matrix = _load_prepared(args)
    if ckpt.config.L != matrix.L:
        raise CompatibilityError(
            f"checkpoint expects expression length {ckpt.config.L}, matrix has {matrix.L}"
        )
    dtype = PRECISIONS[args.precision or ckpt.extra.get("precision", "fast32")]
    report = evaluate(ckpt, dataset.by_split(args.split), matrix, dtype)
    summary = _model_summary(report, dataset, ckpt, args.split)
    _write_curves(out, report)
    _write_text(out / REPORT, _dumps(summary))
    _emit(summary)
    return 0


def cmd_gridsearch(args) -> int:
    from .gridsearch import grid_search, leaderboard_csv

    cfg = _load_config(args)
    grid = load_grid(args.grid) if args.grid else cfg.grid
    if grid is None:
        raise ConfigError("gridsearch needs a grid section in the config or --grid PATH")
    opts = _train_options(cfg, args)
    dataset, matrix = _load_prepared(args)
    base = cfg.gener_config().with_L(matrix.L)
    best, board = grid_search(
        grid, base, _arch(args), dataset.by_split(Split.TRAIN), dataset.by_split(Split.VAL),
        matrix, opts, jobs=args.jobs,
    )
    out = Path(args.out)
    save_checkpoint(best.checkpoint, out / MODEL)
    _write_text(out / HISTORY, best.history.to_csv())
    _write_text(out / LEADERBOARD, leaderboard_csv(board))
    _emit({"best": best.row, "points": len(board)})
    return 0


def cmd_baseline(args) -> int:
    dataset, matrix = _load_prepared(args)
    report = correlation_baseline(dataset.by_split(args.split), matrix)
    for k, v in split_counts(dataset).items():
        setattr(report, k, v)
    summary = report.summary()
    summary.update({"architecture": "correlation", "split": args.split})
    _write_text(Path(args.out) / BASELINE_REPORT, _dumps(summary))
    _emit(summary)
    return 0


def cmd_predict(args) -> int:
    out = Path(args.out)
    ckpt = read_checkpoint(args.checkpoint or out / MODEL)
    matrix_path = Path(args.matrix) if args.matrix else out / MATRIX
    matrix = parse_expression_tsv(matrix_path)
    if ckpt.config.L != matrix.L:
        raise CompatibilityError(
            f"checkpoint expects expression length {ckpt.config.L}, matrix has {matrix.L}"
        )
    try:
        lines = Path(args.pairs).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read pairs {args.pairs}: {exc}") from None
    pairs = [tuple(ln.split("\t")[:2]) for ln in lines if ln.strip()]
    probs = predict(ckpt, pairs, matrix, PRECISIONS[ckpt.extra.get("precision", "fast32")])
    _emit({"predictions": [
        {"gene_a": a, "gene_b": b, "probability": float(p)} for (a, b), p in zip(pairs, probs)
    ]})
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gener", description="Gene-pair interaction prediction.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, data=True):
        p.add_argument("--out", required=True, help="run directory")
        p.add_argument("--seed", type=int, default=None)
        if config:
            p.add_argument("--config")
        if data:
            p.add_argument("--manifest", help="default: OUT/manifest.tsv")
            p.add_argument("--matrix", help="default: OUT/matrix.norm.tsv")

    p = sub.add_parser("synth", help="write a synthetic module dataset")
    common(p, config=False, data=False)
    p.add_argument("--modules", type=int, default=10)
    p.add_argument("--genes-per-module", type=int, default=10)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--sigma", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="ingest, normalize, balance and split")
    common(p, data=False)
    p.add_argument("--uppercase-genes", action="store_true")
    p.add_argument("--header", action="store_true", help="interaction file has a header row")
    p.add_argument("--subsample-both", type=float, default=None)
    p.set_defaults(func=cmd_prepare)

    for name, func, help_ in (("train", cmd_train, "train one model"),
                              ("gridsearch", cmd_gridsearch, "train every grid point")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--arch", choices=["gener", "cnn"], default="gener")
        p.add_argument("--precision", choices=list(PRECISIONS), default=None)
        if name == "gridsearch":
            p.add_argument("--grid", help="grid JSON (default: config 'grid' section)")
            p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="metrics, curves and plots for a split")
    common(p, config=False)
    p.add_argument("--checkpoint")
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--precision", choices=list(PRECISIONS), default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="|Pearson r| baseline on a split")
    common(p, config=False)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("predict", help="interaction probabilities for gene pairs")
    common(p, config=False, data=False)
    p.add_argument("--matrix", help="default: OUT/matrix.norm.tsv")
    p.add_argument("--checkpoint")
    p.add_argument("--pairs", required=True, help="TSV of gene_a, gene_b")
    p.set_defaults(func=cmd_predict)
    return parser


# exit code overrides per command: training-time data problems are training failures
_TRAINING_COMMANDS = {"train", "gridsearch"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except GenerError as exc:
        code = exc.exit_code
        if args.command in _TRAINING_COMMANDS and isinstance(exc, EmptySplit):
            code = 4
        if args.command == "prepare" and code not in (2, 3):
            code = 3
        log.error(str(exc), extra={"fields": {"error": type(exc).__name__, "exit_code": code}})
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
