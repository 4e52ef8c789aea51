"""Grid search over model hyperparameters, ranked by validation micro-AUROC."""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .checkpoint import Checkpoint
from .config import GridSection
from .core import ConfigError, ExpressionMatrix, LabeledDataset
from .model import GenerConfig, build_network
from .rng import STREAM_INIT, derive_seed
from .trainer import TrainHistory, TrainOptions, train

GRID_KEYS = ("lr", "dropout_rate", "conv_filters", "dense_units")


class EmptyGrid(ConfigError):
    pass


def grid_points(grid: GridSection, base: GenerConfig) -> list[GenerConfig]:
    """Cartesian product in key order lr, dropout_rate, conv_filters, dense_units
    (last key varies fastest)."""
    axes = []
    for key in GRID_KEYS:
        values = getattr(grid, key)
        if values is None:
            values = [getattr(base, key)]
        if len(values) == 0:
            raise EmptyGrid(f"grid axis {key!r} is empty")
        axes.append(values)
    return [
        GenerConfig.parse({**base.model_dump(), **dict(zip(GRID_KEYS, combo))})
        for combo in itertools.product(*axes)
    ]


@dataclass
class GridResult:
    index: int
    config: GenerConfig
    val_auroc: float
    val_loss: float
    best_epoch: int
    checkpoint: Checkpoint
    history: TrainHistory

    @property
    def row(self) -> dict:
        return {
            "config_hash": self.config.digest(),
            "point": self.index,
            "lr": self.config.lr,
            "dropout_rate": self.config.dropout_rate,
            "conv_filters": json.dumps(self.config.conv_filters),
            "dense_units": self.config.dense_units,
            "val_auroc": self.val_auroc,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
        }


def run_point(index, config, arch, train_set, val_set, matrix, opts: TrainOptions) -> GridResult:
    """Train one grid point with seed ``opts.seed XOR index``."""
    seed = opts.seed ^ index
    point_opts = opts.model_copy(update={"seed": seed})
    net = build_network(arch, config, opts.dtype, derive_seed(seed, STREAM_INIT))
    ckpt, hist = train(net, train_set, val_set, matrix, point_opts)
    best = hist.records[hist.best_epoch - 1]
    return GridResult(index, config, best.val_auroc_micro, best.val_loss, hist.best_epoch, ckpt, hist)


def _run_packed(args):
    return run_point(*args)


def grid_search(
    grid: GridSection,
    base: GenerConfig,
    arch: str,
    train_set: LabeledDataset,
    val_set: LabeledDataset,
    matrix: ExpressionMatrix,
    opts: TrainOptions,
    jobs: int = 1,
) -> tuple[GridResult, list[GridResult]]:
    """Train every grid point; return the winner and the sorted leaderboard.

    Ranking: higher validation AUROC, then lower validation loss, then the
    canonical JSON of the config.
    """
    points = grid_points(grid, base)
    if not points:
        raise EmptyGrid("grid has no points")
    tasks = [(i, cfg, arch, train_set, val_set, matrix, opts) for i, cfg in enumerate(points)]
    if jobs <= 1 or len(tasks) == 1:
        results = [_run_packed(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_packed, tasks))
    board = sorted(results, key=lambda r: (-r.val_auroc, r.val_loss, r.config.canonical_json()))
    return board[0], board


def leaderboard_csv(board: list[GridResult]) -> str:
    buf = io.StringIO()
    fields = list(board[0].row.keys())
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in board:
        row = r.row
        row["val_auroc"] = repr(row["val_auroc"])
        row["val_loss"] = repr(row["val_loss"])
        w.writerow(row)
    return buf.getvalue()
