"""Training loop with early stopping, evaluation, prediction and the correlation baseline."""

from __future__ import annotations

import io
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from . import metrics
from .autonet import Adam, Network
from .checkpoint import Checkpoint
from .core import (
    ConfigError,
    DivergedLoss,
    EmptySplit,
    ExpressionMatrix,
    LabeledDataset,
    PairExample,
    SingleClass,
    Split,
)
from .model import network_inputs
from .preprocess import featurize_batch
from .rng import STREAM_TRAIN, Rng

log = logging.getLogger(__name__)

PRECISIONS = {"fast32": np.float32, "check64": np.float64}
EVAL_CHUNK = 256


class TrainOptions(BaseModel):
    """Training schedule.  ``batch_size``/``lr`` fall back to the model config."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_epochs: int = 100
    patience: int = 10
    batch_size: Optional[int] = None
    lr: Optional[float] = None
    seed: int = 42
    precision: Literal["fast32", "check64"] = "fast32"
    shuffle_each_epoch: bool = True

    @model_validator(mode="after")
    def _check(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if not 1 <= self.patience <= self.max_epochs:
            raise ValueError("patience must lie in [1, max_epochs]")
        if self.batch_size is not None and self.batch_size < 2:
            raise ValueError("batch_size must be at least 2 (batch normalization)")
        if self.lr is not None and not self.lr >= 0:
            raise ValueError("lr must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        return self

    @classmethod
    def parse(cls, data: dict) -> "TrainOptions":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def dtype(self):
        return PRECISIONS[self.precision]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_auroc_micro: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "val_auroc_micro"])
        for r in self.records:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.val_auroc_micro)])
        return buf.getvalue()


@dataclass
class SplitArrays:
    stacked: np.ndarray
    product: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    @classmethod
    def build(cls, dataset: LabeledDataset, matrix: ExpressionMatrix, dtype) -> "SplitArrays":
        stacked, product = featurize_batch(dataset.pairs, matrix, dtype)
        return cls(stacked, product, dataset.labels())

    def take(self, idx) -> "SplitArrays":
        return SplitArrays(self.stacked[idx], self.product[idx], self.labels[idx])


@dataclass
class MetricsReport:
    auroc_micro: float
    aupr_micro: float
    mcc_class1: float
    mcc_class2: float
    confusion: dict
    roc: list
    pr: list
    n_train: int = 0
    n_val: int = 0
    n_test: int = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_probabilities(cls, probabilities, labels, **counts) -> "MetricsReport":
        return cls(**metrics.summarize(probabilities, labels), **counts)

    def summary(self) -> dict:
        out = {
            "auroc_micro": self.auroc_micro,
            "aupr_micro": self.aupr_micro,
            "mcc_class1": self.mcc_class1,
            "mcc_class2": self.mcc_class2,
            "confusion": self.confusion,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
        }
        out.update(self.extra)
        return out


def batch_slices(n: int, batch_size: int) -> list[slice]:
    """Consecutive batches; a trailing batch of one joins its predecessor."""
    starts = list(range(0, n, batch_size))
    bounds = [(s, min(s + batch_size, n)) for s in starts]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] == 1:
        last = bounds.pop()
        bounds[-1] = (bounds[-1][0], last[1])
    return [slice(a, b) for a, b in bounds]


def predict_arrays(network: Network, data: SplitArrays, chunk: int = EVAL_CHUNK) -> np.ndarray:
    """Inference-mode class probabilities.

    Every chunk is zero-padded to exactly ``chunk`` rows so the matrix
    kernels always see the same shapes; results are then bitwise identical
    however the caller batches its pairs.
    """
    out = []
    for s in range(0, len(data), chunk):
        part = data.take(slice(s, s + chunk))
        n = len(part)
        stacked = np.zeros((chunk, *part.stacked.shape[1:]), dtype=part.stacked.dtype)
        product = np.zeros((chunk, *part.product.shape[1:]), dtype=part.product.dtype)
        stacked[:n] = part.stacked
        product[:n] = part.product
        out.append(network.predict_proba(network_inputs(network, stacked, product))[:n])
    if not out:
        return np.empty((0, 2), dtype=network.dtype)
    return np.concatenate(out)


def _val_metrics(network: Network, val: SplitArrays) -> tuple[float, float]:
    probs = predict_arrays(network, val)
    logp = np.log(np.clip(probs[np.arange(len(val)), val.labels].astype(np.float64), 1e-300, None))
    loss = float(-logp.mean())
    auroc, _ = metrics.micro_average_ovr(metrics.one_vs_all(probs, val.labels))
    return loss, auroc


def train(
    network: Network,
    train_set: LabeledDataset,
    val_set: LabeledDataset,
    matrix: ExpressionMatrix,
    opts: TrainOptions,
) -> tuple[Checkpoint, TrainHistory]:
    """Mini-batch Adam with early stopping on validation micro-AUROC.

    Random draws come from one stream derived from ``opts.seed``: at the start
    of every epoch a permutation of the training set (when shuffling), then
    each batch's dropout masks in forward order.  The returned checkpoint
    holds the weights of the earliest epoch with the best validation AUROC.
    """
    config = network.meta["config"]
    batch_size = opts.batch_size or config.batch_size
    lr = config.lr if opts.lr is None else opts.lr
    for name, ds in (("train", train_set), ("val", val_set)):
        if len(ds) == 0:
            raise EmptySplit(f"{name} split is empty")
    if len(set(val_set.labels().tolist())) < 2:
        raise EmptySplit("val split needs both classes")
    dtype = network.dtype
    tr = SplitArrays.build(train_set, matrix, dtype)
    va = SplitArrays.build(val_set, matrix, dtype)

    rng = Rng.derived(opts.seed, STREAM_TRAIN)
    network.set_rng(rng)
    optimizer = Adam(network.named_parameters(), lr=lr)
    history = TrainHistory()
    best_auroc = -math.inf
    best: Checkpoint | None = None
    wait = 0
    extra_base = {
        "precision": opts.precision,
        "train_options": opts.model_dump(),
        "effective_batch_size": batch_size,
        "effective_lr": lr,
    }
    for epoch in range(1, opts.max_epochs + 1):
        order = rng.permutation(len(tr)) if opts.shuffle_each_epoch else np.arange(len(tr))
        total = 0.0
        for sl in batch_slices(len(tr), batch_size):
            batch = tr.take(order[sl])
            loss = network.loss_and_grad(
                network_inputs(network, batch.stacked, batch.product), batch.labels, train=True
            )
            if not math.isfinite(loss):
                raise DivergedLoss(f"training loss became {loss} in epoch {epoch}")
            optimizer.step()
            total += loss * len(batch)
        train_loss = total / len(tr)
        val_loss, val_auroc = _val_metrics(network, va)
        history.records.append(EpochRecord(epoch, train_loss, val_loss, val_auroc))
        log.info(
            "epoch",
            extra={"fields": {"epoch": epoch, "train_loss": train_loss,
                              "val_loss": val_loss, "val_auroc_micro": val_auroc}},
        )
        if val_auroc > best_auroc:
            best_auroc = val_auroc
            history.best_epoch = epoch
            wait = 0
            best = Checkpoint.from_network(
                network, opts.seed, {**extra_base, "best_epoch": epoch}
            )
        else:
            wait += 1
            if wait >= opts.patience:
                break
    return best, history


def evaluate(checkpoint: Checkpoint | Network, dataset: LabeledDataset, matrix: ExpressionMatrix,
             dtype=np.float32) -> MetricsReport:
    """Inference-mode metrics over one split."""
    network = checkpoint.to_network(dtype) if isinstance(checkpoint, Checkpoint) else checkpoint
    if len(dataset) == 0:
        raise EmptySplit("cannot evaluate an empty split")
    data = SplitArrays.build(dataset, matrix, network.dtype)
    if len(set(data.labels.tolist())) < 2:
        raise SingleClass("evaluation split needs both classes")
    return MetricsReport.from_probabilities(predict_arrays(network, data), data.labels)


def predict(checkpoint: Checkpoint | Network, pairs: Sequence[tuple[str, str] | PairExample],
            matrix: ExpressionMatrix, dtype=np.float32) -> np.ndarray:
    """Interaction-class probability per pair, in input order."""
    network = checkpoint.to_network(dtype) if isinstance(checkpoint, Checkpoint) else checkpoint
    stacked, product = featurize_batch(pairs, matrix, network.dtype)
    data = SplitArrays(stacked, product, np.zeros(len(pairs), dtype=np.int64))
    return predict_arrays(network, data)[:, metrics.INTERACTION]


def abs_pearson(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Row-wise |Pearson r|; rows where either side is constant score 0."""
    xa = np.atleast_2d(xa).astype(np.float64)
    xb = np.atleast_2d(xb).astype(np.float64)
    da = xa - xa.mean(axis=1, keepdims=True)
    db = xb - xb.mean(axis=1, keepdims=True)
    na = np.sqrt((da * da).sum(axis=1))
    nb = np.sqrt((db * db).sum(axis=1))
    constant = (np.ptp(xa, axis=1) == 0) | (np.ptp(xb, axis=1) == 0)
    denom = np.where(constant, 1.0, na * nb)
    r = (da * db).sum(axis=1) / denom
    return np.where(constant, 0.0, np.clip(np.abs(r), 0.0, 1.0))


def correlation_baseline(dataset: LabeledDataset, matrix: ExpressionMatrix) -> MetricsReport:
    """Score each pair by |Pearson r| and report it like a two-class model (probabilities 1-s, s)."""
    if len(dataset) == 0:
        raise EmptySplit("cannot score an empty split")
    stacked, _ = featurize_batch(dataset.pairs, matrix)
    s = abs_pearson(stacked[:, 0], stacked[:, 1])
    labels = dataset.labels()
    if len(set(labels.tolist())) < 2:
        raise SingleClass("baseline split needs both classes")
    return MetricsReport.from_probabilities(np.stack([1 - s, s], axis=1), labels)


def split_counts(dataset: LabeledDataset) -> dict:
    return {f"n_{s.value}": len(dataset.by_split(s)) for s in (Split.TRAIN, Split.VAL, Split.TEST)}
