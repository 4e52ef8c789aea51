"""Normalization, class balancing, splitting and pair featurization."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    ConfigError,
    DataError,
    EmptySplit,
    ExpressionMatrix,
    LabeledDataset,
    PairExample,
    PairFeatures,
    SingleClass,
    Split,
    canonicalize_pair,
)
from .rng import Rng


class NormalizationKind(str, Enum):
    STANDARDIZE = "standardize"
    QUANTILE = "quantile"
    NONE = "none"


@dataclass(frozen=True)
class SplitFractions:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1

    def __post_init__(self):
        for name in ("train", "val", "test"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"split fraction {name}={v} must lie in (0, 1)")
        if abs(self.train + self.val + self.test - 1) > 1e-12:
            raise ConfigError("split fractions must sum to 1")


def standardize_rows(matrix: ExpressionMatrix) -> ExpressionMatrix:
    """Row z-scores with the population standard deviation.

    Constant rows become all zeros instead of NaN.
    """
    x = matrix.values
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)
    # subnormal spreads can underflow std to zero even when ptp > 0
    constant = (np.ptp(x, axis=1) == 0) | (std[:, 0] == 0)
    std[constant] = 1.0
    out = (x - mean) / std
    out[constant] = 0.0
    return matrix.with_values(out)


def quantile_normalize_columns(matrix: ExpressionMatrix) -> ExpressionMatrix:
    """Rank-mean quantile normalization across conditions.

    Values tied within a column all receive the mean of the rank means over
    the tied ranks.  Each output value is computed as one division of a sum,
    so integer inputs give correctly rounded rational results.
    """
    x = matrix.values
    n, ncols = x.shape
    order = np.argsort(x, axis=0, kind="stable")
    sorted_x = np.take_along_axis(x, order, axis=0)
    rank_sums = sorted_x.sum(axis=1)
    out = np.empty_like(x)
    for c in range(ncols):
        col = sorted_x[:, c]
        # boundaries of runs of equal values
        starts = np.flatnonzero(np.concatenate([[True], col[1:] != col[:-1]]))
        ends = np.append(starts[1:], n)
        vals = np.empty(n)
        for s, e in zip(starts, ends):
            if e - s == 1:
                vals[s] = rank_sums[s] / ncols
            else:
                vals[s:e] = rank_sums[s:e].sum() / (ncols * (e - s))
        out[order[:, c], c] = vals
    return matrix.with_values(out)


def normalize(matrix: ExpressionMatrix, kind: NormalizationKind | str) -> ExpressionMatrix:
    kind = NormalizationKind(kind)
    if kind is NormalizationKind.STANDARDIZE:
        return standardize_rows(matrix)
    if kind is NormalizationKind.QUANTILE:
        return quantile_normalize_columns(matrix)
    return matrix


def _class_indices(dataset: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    labels = dataset.labels()
    return np.flatnonzero(labels == 0), np.flatnonzero(labels == 1)


def undersample(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Random undersampling of the majority class down to the minority count.

    The kept majority examples are the first ``minority`` entries of a
    Fisher-Yates permutation; the output keeps the input order.
    """
    neg, pos = _class_indices(dataset)
    if len(neg) == 0 or len(pos) == 0:
        raise SingleClass("undersampling needs both classes")
    if len(neg) == len(pos):
        return dataset
    minority, majority = (neg, pos) if len(neg) < len(pos) else (pos, neg)
    perm = Rng(seed).permutation(len(majority))
    keep = np.zeros(len(dataset), dtype=bool)
    keep[minority] = True
    keep[majority[perm[: len(minority)]]] = True
    return LabeledDataset(
        tuple(p for p, k in zip(dataset.pairs, keep) if k), dataset.matrix_ref
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def subsample_both(dataset: LabeledDataset, fraction: float, seed: int) -> LabeledDataset:
    """Keep ``round(fraction * n)`` random examples of each class."""
    if not 0 < fraction <= 1:
        raise ConfigError(f"subsample fraction {fraction} must lie in (0, 1]")
    rng = Rng(seed)
    keep = np.zeros(len(dataset), dtype=bool)
    for idx in _class_indices(dataset):
        perm = rng.permutation(len(idx))
        keep[idx[perm[: round_half_up(fraction * len(idx))]]] = True
    return LabeledDataset(
        tuple(p for p, k in zip(dataset.pairs, keep) if k), dataset.matrix_ref
    )


def split_sizes(n: int, fractions: SplitFractions) -> tuple[int, int, int]:
    n_train = round_half_up(n * fractions.train)
    n_val = round_half_up(n * fractions.val)
    return n_train, n_val, n - n_train - n_val


def stratified_split(
    dataset: LabeledDataset, fractions: SplitFractions, seed: int
) -> LabeledDataset:
    """Assign Train/Val/Test within each class.

    Classes are processed label 0 first, then label 1, on one stream.  Each
    class is permuted; the first ``round(n*train)`` go to Train, the next
    ``round(n*val)`` to Val, the rest to Test (rounding is half-up).
    """
    if len(dataset) == 0:
        raise EmptySplit("cannot split an empty dataset")
    rng = Rng(seed)
    assigned: list[Split] = [Split.UNASSIGNED] * len(dataset)
    for label, idx in enumerate(_class_indices(dataset)):
        if len(idx) == 0:
            continue
        n_train, n_val, n_test = split_sizes(len(idx), fractions)
        if min(n_train, n_val, n_test) <= 0:
            raise EmptySplit(
                f"class {label} with {len(idx)} examples leaves a split empty "
                f"({n_train}/{n_val}/{n_test})"
            )
        perm = idx[rng.permutation(len(idx))]
        for k, i in enumerate(perm):
            if k < n_train:
                assigned[i] = Split.TRAIN
            elif k < n_train + n_val:
                assigned[i] = Split.VAL
            else:
                assigned[i] = Split.TEST
    pairs = tuple(replace(p, split=s) for p, s in zip(dataset.pairs, assigned))
    return LabeledDataset(pairs, dataset.matrix_ref)


def featurize(pair: PairExample, matrix: ExpressionMatrix) -> PairFeatures:
    xa = matrix.values[matrix.row_index(pair.a)]
    xb = matrix.values[matrix.row_index(pair.b)]
    return PairFeatures(np.stack([xa, xb]), xa * xb)


def featurize_batch(
    pairs: Sequence[PairExample] | Sequence[tuple[str, str]],
    matrix: ExpressionMatrix,
    dtype=np.float64,
) -> tuple[np.ndarray, np.ndarray]:
    """Network inputs for many pairs: ``(N, 2, L)`` stacked and ``(N, L)`` product."""
    ia = np.empty(len(pairs), dtype=np.int64)
    ib = np.empty(len(pairs), dtype=np.int64)
    for k, p in enumerate(pairs):
        a, b = (p.a, p.b) if isinstance(p, PairExample) else canonicalize_pair(*p)
        ia[k] = matrix.row_index(a)
        ib[k] = matrix.row_index(b)
    xa = matrix.values[ia]
    xb = matrix.values[ib]
    stacked = np.stack([xa, xb], axis=1).astype(dtype)
    return stacked, (xa * xb).astype(dtype)


MANIFEST_HEADER = ("gene_a", "gene_b", "label", "split")


def format_manifest(dataset: LabeledDataset) -> str:
    lines = ["\t".join(MANIFEST_HEADER)]
    for p in dataset.pairs:
        lines.append(f"{p.a}\t{p.b}\t{p.label}\t{p.split.value}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str, matrix_ref: str = "") -> LabeledDataset:
    lines = [ln.rstrip("\r") for ln in text.split("\n") if ln.strip()]
    if not lines or tuple(lines[0].split("\t")) != MANIFEST_HEADER:
        raise DataError("manifest must start with the gene_a/gene_b/label/split header")
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != 4 or cells[2] not in ("0", "1"):
            raise DataError(f"manifest line {lineno} is malformed")
        try:
            split = Split(cells[3])
        except ValueError:
            raise DataError(f"manifest line {lineno}: unknown split {cells[3]!r}") from None
        pairs.append(PairExample(cells[0], cells[1], int(cells[2]), split))
    return LabeledDataset(tuple(pairs), matrix_ref)
