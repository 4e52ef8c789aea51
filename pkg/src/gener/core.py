"""Shared domain types: expression matrices, gene pairs, pair features."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class GenerError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ConfigError(GenerError):
    exit_code = 2


class DataError(GenerError):
    exit_code = 3


class SelfPair(DataError):
    pass


class UnknownGene(DataError):
    pass


class EmptyFile(DataError):
    pass


class RaggedRow(DataError):
    pass


class NonNumeric(DataError):
    pass


class DuplicateGene(DataError):
    pass


class MalformedRow(DataError):
    pass


class InsufficientUniverse(DataError):
    pass


class SingleClass(DataError):
    pass


class NoPositives(DataError):
    pass


class EmptySplit(DataError):
    pass


class TrainingError(GenerError):
    exit_code = 4


class DivergedLoss(TrainingError):
    pass


class IoFailure(GenerError):
    exit_code = 3


class CompatibilityError(GenerError):
    exit_code = 5


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    UNASSIGNED = "unassigned"


def canonicalize_pair(a: str, b: str) -> tuple[str, str]:
    """Order a gene pair lexicographically (by UTF-8 bytes)."""
    if a == b:
        raise SelfPair(f"self pair {a!r}")
    return (a, b) if a.encode() < b.encode() else (b, a)


class ExpressionMatrix:
    """Genes x conditions table of finite expression values."""

    def __init__(self, genes: Sequence[str], conditions: Sequence[str], values):
        values = np.asarray(values, dtype=np.float64)
        genes = list(genes)
        conditions = list(conditions)
        if values.ndim != 2:
            raise DataError("expression values must be 2-D")
        if values.shape != (len(genes), len(conditions)):
            raise DataError(
                f"values shape {values.shape} does not match "
                f"{len(genes)} genes x {len(conditions)} conditions"
            )
        if not conditions:
            raise DataError("expression matrix needs at least one condition")
        if not np.all(np.isfinite(values)):
            raise DataError("expression values must be finite")
        index = {}
        for i, g in enumerate(genes):
            if not g or any(c.isspace() for c in g):
                raise DataError(f"invalid gene name {g!r}")
            if g in index:
                raise DuplicateGene(f"duplicate gene {g!r}")
            index[g] = i
        values.setflags(write=False)
        self.genes = tuple(genes)
        self.conditions = tuple(conditions)
        self.values = values
        self._index = index

    @property
    def L(self) -> int:
        return len(self.conditions)

    def __len__(self) -> int:
        return len(self.genes)

    def __contains__(self, gene: str) -> bool:
        return gene in self._index

    def row_index(self, gene: str) -> int:
        try:
            return self._index[gene]
        except KeyError:
            raise UnknownGene(f"unknown gene {gene!r}") from None

    def with_values(self, values) -> "ExpressionMatrix":
        return ExpressionMatrix(self.genes, self.conditions, values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpressionMatrix):
            return NotImplemented
        return (
            self.genes == other.genes
            and self.conditions == other.conditions
            and np.array_equal(self.values, other.values)
        )


def get_expression(matrix: ExpressionMatrix, gene: str) -> np.ndarray:
    return matrix.values[matrix.row_index(gene)]


@dataclass(frozen=True)
class PairExample:
    a: str
    b: str
    label: int
    split: Split = Split.UNASSIGNED

    def __post_init__(self):
        if self.a == self.b:
            raise SelfPair(f"self pair {self.a!r}")
        if self.a.encode() >= self.b.encode():
            raise DataError(f"pair ({self.a}, {self.b}) is not in canonical order")
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label!r}")

    @classmethod
    def of(cls, a: str, b: str, label: int, split: Split = Split.UNASSIGNED) -> "PairExample":
        a, b = canonicalize_pair(a, b)
        return cls(a, b, label, split)

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass(frozen=True)
class PairFeatures:
    stacked: np.ndarray  # (2, L)
    product: np.ndarray  # (L,)


@dataclass(frozen=True)
class LabeledDataset:
    pairs: tuple[PairExample, ...]
    matrix_ref: str = ""
    _keys: frozenset = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self):
        keys = [p.key for p in self.pairs]
        unique = frozenset(keys)
        if len(unique) != len(keys):
            raise DataError("dataset contains duplicate canonical pairs")
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "_keys", unique)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, key) -> bool:
        return key in self._keys

    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.pairs], dtype=np.int64)

    def by_split(self, split: Split | str) -> "LabeledDataset":
        split = Split(split)
        return LabeledDataset(tuple(p for p in self.pairs if p.split == split), self.matrix_ref)

    def class_counts(self) -> tuple[int, int]:
        labels = self.labels()
        return int((labels == 0).sum()), int((labels == 1).sum())

    def check_genes(self, matrix: ExpressionMatrix) -> None:
        for p in self.pairs:
            matrix.row_index(p.a)
            matrix.row_index(p.b)

    @classmethod
    def from_pairs(cls, pairs: Iterable[PairExample], matrix_ref: str = "") -> "LabeledDataset":
        return cls(tuple(pairs), matrix_ref)
