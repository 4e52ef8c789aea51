"""Reading expression/interaction exports, negative sampling, synthetic data."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path
from typing import BinaryIO, Iterable, Union

import numpy as np

from .core import (
    ConfigError,
    DuplicateGene,
    EmptyFile,
    ExpressionMatrix,
    InsufficientUniverse,
    IoFailure,
    LabeledDataset,
    MalformedRow,
    NonNumeric,
    PairExample,
    RaggedRow,
    canonicalize_pair,
)
from .rng import STREAM_NEGATIVES, Rng, derive_seed

Source = Union[str, Path, bytes, BinaryIO]


def _read_lines(source: Source) -> list[str]:
    if isinstance(source, (str, Path)):
        try:
            data = Path(source).read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read {source}: {exc}") from None
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRow(f"input is not UTF-8: {exc}") from None
    if text.startswith("﻿"):
        text = text[1:]
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in text.split("\n")]
    # tolerate trailing blank lines only
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyFile("file is empty")
    return lines


def parse_expression_tsv(source: Source, uppercase_genes: bool = False) -> ExpressionMatrix:
    lines = _read_lines(source)
    header = lines[0].split("\t")
    conditions = header[1:]
    L = len(conditions)
    if L == 0:
        raise RaggedRow("header has no condition columns")
    genes: list[str] = []
    seen: set[str] = set()
    values = np.empty((len(lines) - 1, L), dtype=np.float64)
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != L + 1:
            raise RaggedRow(f"line {lineno}: expected {L + 1} cells, got {len(cells)}")
        gene = cells[0].strip()
        if uppercase_genes:
            gene = gene.upper()
        if gene in seen:
            raise DuplicateGene(f"line {lineno}: duplicate gene {gene!r}")
        seen.add(gene)
        genes.append(gene)
        row = values[lineno - 2]
        for j, cell in enumerate(cells[1:]):
            try:
                row[j] = float(cell)
            except ValueError:
                raise NonNumeric(f"line {lineno}, column {j + 2}: {cell!r}") from None
    if not genes:
        raise EmptyFile("expression file has a header but no rows")
    return ExpressionMatrix(genes, conditions, values)


@dataclass
class IngestStats:
    raw: int = 0
    dropped_self: int = 0
    dropped_unknown: int = 0
    dropped_duplicate: int = 0
    kept: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def _rows(source: Source, header: bool, min_cols: int) -> Iterable[tuple[int, list[str]]]:
    lines = _read_lines(source)
    start = 1 if header else 0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if line.strip() == "":
            continue
        cells = line.split("\t")
        if len(cells) < min_cols:
            raise MalformedRow(f"line {lineno}: expected at least {min_cols} columns")
        yield lineno, cells


def _clean_pair(cells, matrix, stats, seen, uppercase):
    a, b = cells[0].strip(), cells[1].strip()
    if uppercase:
        a, b = a.upper(), b.upper()
    stats.raw += 1
    if a == b:
        stats.dropped_self += 1
        return None
    if a not in matrix or b not in matrix:
        stats.dropped_unknown += 1
        return None
    key = canonicalize_pair(a, b)
    if key in seen:
        stats.dropped_duplicate += 1
        return None
    seen.add(key)
    stats.kept += 1
    return key


def parse_interactions_tsv(
    source: Source,
    matrix: ExpressionMatrix,
    header: bool = False,
    uppercase_genes: bool = False,
) -> tuple[list[tuple[str, str]], IngestStats]:
    """Canonical, deduplicated positive pairs whose genes are in ``matrix``."""
    stats = IngestStats()
    seen: set[tuple[str, str]] = set()
    kept = []
    for _, cells in _rows(source, header, 2):
        key = _clean_pair(cells, matrix, stats, seen, uppercase_genes)
        if key is not None:
            kept.append(key)
    return kept, stats


def parse_labeled_pairs_tsv(
    source: Source,
    matrix: ExpressionMatrix,
    header: bool = False,
    uppercase_genes: bool = False,
) -> tuple[list[PairExample], IngestStats]:
    """Like :func:`parse_interactions_tsv` but with a third 0/1 label column.

    The first occurrence of a canonical pair wins; later rows for the same
    pair (whatever their label) count as duplicates.
    """
    stats = IngestStats()
    seen: set[tuple[str, str]] = set()
    kept = []
    for lineno, cells in _rows(source, header, 3):
        label = cells[2].strip()
        if label not in ("0", "1"):
            raise MalformedRow(f"line {lineno}: label must be 0 or 1, got {label!r}")
        key = _clean_pair(cells, matrix, stats, seen, uppercase_genes)
        if key is not None:
            kept.append(PairExample(key[0], key[1], int(label)))
    return kept, stats


def sample_negatives(
    matrix: ExpressionMatrix,
    positives: set[tuple[str, str]],
    count: int,
    seed: int,
) -> list[tuple[str, str]]:
    """Draw ``count`` distinct canonical pairs outside ``positives``.

    Rejection sampling over random index pairs, or, when positives plus the
    request fill more than half of the universe, enumerate the complement in
    row order, shuffle it and take a prefix.
    """
    n = len(matrix)
    universe = n * (n - 1) // 2
    if count < 0 or count > universe - len(positives):
        raise InsufficientUniverse(
            f"cannot draw {count} negatives: {universe} pairs, {len(positives)} positive"
        )
    if count == 0:
        return []
    genes = matrix.genes
    rng = Rng(seed)
    if 2 * (len(positives) + count) > universe:
        pool = []
        for i, j in combinations(range(n), 2):
            key = canonicalize_pair(genes[i], genes[j])
            if key not in positives:
                pool.append(key)
        order = rng.permutation(len(pool))
        return [pool[k] for k in order[:count]]
    out: list[tuple[str, str]] = []
    visited: set[tuple[str, str]] = set()
    while len(out) < count:
        i = rng.below(n)
        j = rng.below(n - 1)
        if j >= i:
            j += 1
        key = canonicalize_pair(genes[i], genes[j])
        if key in positives or key in visited:
            continue
        visited.add(key)
        out.append(key)
    return out


@dataclass(frozen=True)
class SynthSpec:
    n_modules: int = 10
    genes_per_module: int = 10
    L: int = 64
    noise_sigma: float = 0.5
    seed: int = 7

    def __post_init__(self):
        if self.n_modules < 1 or self.genes_per_module < 1:
            raise ConfigError("n_modules and genes_per_module must be positive")
        if self.n_modules * self.genes_per_module < 4:
            raise ConfigError("synthetic data needs at least 4 genes")
        if self.L < 2:
            raise ConfigError("L must be at least 2")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ConfigError("noise_sigma must be a non-negative real")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")


def synthetic_gene_name(module: int, member: int) -> str:
    return f"M{module:03d}G{member:03d}"


def generate_synthetic(spec: SynthSpec) -> tuple[ExpressionMatrix, LabeledDataset]:
    """Module-structured expression data with known interaction labels.

    Draw order on one stream seeded with ``spec.seed``: ``K*L`` normals for
    the module signals (module-major), then ``n_genes*L`` normals for the
    per-gene noise (gene-major).  Negatives come from :func:`sample_negatives`
    with a seed derived from ``spec.seed``.
    """
    K, m, L = spec.n_modules, spec.genes_per_module, spec.L
    rng = Rng(spec.seed)
    signals = rng.normal(K * L).reshape(K, L)
    noise = rng.normal(K * m * L).reshape(K * m, L)
    values = np.repeat(signals, m, axis=0) + spec.noise_sigma * noise
    genes = [synthetic_gene_name(k, j) for k in range(K) for j in range(m)]
    matrix = ExpressionMatrix(genes, [f"c{i:04d}" for i in range(L)], values)

    positives = []
    for k in range(K):
        members = genes[k * m:(k + 1) * m]
        for a, b in combinations(members, 2):
            positives.append(canonicalize_pair(a, b))
    negatives = sample_negatives(
        matrix, set(positives), len(positives), derive_seed(spec.seed, STREAM_NEGATIVES)
    )
    pairs = [PairExample(a, b, 1) for a, b in positives]
    pairs += [PairExample(a, b, 0) for a, b in negatives]
    return matrix, LabeledDataset(tuple(pairs), "synthetic")


def format_float(x: float) -> str:
    return repr(float(x))


def write_expression_tsv(matrix: ExpressionMatrix, dest: BinaryIO | io.TextIOBase) -> None:
    """Write in the format :func:`parse_expression_tsv` reads (exact round trip)."""
    lines = ["\t".join(["gene", *matrix.conditions])]
    for gene, row in zip(matrix.genes, matrix.values):
        lines.append("\t".join([gene, *(format_float(v) for v in row)]))
    _write_text(dest, "\n".join(lines) + "\n")


def write_pairs_tsv(pairs: Iterable[tuple[str, str]], dest, labels: Iterable[int] | None = None) -> None:
    if labels is None:
        text = "".join(f"{a}\t{b}\n" for a, b in pairs)
    else:
        text = "".join(f"{a}\t{b}\t{y}\n" for (a, b), y in zip(pairs, labels))
    _write_text(dest, text)


def _write_text(dest, text: str) -> None:
    if isinstance(dest, io.TextIOBase):
        dest.write(text)
    else:
        dest.write(text.encode("utf-8"))
