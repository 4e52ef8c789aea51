"""The prepare step: ingest, normalize, add negatives, balance, split."""

from __future__ import annotations

from dataclasses import dataclass

from .config import DataSection
from .core import ExpressionMatrix, LabeledDataset, PairExample, Split
from .ingest import (
    parse_expression_tsv,
    parse_interactions_tsv,
    parse_labeled_pairs_tsv,
    sample_negatives,
)
from .preprocess import normalize, stratified_split, subsample_both, undersample
from .rng import (
    STREAM_NEGATIVES,
    STREAM_SPLIT,
    STREAM_SUBSAMPLE,
    STREAM_UNDERSAMPLE,
    derive_seed,
)


@dataclass
class Prepared:
    matrix: ExpressionMatrix  # normalized
    dataset: LabeledDataset  # splits assigned
    stats: dict


def _class_split_counts(ds: LabeledDataset) -> dict:
    out = {}
    for split in (Split.TRAIN, Split.VAL, Split.TEST):
        neg, pos = ds.by_split(split).class_counts()
        out[split.value] = {"positive": pos, "negative": neg}
    return out


def prepare(data: DataSection, seed: int) -> Prepared:
    """Run the preparation steps; every random step uses its own derived stream."""
    raw = parse_expression_tsv(data.expression_path, data.uppercase_genes)
    if data.negatives == "sampled":
        positives, ingest = parse_interactions_tsv(
            data.interactions_path, raw, data.interactions_header, data.uppercase_genes
        )
        count = int(round(data.negative_ratio * len(positives)))
        negatives = sample_negatives(raw, set(positives), count, derive_seed(seed, STREAM_NEGATIVES))
        pairs = [PairExample(a, b, 1) for a, b in positives]
        pairs += [PairExample(a, b, 0) for a, b in negatives]
    else:
        pairs, ingest = parse_labeled_pairs_tsv(
            data.interactions_path, raw, data.interactions_header, data.uppercase_genes
        )
    dataset = LabeledDataset(tuple(pairs), data.expression_path)
    neg0, pos0 = dataset.class_counts()

    matrix = normalize(raw, data.normalization)
    dataset = undersample(dataset, derive_seed(seed, STREAM_UNDERSAMPLE))
    if data.subsample_both is not None:
        dataset = subsample_both(dataset, data.subsample_both, derive_seed(seed, STREAM_SUBSAMPLE))
    dataset = stratified_split(
        dataset, data.split_fractions.to_fractions(), derive_seed(seed, STREAM_SPLIT)
    )
    stats = {
        **ingest.as_dict(),
        "genes": len(raw),
        "L": raw.L,
        "positives": pos0,
        "negatives": neg0,
        "balanced_per_class": dataset.class_counts()[1],
        "splits": _class_split_counts(dataset),
    }
    return Prepared(matrix, dataset, stats)
