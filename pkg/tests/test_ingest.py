import io
from itertools import combinations

import numpy as np
import pytest

from gener.core import (
    EmptyFile,
    ExpressionMatrix,
    InsufficientUniverse,
    MalformedRow,
    NonNumeric,
    RaggedRow,
    DuplicateGene,
)
from gener.ingest import (
    SynthSpec,
    generate_synthetic,
    parse_expression_tsv,
    parse_interactions_tsv,
    parse_labeled_pairs_tsv,
    sample_negatives,
    write_expression_tsv,
    write_pairs_tsv,
)
from gener.core import ConfigError


def abc():
    return ExpressionMatrix(["A", "B", "C"], ["x"], [[1.0], [2.0], [3.0]])


def test_parse_expression_basic():
    m = parse_expression_tsv(b"gene\tc1\tc2\tc3\nG1\t1\t2\t3\nG2\t4.5\t-1e-3\t6\n")
    assert m.genes == ("G1", "G2") or list(m.genes) == ["G1", "G2"]
    assert m.values.shape == (2, 3)
    assert m.values[1].tolist() == [4.5, -0.001, 6.0]


def test_parse_expression_crlf_and_bom():
    m = parse_expression_tsv("﻿gene\tc1\r\nG1\t1\r\n".encode())
    assert m.values.tolist() == [[1.0]]


@pytest.mark.parametrize(
    "text, err",
    [
        (b"gene\tc1\tc2\tc3\nG1\t1\t2\n", RaggedRow),
        (b"gene\tc1\nG1\tabc\n", NonNumeric),
        (b"gene\tc1\nG1\t1\nG1\t2\n", DuplicateGene),
        (b"", EmptyFile),
        (b"gene\tc1\n", EmptyFile),
    ],
)
def test_parse_expression_errors(text, err):
    with pytest.raises(err):
        parse_expression_tsv(text)


def test_parse_interactions_dedupe_and_self():
    pairs, stats = parse_interactions_tsv(b"A\tB\nB\tA\nC\tC\n", abc())
    assert pairs == [("A", "B")]
    assert (stats.raw, stats.dropped_self, stats.dropped_duplicate, stats.kept) == (3, 1, 1, 1)


def test_parse_interactions_unknown_and_extra_columns():
    pairs, stats = parse_interactions_tsv(b"A\tX\nC\tA\tjunk\n", abc())
    assert stats.dropped_unknown == 1
    assert pairs == [("A", "C")]
    d = stats.as_dict()
    assert d["raw"] == d["dropped_self"] + d["dropped_unknown"] + d["dropped_duplicate"] + d["kept"]


def test_parse_interactions_errors():
    with pytest.raises(EmptyFile):
        parse_interactions_tsv(b"", abc())
    with pytest.raises(MalformedRow):
        parse_interactions_tsv(b"A\n", abc())


def test_parse_interactions_header_and_case():
    pairs, _ = parse_interactions_tsv(b"gene_a\tgene_b\na\tb\n", abc(), header=True, uppercase_genes=True)
    assert pairs == [("A", "B")]


def test_parse_labeled_pairs():
    pairs, stats = parse_labeled_pairs_tsv(b"A\tB\t1\nB\tC\t0\nC\tB\t1\n", abc())
    assert [(p.key, p.label) for p in pairs] == [(("A", "B"), 1), (("B", "C"), 0)]
    assert stats.dropped_duplicate == 1


def test_sample_negatives_small_universe():
    out = sample_negatives(abc(), {("A", "B")}, 2, seed=1)
    assert sorted(out) == [("A", "C"), ("B", "C")]
    with pytest.raises(InsufficientUniverse):
        sample_negatives(abc(), {("A", "B")}, 3, seed=1)


def test_sample_negatives_deterministic_and_disjoint():
    genes = [f"g{i:03d}" for i in range(100)]
    m = ExpressionMatrix(genes, ["x"], np.zeros((100, 1)))
    a = sample_negatives(m, set(), 50, seed=7)
    assert a == sample_negatives(m, set(), 50, seed=7)
    assert len(set(a)) == 50
    pos = set(list(combinations(genes, 2))[:4000])
    b = sample_negatives(m, pos, 900, seed=3)  # dense branch
    assert len(set(b)) == 900 and not set(b) & pos
    assert all(x < y for x, y in b)


def test_synth_counts_and_zero_noise():
    m, ds = generate_synthetic(SynthSpec(n_modules=3, genes_per_module=4, L=8, noise_sigma=0.0, seed=1))
    neg, pos = ds.class_counts()
    assert pos == 3 * 6 and neg == pos
    for p in ds.pairs:
        if p.label == 1:
            assert np.array_equal(m.values[m.row_index(p.a)], m.values[m.row_index(p.b)])


def test_synth_default_positive_count():
    _, ds = generate_synthetic(SynthSpec(n_modules=10, genes_per_module=10, L=64, noise_sigma=0.5, seed=7))
    assert ds.class_counts() == (450, 450)


def test_synth_deterministic_and_seed_sensitive():
    spec = SynthSpec(n_modules=3, genes_per_module=4, L=8, noise_sigma=0.5, seed=5)
    m1, d1 = generate_synthetic(spec)
    m2, d2 = generate_synthetic(spec)
    assert m1 == m2 and d1.pairs == d2.pairs
    m3, _ = generate_synthetic(SynthSpec(n_modules=3, genes_per_module=4, L=8, noise_sigma=0.5, seed=6))
    assert not np.array_equal(m1.values, m3.values)


@pytest.mark.parametrize("kw", [{"n_modules": 0}, {"n_modules": 1, "genes_per_module": 3}, {"L": 1}, {"noise_sigma": -1.0}, {"seed": -1}])
def test_synth_spec_validation(kw):
    with pytest.raises(ConfigError):
        SynthSpec(**kw)


def test_write_round_trip(tiny_synth):
    m, ds = tiny_synth
    buf = io.BytesIO()
    write_expression_tsv(m, buf)
    assert parse_expression_tsv(buf.getvalue()) == m
    pbuf = io.BytesIO()
    write_pairs_tsv([p.key for p in ds.pairs], pbuf, [p.label for p in ds.pairs])
    back, stats = parse_labeled_pairs_tsv(pbuf.getvalue(), m)
    assert [(p.key, p.label) for p in back] == [(p.key, p.label) for p in ds.pairs]
    assert stats.kept == len(ds)
