import numpy as np
import pytest
from hypothesis import given, strategies as st

from gener.core import (
    DataError,
    DuplicateGene,
    ExpressionMatrix,
    LabeledDataset,
    PairExample,
    SelfPair,
    UnknownGene,
    canonicalize_pair,
    get_expression,
)
from gener.preprocess import featurize

gene_names = st.text(alphabet="ABCDEFGXYZ0123456789_-", min_size=1, max_size=8)


def test_canonicalize_examples():
    assert canonicalize_pair("YBR001", "YAL002") == ("YAL002", "YBR001")
    assert canonicalize_pair("A", "B") == ("A", "B")
    with pytest.raises(SelfPair):
        canonicalize_pair("G1", "G1")


@given(gene_names, gene_names)
def test_canonicalize_symmetric_and_idempotent(a, b):
    if a == b:
        return
    c = canonicalize_pair(a, b)
    assert c == canonicalize_pair(b, a)
    assert canonicalize_pair(*c) == c
    assert c[0].encode() < c[1].encode()


def test_get_expression(small_matrix):
    assert get_expression(small_matrix, "G1").tolist() == [1, 2, 3]
    with pytest.raises(UnknownGene):
        get_expression(small_matrix, "nope")


def test_wide_row_has_1012_values():
    m = ExpressionMatrix(["A", "B"], [f"c{i}" for i in range(1012)], np.zeros((2, 1012)))
    assert get_expression(m, "A").shape == (1012,)


def test_matrix_invariants():
    with pytest.raises(DuplicateGene):
        ExpressionMatrix(["A", "A"], ["c"], [[1], [2]])
    with pytest.raises(DataError):
        ExpressionMatrix(["A"], ["c"], [[np.nan]])
    with pytest.raises(DataError):
        ExpressionMatrix(["A B"], ["c"], [[1]])
    with pytest.raises(DataError):
        ExpressionMatrix(["A"], [], np.zeros((1, 0)))
    m = ExpressionMatrix(["A"], ["c"], [[1.0]])
    with pytest.raises(ValueError):
        m.values[0, 0] = 2


def test_pair_example_requires_canonical_order():
    with pytest.raises(DataError):
        PairExample("B", "A", 1)
    assert PairExample.of("B", "A", 1).key == ("A", "B")


def test_dataset_rejects_duplicates():
    with pytest.raises(DataError):
        LabeledDataset((PairExample("A", "B", 1), PairExample.of("B", "A", 0)))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_product_is_elementwise(xa, xb):
    m = ExpressionMatrix(["A", "B"], ["1", "2", "3"], [xa, xb])
    f = featurize(PairExample("A", "B", 1), m)
    assert np.array_equal(f.product, f.stacked[0] * f.stacked[1])
    assert f.stacked.shape == (2, 3)
