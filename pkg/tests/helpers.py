"""Small datasets and configs shared by the slower tests."""

from itertools import combinations

import numpy as np

from gener.core import ExpressionMatrix, LabeledDataset, PairExample, Split
from gener.model import GenerConfig

TINY = dict(conv_filters=[4, 4, 4], conv_kernels=[3, 3, 3], branch_feature_dim=8, dense_units=8, batch_size=16)


def tiny_config(L, **kw):
    return GenerConfig(**{**TINY, **kw, "L": L})


def sign_dataset(n_genes=40, L=16, noise=0.3, seed=0):
    """Genes are +v or -v plus noise; a pair interacts when the signs agree.

    The mean of the element product is positive for interacting pairs and
    negative otherwise, so the classes are linearly separable in the product.
    """
    r = np.random.default_rng(seed)
    v = r.normal(size=L)
    signs = np.where(np.arange(n_genes) % 2 == 0, 1.0, -1.0)
    values = signs[:, None] * v[None, :] + noise * r.normal(size=(n_genes, L))
    genes = [f"g{i:03d}" for i in range(n_genes)]
    matrix = ExpressionMatrix(genes, [f"c{j}" for j in range(L)], values)
    pairs = []
    splits = [Split.TRAIN] * 6 + [Split.VAL] * 2 + [Split.TEST] * 2
    for k, (i, j) in enumerate(combinations(range(n_genes), 2)):
        pairs.append(PairExample(genes[i], genes[j], int(signs[i] == signs[j]), splits[k % 10]))
    return matrix, LabeledDataset(tuple(pairs))
