"""Gene-pair interaction prediction from expression profiles with a two-branch network."""

from .core import (
    ExpressionMatrix,
    GenerError,
    LabeledDataset,
    PairExample,
    PairFeatures,
    Split,
    canonicalize_pair,
    get_expression,
)

__version__ = "0.1.0"
