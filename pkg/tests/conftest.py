import numpy as np
import pytest

from gener.core import ExpressionMatrix
from gener.ingest import SynthSpec, generate_synthetic

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_matrix():
    return ExpressionMatrix(["G1", "G2", "G3"], ["c1", "c2", "c3"], [[1, 2, 3], [4, 5, 6], [7, 8, 10]])


@pytest.fixture(scope="session")
def tiny_synth():
    return generate_synthetic(SynthSpec(n_modules=4, genes_per_module=5, L=16, noise_sigma=0.5, seed=3))


def random_matrix(rng, n_genes, L):
    return ExpressionMatrix(
        [f"g{i}" for i in range(n_genes)], [f"c{j}" for j in range(L)], rng.normal(size=(n_genes, L))
    )
