import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes helpers importable

from dgcf.data import split_train_test
from dgcf.graph import InteractionMatrix, build_adjacency, degree_vector, normalize_laplacian
from dgcf.synthetic import bipartite_ring


def laplacian_from_pairs(m: int, n: int, pairs):
    R = InteractionMatrix.from_pairs(m, n, pairs)
    A = build_adjacency(R)
    return normalize_laplacian(A, degree_vector(A))


@pytest.fixture(scope="session")
def ring_split():
    """Small connected dataset: 30 users, 30 items, ~8 interactions/user."""
    raw = bipartite_ring(30, 30, 6, seed=1)
    return split_train_test(raw, 0.2, seed=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
