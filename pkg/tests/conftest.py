import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_symmetric(rng, dim):
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / 2.0


def random_psd(rng, dim, rank=None):
    rank = rank or dim
    b = rng.standard_normal((dim, rank))
    return b @ b.T / rank


def random_embeddings(rng, n, d):
    """Raw embeddings guaranteed free of zero rows."""
    e = rng.standard_normal((n, d))
    e += 0.1 * np.sign(e[:, :1] + 0.5)
    return e
