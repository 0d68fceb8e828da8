import numpy as np
import pytest

from intdiff import DataMatrix, diffusion_operator, gaussian_kernel


def random_data(seed: int, n: int = 20, d: int = 4, spread: float = 1.0) -> DataMatrix:
    rng = np.random.default_rng(seed)
    return DataMatrix.from_array(rng.normal(scale=spread, size=(n, d)))


def random_operator(seed: int, n: int = 20, d: int = 4):
    return diffusion_operator(gaussian_kernel(random_data(seed, n, d)))


def two_blobs(seed: int = 0, n_per: int = 25, d: int = 5, separation: float = 50.0):
    """Two far-separated Gaussian blobs plus their blob labels."""
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=0.5, size=(n_per, d))
    b = rng.normal(scale=0.5, size=(n_per, d))
    b[:, 0] += separation
    labels = np.array([0] * n_per + [1] * n_per)
    return DataMatrix.from_array(np.vstack([a, b])), labels


@pytest.fixture
def blob_data():
    return two_blobs()
