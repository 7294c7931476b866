import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
