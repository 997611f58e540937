from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from datagen import random_instance  # noqa: E402

from welfair.model import Params  # noqa: E402


@pytest.fixture
def tiny_instance():
    return random_instance(n=12, dim=2, num_colors=2, seed=3)


@pytest.fixture
def small_instance():
    return random_instance(n=60, dim=3, num_colors=3, seed=5)


@pytest.fixture
def tiny_params(tiny_instance):
    return Params.with_delta(tiny_instance, 2, 0.5, 0.1, 2)


def random_fractional_x(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random column-stochastic (k, n) matrix with a sparse support."""
    x = rng.random((k, n)) ** 3
    keep = rng.random((k, n)) < 0.6
    keep[rng.integers(0, k, size=n), np.arange(n)] = True
    x = np.where(keep, x, 0.0)
    x /= x.sum(axis=0, keepdims=True)
    return x
