from __future__ import annotations

import numpy as np
import pytest

from metaevolve.core import Individual


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_individual(cv: float, f: float, x=None, dim: int = 3) -> Individual:
    """Bare individual for selection/order tests; g/h play no role there."""
    if x is None:
        x = np.zeros(dim)
    return Individual(
        x=np.asarray(x, dtype=np.float64),
        f=float(f),
        g=np.zeros(0),
        h=np.zeros(0),
        cv=float(cv),
        feasible=cv == 0.0,
    )
