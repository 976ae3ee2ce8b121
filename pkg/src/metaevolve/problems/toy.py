"""Tiny closed-form problems used in tests and timing baselines."""

from __future__ import annotations

import numpy as np

from .base import Problem, ProblemSpec


class SphereRing(Problem):
    """Minimize the sphere outside the unit ball: f = sum(x^2), g1 = 1 - sum(x^2).

    The optimum sits on the unit sphere with f = 1; the origin is infeasible.
    """

    def __init__(self, dim: int = 10, lower: float = -5.0, upper: float = 5.0):
        self.spec = ProblemSpec(
            id="sphere-ring",
            dim=dim,
            n_ineq=1,
            n_total=1,
            lower=np.full(dim, lower),
            upper=np.full(dim, upper),
        )

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        sq = (xs * xs).sum(axis=1)
        return sq, (1.0 - sq)[:, None], np.zeros((len(xs), 0))
