"""Problem interface shared by the benchmark suite and synthetic training COPs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import EvalBudget

DEFAULT_EQUALITY_EPS = 1e-4

ORTHONORMALITY_TOL = 1e-10


class ConfigurationError(RuntimeError):
    """Missing or invalid problem data/configuration."""


@dataclass(frozen=True)
class ProblemSpec:
    """Static description of one constrained problem instance."""

    id: str
    dim: int
    n_ineq: int
    n_total: int
    lower: np.ndarray
    upper: np.ndarray
    eps: float = DEFAULT_EQUALITY_EPS

    def __post_init__(self) -> None:
        if self.n_ineq > self.n_total:
            raise ValueError(f"{self.id}: inequality count exceeds total constraint count")
        if self.eps <= 0:
            raise ValueError(f"{self.id}: equality tolerance must be positive")
        if not np.all(self.lower < self.upper):
            raise ValueError(f"{self.id}: lower bounds must be strictly below upper bounds")

    @property
    def n_eq(self) -> int:
        return self.n_total - self.n_ineq


@dataclass(frozen=True)
class ProblemData:
    """Shift vector and rotation matrices backing a benchmark instance."""

    shift: np.ndarray
    rotations: tuple[np.ndarray, ...] = ()
    source: str = "synthetic-seeded"  # or "official-file"

    def validate(self, spec: ProblemSpec) -> None:
        if self.shift.shape != (spec.dim,):
            raise ConfigurationError(
                f"{spec.id}: shift has shape {self.shift.shape}, expected ({spec.dim},)"
            )
        if np.any(self.shift < spec.lower) or np.any(self.shift > spec.upper):
            raise ConfigurationError(f"{spec.id}: shift vector lies outside the bounds")
        for k, mat in enumerate(self.rotations):
            if mat.shape != (spec.dim, spec.dim):
                raise ConfigurationError(
                    f"{spec.id}: rotation {k} has shape {mat.shape}, expected square of D={spec.dim}"
                )
            err = np.abs(mat.T @ mat - np.eye(spec.dim)).max()
            if err > ORTHONORMALITY_TOL:
                raise ConfigurationError(
                    f"{spec.id}: rotation {k} is not orthonormal (max |M'M - I| = {err:.2e})"
                )


@dataclass(frozen=True)
class Evaluation:
    f: float
    g: np.ndarray
    h: np.ndarray


class Problem:
    """Base class: immutable after construction, evaluations are pure.

    Subclasses implement :meth:`evaluate_batch`; the scalar :meth:`evaluate`
    is derived from it so both paths agree bitwise.
    """

    spec: ProblemSpec

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluate rows of ``xs`` (shape (n, D)); returns (f, G, H) arrays."""
        raise NotImplementedError

    def evaluate(self, x: np.ndarray) -> Evaluation:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.spec.dim,):
            raise ValueError(
                f"{self.spec.id}: point has shape {x.shape}, expected ({self.spec.dim},)"
            )
        f, g, h = self.evaluate_batch(x[None, :])
        return Evaluation(f=float(f[0]), g=g[0], h=h[0])


@dataclass
class BudgetedProblem:
    """Couples a problem with the run's evaluation budget.

    One evaluated point costs one unit regardless of constraint count; batch
    evaluation of n points costs n.
    """

    problem: Problem
    budget: EvalBudget = field(default_factory=lambda: EvalBudget(max_fe=0))

    @property
    def spec(self) -> ProblemSpec:
        return self.problem.spec

    def evaluate(self, x: np.ndarray) -> Evaluation:
        self.budget.charge(1)
        return self.problem.evaluate(x)

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        self.budget.charge(xs.shape[0])
        return self.problem.evaluate_batch(xs)
