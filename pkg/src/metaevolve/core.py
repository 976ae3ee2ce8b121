"""Domain types and the feasibility-based total order for constrained optimization.

An individual carries its decision vector, objective value, raw constraint
values and the aggregate constraint violation ``cv``.  ``cv`` is the unweighted
sum of positive inequality exceedances plus equality residuals beyond the
tolerance ``eps``; an individual is feasible exactly when ``cv == 0``.

Selection everywhere in this package uses the feasibility rule: compare
``(cv, f)`` lexicographically, so any feasible point beats any infeasible one,
lower violation beats higher, and the objective decides among the feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Largest finite double, used to stand in for "maximally infeasible" when an
# evaluation produces NaN/inf.  Keeps NaN out of sorts and statistics.
CV_SENTINEL = float(np.finfo(np.float64).max)


class EvaluationError(ValueError):
    """Raised when constraint aggregation receives non-finite inputs."""


def compute_cv(g, h, eps: float) -> float:
    """Aggregate constraint violation for inequality values ``g`` (feasible when
    <= 0) and equality values ``h`` (feasible when ``|h| <= eps``).

    Returns 0 exactly when every constraint is satisfied under ``eps``.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise EvaluationError("non-finite constraint value")
    ineq = np.maximum(g, 0.0).sum() if g.size else 0.0
    eq = np.maximum(np.abs(h) - eps, 0.0).sum() if h.size else 0.0
    return float(ineq + eq)


@dataclass(frozen=True)
class Individual:
    """One evaluated candidate solution."""

    x: np.ndarray
    f: float
    g: np.ndarray
    h: np.ndarray
    cv: float
    feasible: bool

    @classmethod
    def from_evaluation(cls, x, f, g, h, eps: float) -> "Individual":
        """Build an individual, routing non-finite evaluations to the sentinel.

        A candidate whose objective or constraints are non-finite is recorded
        as maximally infeasible so it loses every comparison but never injects
        NaN into downstream statistics.
        """
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        h = np.asarray(h, dtype=np.float64)
        try:
            cv = compute_cv(g, h, eps)
            if not np.isfinite(f):
                raise EvaluationError("non-finite objective")
        except EvaluationError:
            return cls(x=x, f=CV_SENTINEL, g=g, h=h, cv=CV_SENTINEL, feasible=False)
        return cls(x=x, f=float(f), g=g, h=h, cv=cv, feasible=cv == 0.0)


@dataclass
class Population:
    members: list[Individual]
    generation: int = 0

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("population must be non-empty")
        if self.generation < 0:
            raise ValueError("generation must be >= 0")

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class EvalBudget:
    """Function-evaluation accounting for one run.  Never shared across runs."""

    max_fe: int
    used: int = 0

    def charge(self, n: int) -> None:
        if n < 0:
            raise ValueError("cannot charge a negative evaluation count")
        self.used += n

    @property
    def remaining(self) -> int:
        return self.max_fe - self.used


def feasibility_key(ind: Individual) -> tuple[float, float]:
    """Sort key realizing the feasibility rule: lexicographic (cv, f)."""
    return (ind.cv, ind.f)


def feasibility_order(a: Individual, b: Individual) -> int:
    """Return -1 if ``a`` precedes ``b``, 1 if it follows, 0 on an exact tie."""
    ka, kb = feasibility_key(a), feasibility_key(b)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def environmental_selection(union: list[Individual], n: int) -> list[Individual]:
    """Keep the ``n`` best of a 2n-member parent/offspring union.

    Stable with respect to input position on exact (cv, f) ties, which makes
    runs bit-reproducible under a fixed seed.  Returns members in rank order.
    """
    if n <= 0:
        raise ValueError(f"selection size must be positive, got {n}")
    if len(union) != 2 * n:
        raise ValueError(f"expected a union of {2 * n} members, got {len(union)}")
    ranked = sorted(range(len(union)), key=lambda i: feasibility_key(union[i]))
    return [union[i] for i in ranked[:n]]


def select_indices(f: np.ndarray, cv: np.ndarray, n: int) -> np.ndarray:
    """Array fast path of :func:`environmental_selection` used by the engine.

    Returns the indices of the ``n`` best rows under (cv, f), stable by index.
    """
    order = np.lexsort((np.arange(f.shape[0]), f, cv))
    return order[:n]


def best_index(f: np.ndarray, cv: np.ndarray) -> int:
    """Index of the feasibility-rule minimum; lowest index wins exact ties."""
    return int(np.lexsort((np.arange(f.shape[0]), f, cv))[0])
