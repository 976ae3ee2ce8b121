"""Seeded generator of synthetic training COPs for the meta-training loop.

Each instance combines a shifted standard objective (sphere, Rosenbrock or
Rastrigin) with random linear/quadratic inequality constraints and affine
equality constraints.  Inequality thresholds are calibrated by Monte Carlo
quantiles so the feasible fraction of the box lands near a requested target;
equality constraints are anchored at an interior point so their intersection
is never empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import compute_cv
from .base import Problem, ProblemSpec

_SYNTHETIC_COP_SALT = 0x5EED


@dataclass(frozen=True)
class _LinearConstraint:
    a: np.ndarray
    b: float  # a.x - b <= 0

    def values(self, xs: np.ndarray) -> np.ndarray:
        return xs @ self.a - self.b


@dataclass(frozen=True)
class _QuadraticConstraint:
    center: np.ndarray
    radius_sq: float  # |x-c|^2 - r^2 <= 0

    def values(self, xs: np.ndarray) -> np.ndarray:
        d = xs - self.center
        return (d * d).sum(axis=1) - self.radius_sq


class SyntheticCop(Problem):
    def __init__(
        self,
        spec: ProblemSpec,
        objective: str,
        x_opt: np.ndarray,
        ineqs: list,
        eq_a: np.ndarray,
        eq_b: np.ndarray,
    ):
        self.spec = spec
        self.objective = objective
        self.x_opt = x_opt
        self.ineqs = ineqs
        self.eq_a = eq_a  # (n_eq, D)
        self.eq_b = eq_b  # (n_eq,)

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        z = xs - self.x_opt
        if self.objective == "sphere":
            f = (z * z).sum(axis=1)
        elif self.objective == "rosenbrock":
            a, b = z[:, :-1], z[:, 1:]
            f = (100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2).sum(axis=1)
        else:  # rastrigin
            f = (z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0).sum(axis=1)
        if self.ineqs:
            g = np.column_stack([c.values(xs) for c in self.ineqs])
        else:
            g = np.zeros((len(xs), 0))
        if self.eq_a.shape[0]:
            h = xs @ self.eq_a.T - self.eq_b
        else:
            h = np.zeros((len(xs), 0))
        return f, g, h


def estimate_feasibility_ratio(problem: Problem, samples: int, seed: int) -> float:
    """Fraction of uniform-in-bounds samples with zero constraint violation."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    spec = problem.spec
    rng = np.random.Generator(np.random.Philox(seed))
    feasible = 0
    remaining = samples
    while remaining > 0:
        n = min(remaining, 100_000)
        xs = spec.lower + rng.random((n, spec.dim)) * (spec.upper - spec.lower)
        _, g, h = problem.evaluate_batch(xs)
        cv = np.zeros(n)
        if g.shape[1]:
            cv += np.maximum(g, 0.0).sum(axis=1)
        if h.shape[1]:
            cv += np.maximum(np.abs(h) - spec.eps, 0.0).sum(axis=1)
        feasible += int((cv == 0.0).sum())
        remaining -= n
    return feasible / samples


_OBJECTIVES = ("sphere", "rosenbrock", "rastrigin")


def synthesize_training_cop(
    seed: int,
    dim: int,
    n_ineq: int,
    n_eq: int,
    target_feasibility: float = 0.5,
    calibration_samples: int = 10_000,
) -> SyntheticCop:
    """Deterministic-in-seed synthetic COP with a tunable feasible fraction.

    For inequality-only instances the Monte Carlo feasibility estimate lands
    within about +/-0.15 of ``target_feasibility``; instances with equality
    constraints have measure-zero feasible sets by construction.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if n_ineq + n_eq < 1:
        raise ValueError("need at least one constraint")
    if not (0.0 < target_feasibility <= 1.0):
        raise ValueError("target_feasibility must lie in (0, 1]")

    for attempt in range(10):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([_SYNTHETIC_COP_SALT, seed, attempt]))
        )
        lower = np.full(dim, -5.0)
        upper = np.full(dim, 5.0)
        span = upper - lower
        objective = _OBJECTIVES[int(rng.integers(len(_OBJECTIVES)))]
        x_opt = lower + 0.2 * span + rng.random(dim) * 0.6 * span

        probe = lower + rng.random((calibration_samples, dim)) * span

        # Per-constraint quantile level chosen so the joint feasible fraction
        # under rough independence matches the target.
        level = target_feasibility ** (1.0 / n_ineq) if n_ineq else 1.0
        ineqs = []
        for _ in range(n_ineq):
            if rng.random() < 0.5:
                a = rng.standard_normal(dim)
                a /= np.linalg.norm(a)
                vals = probe @ a
                if level >= 1.0:
                    b = vals.max() + 0.1 * abs(vals.max() - vals.min() + 1.0)
                else:
                    b = float(np.quantile(vals, level))
                ineqs.append(_LinearConstraint(a=a, b=b))
            else:
                center = lower + rng.random(dim) * span
                dist_sq = ((probe - center) ** 2).sum(axis=1)
                if level >= 1.0:
                    r_sq = dist_sq.max() * 1.1
                else:
                    r_sq = float(np.quantile(dist_sq, level))
                ineqs.append(_QuadraticConstraint(center=center, radius_sq=r_sq))

        if n_eq:
            anchor = lower + 0.25 * span + rng.random(dim) * 0.5 * span
            eq_a = rng.standard_normal((n_eq, dim))
            eq_a /= np.linalg.norm(eq_a, axis=1, keepdims=True)
            eq_b = eq_a @ anchor
        else:
            eq_a = np.zeros((0, dim))
            eq_b = np.zeros(0)

        spec = ProblemSpec(
            id=f"syn-s{seed}-d{dim}",
            dim=dim,
            n_ineq=n_ineq,
            n_total=n_ineq + n_eq,
            lower=lower,
            upper=upper,
        )
        cop = SyntheticCop(spec, objective, x_opt, ineqs, eq_a, eq_b)

        if n_eq == 0:
            estimate = estimate_feasibility_ratio(cop, calibration_samples, seed=seed + 1)
            if abs(estimate - target_feasibility) > 0.15 and target_feasibility < 1.0:
                continue
        return cop

    raise RuntimeError(
        f"could not synthesize a COP near target feasibility {target_feasibility} "
        f"after 10 attempts (seed={seed})"
    )
