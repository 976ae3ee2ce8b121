"""Constrained problems: benchmark suite, toys and synthetic training COPs."""

from __future__ import annotations

from pathlib import Path

from .base import (
    BudgetedProblem,
    ConfigurationError,
    Evaluation,
    Problem,
    ProblemData,
    ProblemSpec,
    DEFAULT_EQUALITY_EPS,
)
from .cec2010 import CEC2010_IDS, Cec2010Problem, load_manifest, make_cec2010_problem
from .datafiles import DataFileError, load_problem_data, synthesize_problem_data
from .synthetic import SyntheticCop, estimate_feasibility_ratio, synthesize_training_cop
from .toy import SphereRing

__all__ = [
    "BudgetedProblem",
    "CEC2010_IDS",
    "Cec2010Problem",
    "ConfigurationError",
    "DataFileError",
    "DEFAULT_EQUALITY_EPS",
    "Evaluation",
    "Problem",
    "ProblemData",
    "ProblemSpec",
    "SphereRing",
    "SyntheticCop",
    "estimate_feasibility_ratio",
    "get_problem",
    "load_manifest",
    "load_problem_data",
    "make_cec2010_problem",
    "synthesize_problem_data",
    "synthesize_training_cop",
]


def get_problem(problem_id: str, dim: int, data_dir: Path | str | None = None) -> Problem:
    """Resolve a problem id used in configs and CLI flags.

    Accepts benchmark ids (``C01``..``C18``), ``sphere-ring`` and synthetic ids
    of the form ``syn-s<seed>-d<dim>``.
    """
    if problem_id in CEC2010_IDS:
        return make_cec2010_problem(problem_id, dim, data_dir=data_dir)
    if problem_id == "sphere-ring":
        return SphereRing(dim=dim)
    if problem_id.startswith("syn-s"):
        try:
            seed_part, dim_part = problem_id[len("syn-s"):].split("-d")
            seed = int(seed_part)
            syn_dim = int(dim_part)
        except ValueError:
            raise ConfigurationError(f"malformed synthetic problem id: {problem_id!r}") from None
        return synthesize_training_cop(seed=seed, dim=syn_dim, n_ineq=2, n_eq=0)
    raise ConfigurationError(f"unknown problem id: {problem_id!r}")
