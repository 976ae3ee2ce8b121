"""Per-cell statistics and pairwise significance marks.

A run's best-of-run value is its best feasible objective; runs that never
reach feasibility contribute to the feasibility rate but are kept out of the
objective statistics, and a cell with zero feasible runs is reported as NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from ..engine import RunLog


@dataclass(frozen=True)
class StatsSummary:
    algo: str
    problem: str
    n_runs: int
    n_feasible: int
    feasibility_rate: float
    is_nan: bool
    v_avg: float | None
    v_std: float | None
    best: float | None
    median: float | None
    worst: float | None
    bests: tuple[float, ...]  # feasible best-of-run values, run order
    data_source: str


def summarize(logs: list[RunLog], algo: str, problem: str) -> StatsSummary:
    if not logs:
        raise ValueError(f"no runs recorded for ({algo}, {problem})")
    bests = tuple(log.best_f for log in logs if log.best_feasible)
    n_runs = len(logs)
    n_feasible = len(bests)
    sources = {log.data_source for log in logs}
    data_source = sources.pop() if len(sources) == 1 else "mixed"
    if n_feasible == 0:
        return StatsSummary(
            algo=algo,
            problem=problem,
            n_runs=n_runs,
            n_feasible=0,
            feasibility_rate=0.0,
            is_nan=True,
            v_avg=None,
            v_std=None,
            best=None,
            median=None,
            worst=None,
            bests=(),
            data_source=data_source,
        )
    arr = np.asarray(bests)
    v_std = float(arr.std(ddof=1)) if n_feasible > 1 else 0.0
    return StatsSummary(
        algo=algo,
        problem=problem,
        n_runs=n_runs,
        n_feasible=n_feasible,
        feasibility_rate=n_feasible / n_runs,
        is_nan=False,
        v_avg=float(arr.mean()),
        v_std=v_std,
        best=float(arr.min()),
        median=float(np.median(arr)),
        worst=float(arr.max()),
        bests=bests,
        data_source=data_source,
    )


def significance_mark(reference_bests, other_bests, alpha: float = 0.05) -> str:
    """Two-sided rank-sum verdict on ``other`` relative to ``reference``.

    "+" means the other algorithm's sample is significantly better (lower,
    minimization), "-" significantly worse, "=" no significant difference.
    Exact null distribution for small tie-free samples, normal approximation
    with tie correction otherwise.
    """
    ref = np.asarray(reference_bests, dtype=np.float64)
    oth = np.asarray(other_bests, dtype=np.float64)
    if ref.size < 2 or oth.size < 2:
        raise ValueError("significance_mark needs at least two values per sample")
    has_ties = np.unique(np.concatenate([ref, oth])).size < ref.size + oth.size
    method = "exact" if (max(ref.size, oth.size) < 10 and not has_ties) else "asymptotic"
    result = _scipy_stats.mannwhitneyu(oth, ref, alternative="two-sided", method=method)
    if result.pvalue >= alpha:
        return "="
    med_other = float(np.median(oth))
    med_ref = float(np.median(ref))
    if med_other != med_ref:
        return "+" if med_other < med_ref else "-"
    # identical medians but significant: decide by mean rank (U statistic)
    return "+" if result.statistic < oth.size * ref.size / 2 else "-"
