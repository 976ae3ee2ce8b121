"""Rendering campaign results into tables and plot-ready CSV files.

``table_minv`` cells follow the x.xxxxe(+/-)k convention for means with a
two-decimal mantissa for standard deviations, e.g. ``-4.7769e-1(2.91e-2) +``;
cells with no feasible run in any replicate read ``NaN(NaN)``.  The long-form
``summary_long.csv`` carries full-precision values and round-trips exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .stats import StatsSummary, significance_mark


def sci(value: float, decimals: int) -> str:
    """Scientific notation with a trimmed exponent: -0.47769 -> '-4.7769e-1'."""
    mantissa, exponent = f"{value:.{decimals}e}".split("e")
    exp = int(exponent)
    sign = "+" if exp >= 0 else "-"
    return f"{mantissa}e{sign}{abs(exp)}"


def format_cell(summary: StatsSummary, mark: str) -> str:
    if summary.is_nan:
        return "NaN(NaN)"
    text = f"{sci(summary.v_avg, 4)}({sci(summary.v_std, 2)})"
    if mark:
        text += f" {mark}"
    return text


def compute_marks(
    summaries: dict, algorithms: list[str], problems: list[str], reference: str, alpha: float = 0.05
) -> dict:
    """Significance mark of every non-reference cell against the reference.

    Blank where either side has no feasible runs (the NaN convention) or the
    cell is the reference itself.
    """
    marks: dict = {}
    for problem in problems:
        ref = summaries.get((reference, problem))
        for algo in algorithms:
            if algo == reference:
                marks[(algo, problem)] = ""
                continue
            cell = summaries.get((algo, problem))
            if cell is None or ref is None or cell.is_nan or ref.is_nan:
                marks[(algo, problem)] = ""
                continue
            marks[(algo, problem)] = significance_mark(ref.bests, cell.bests, alpha=alpha)
    return marks


def tally_marks(marks: dict, algorithms: list[str], problems: list[str]) -> dict:
    tallies = {}
    for algo in algorithms:
        counts = {"+": 0, "-": 0, "=": 0}
        for problem in problems:
            m = marks.get((algo, problem), "")
            if m in counts:
                counts[m] += 1
        tallies[algo] = counts
    return tallies


def emit_reports(
    summaries: dict,
    marks: dict,
    timing,
    out_dir: Path | str,
    algorithms: list[str],
    problems: list[str],
    reference: str,
) -> list[Path]:
    """Write every report file; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def cell(algo: str, problem: str) -> str:
        s = summaries.get((algo, problem))
        if s is None:
            return ""
        return format_cell(s, marks.get((algo, problem), ""))

    # table_minv.csv / .md : problems x algorithms, composite display cells
    path = out_dir / "table_minv.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem"] + algorithms)
        for problem in problems:
            writer.writerow([problem] + [cell(a, problem) for a in algorithms])
    written.append(path)

    tallies = tally_marks(marks, algorithms, problems)
    path = out_dir / "table_minv.md"
    with open(path, "w", encoding="utf-8") as fh:
        header = ["problem"] + [
            a + (" (ref)" if a == reference else "") for a in algorithms
        ]
        fh.write("| " + " | ".join(header) + " |\n")
        fh.write("|" + "---|" * len(header) + "\n")
        for problem in problems:
            fh.write("| " + " | ".join([problem] + [cell(a, problem) for a in algorithms]) + " |\n")
        tally_cells = [
            "" if a == reference else
            f"{tallies[a]['+']}/{tallies[a]['-']}/{tallies[a]['=']}"
            for a in algorithms
        ]
        fh.write("| +/-/= | " + " | ".join(tally_cells) + " |\n")
        fh.write("\nMarks are relative to the reference column at alpha=0.05; "
                 "a '+' means significantly better (lower minimum), '-' worse, '=' no difference.\n")
        sources = sorted({
            (p, s.data_source) for (a, p), s in summaries.items()
        })
        fh.write("\nInstance data sources: " + ", ".join(f"{p}={src}" for p, src in sources) + "\n")
    written.append(path)

    # plusminus.csv : the +/-/= tally row per algorithm
    path = out_dir / "plusminus.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algo", "plus", "minus", "equal"])
        for algo in algorithms:
            if algo == reference:
                continue
            t = tallies[algo]
            writer.writerow([algo, t["+"], t["-"], t["="]])
    written.append(path)

    # summary_long.csv : full precision, machine-readable, exact round-trip
    path = out_dir / "summary_long.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "algo", "problem", "n_runs", "n_feasible", "feasibility_rate", "is_nan",
            "v_avg", "v_std", "best", "median", "worst", "mark", "data_source",
        ])
        for algo in algorithms:
            for problem in problems:
                s = summaries.get((algo, problem))
                if s is None:
                    continue
                writer.writerow([
                    algo, problem, s.n_runs, s.n_feasible, repr(s.feasibility_rate),
                    int(s.is_nan),
                    "" if s.v_avg is None else repr(s.v_avg),
                    "" if s.v_std is None else repr(s.v_std),
                    "" if s.best is None else repr(s.best),
                    "" if s.median is None else repr(s.median),
                    "" if s.worst is None else repr(s.worst),
                    marks.get((algo, problem), ""),
                    s.data_source,
                ])
    written.append(path)

    if timing is not None:
        path = out_dir / "timing.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["algo", "problem", "wall_seconds", "normalized", "t1_seconds_per_1e4"])
            for algo in algorithms:
                for problem in problems:
                    key = (algo, problem)
                    if key not in timing.wall_seconds:
                        continue
                    writer.writerow([
                        algo, problem,
                        repr(timing.wall_seconds[key]),
                        repr(timing.normalized[key]),
                        repr(timing.t1_seconds.get(problem, "")),
                    ])
        written.append(path)

        path = out_dir / "timing_plot.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["problem", "algo", "normalized_time"])
            for problem in problems:
                for algo in algorithms:
                    key = (algo, problem)
                    if key in timing.normalized:
                        writer.writerow([problem, algo, repr(timing.normalized[key])])
        written.append(path)

    return written


def parse_summary_long(path: Path | str) -> dict:
    """Read ``summary_long.csv`` back into StatsSummary objects (sans bests)."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            def opt(name: str) -> float | None:
                return None if row[name] == "" else float(row[name])

            out[(row["algo"], row["problem"])] = StatsSummary(
                algo=row["algo"],
                problem=row["problem"],
                n_runs=int(row["n_runs"]),
                n_feasible=int(row["n_feasible"]),
                feasibility_rate=float(row["feasibility_rate"]),
                is_nan=bool(int(row["is_nan"])),
                v_avg=opt("v_avg"),
                v_std=opt("v_std"),
                best=opt("best"),
                median=opt("median"),
                worst=opt("worst"),
                bests=(),
                data_source=row["data_source"],
            )
    return out
