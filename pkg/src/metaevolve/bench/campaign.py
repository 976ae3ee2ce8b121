"""Multi-run campaigns: seeds, resumability, timing, and concurrency.

One run is one file (``runs/{algo}/{problem}/{seed}.jsonl``) and a campaign
simply fills in the missing files, so interrupted campaigns resume for free
and cells never contend on writes.  Failures are isolated per cell and
summarized instead of aborting the whole campaign.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..engine import RunConfig, RunLog, run
from ..problems import get_problem
from ..ruledsl import BUILTIN_RULE_TEXTS, parse

PROTOCOL_MAX_FE = {10: 200_000, 30: 600_000}


def default_max_fe(dim: int) -> int:
    return PROTOCOL_MAX_FE.get(dim, 20_000 * dim)


def default_pop_size(algo: str, dim: int) -> int:
    if algo == "lshade":
        return 18 * dim
    return 100 if dim <= 10 else 200


@dataclass
class CampaignConfig:
    algorithms: list[str]
    problems: list[str]
    dim: int = 10
    runs: int = 31
    max_fe: int | None = None
    base_seed: int = 1
    out_dir: Path = Path("campaign-out")
    jobs: int = 1
    reference: str | None = None  # significance marks are relative to this algo
    data_dir: str | None = None
    log_every: int = 100
    pop_size: int | None = None  # override; default depends on algorithm

    def __post_init__(self) -> None:
        self.out_dir = Path(self.out_dir)
        if self.runs < 2:
            raise ValueError("a campaign needs runs >= 2 for statistics")
        if self.max_fe is None:
            self.max_fe = default_max_fe(self.dim)
        if self.reference is None and self.algorithms:
            self.reference = self.algorithms[0]

    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.runs)]


def algo_dir_name(algo: str) -> str:
    return algo.replace(":", "_").replace("/", "_")


def run_path(out_dir: Path, algo: str, problem: str, seed: int) -> Path:
    return Path(out_dir) / "runs" / algo_dir_name(algo) / problem / f"{seed}.jsonl"


def resolve_rule_spec(algo: str):
    """Map an algorithm tag to what RunConfig.rule expects.

    Tags: ``de`` / ``lshade`` / ``ga`` for natives, ``rule:<builtin name>`` or
    ``rule:<path>`` for interpreter-driven runs.
    """
    if algo in ("de", "lshade", "ga"):
        return algo
    if algo.startswith("rule:"):
        name = algo[len("rule:"):]
        if name in BUILTIN_RULE_TEXTS:
            return parse(BUILTIN_RULE_TEXTS[name])
        path = Path(name)
        if path.exists():
            return parse(path.read_text(encoding="utf-8"))
        raise ValueError(f"rule {name!r} is neither a builtin rule nor a readable file")
    raise ValueError(f"unknown algorithm tag {algo!r}")


def execute_cell(args: dict) -> tuple[str, str | None]:
    """Run one (algo, problem, seed) cell and persist its log.

    Module-level so process pools can pickle it.  Returns (key, error text).
    """
    key = f"{args['algo']}/{args['problem']}/seed={args['seed']}"
    try:
        problem = get_problem(args["problem"], args["dim"], data_dir=args["data_dir"])
        rule = resolve_rule_spec(args["algo"])
        config = RunConfig(
            pop_size=args["pop_size"],
            max_fe=args["max_fe"],
            seed=args["seed"],
            rule=rule,
            log_every=args["log_every"],
        )
        log = run(problem, config)
        log.algo = args["algo"]  # report under the campaign tag, not the engine label
        log.save(args["path"])
        return key, None
    except Exception as exc:
        return key, f"{exc.__class__.__name__}: {exc}"


@dataclass
class CampaignResult:
    config: CampaignConfig
    executed: int
    skipped: int
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_campaign(config: CampaignConfig) -> CampaignResult:
    tasks = []
    skipped = 0
    for algo in config.algorithms:
        resolve_rule_spec(algo)  # fail fast on unknown tags
        pop = config.pop_size or default_pop_size(algo, config.dim)
        for problem in config.problems:
            for seed in config.seeds():
                path = run_path(config.out_dir, algo, problem, seed)
                if path.exists():
                    skipped += 1
                    continue
                tasks.append(
                    {
                        "algo": algo,
                        "problem": problem,
                        "dim": config.dim,
                        "seed": seed,
                        "max_fe": config.max_fe,
                        "pop_size": pop,
                        "log_every": config.log_every,
                        "data_dir": config.data_dir,
                        "path": str(path),
                    }
                )

    failures: list[tuple[str, str]] = []
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(execute_cell, t) for t in tasks]
            for fut in as_completed(futures):
                key, err = fut.result()
                if err is not None:
                    failures.append((key, err))
    else:
        for t in tasks:
            key, err = execute_cell(t)
            if err is not None:
                failures.append((key, err))
    failures.sort()
    return CampaignResult(config=config, executed=len(tasks), skipped=skipped, failures=failures)


def load_cell_logs(out_dir: Path, algo: str, problem: str) -> list[RunLog]:
    cell_dir = Path(out_dir) / "runs" / algo_dir_name(algo) / problem
    if not cell_dir.exists():
        return []
    return [RunLog.load(p) for p in sorted(cell_dir.glob("*.jsonl"), key=lambda p: int(p.stem))]


# --- timing ------------------------------------------------------------------


@dataclass(frozen=True)
class TimingReport:
    # (algo, problem) -> mean full-optimization wall seconds (T2)
    wall_seconds: dict
    # (algo, problem) -> wall / fastest wall on that problem; the minimum is 1.0
    normalized: dict
    # problem -> seconds per 10^4 evaluations (T1, algorithm-independent)
    t1_seconds: dict


def measure_t1(problem, n_evals: int = 10_000, batch: int = 100, seed: int = 0) -> float:
    """Pure evaluation cost: wall seconds for ``n_evals`` point evaluations."""
    spec = problem.spec
    rng = np.random.Generator(np.random.Philox(seed))
    xs = spec.lower + rng.random((batch, spec.dim)) * (spec.upper - spec.lower)
    done = 0
    start = time.perf_counter()
    while done < n_evals:
        problem.evaluate_batch(xs)
        done += batch
    return time.perf_counter() - start


def timing_report(
    config: CampaignConfig, t1_evals: int = 10_000
) -> TimingReport:
    wall: dict = {}
    for algo in config.algorithms:
        for problem in config.problems:
            logs = load_cell_logs(config.out_dir, algo, problem)
            if logs:
                wall[(algo, problem)] = float(np.mean([log.wall_seconds for log in logs]))
    normalized: dict = {}
    for problem in config.problems:
        cells = {a: wall[(a, problem)] for a in config.algorithms if (a, problem) in wall}
        if not cells:
            continue
        fastest = min(cells.values())
        for a, w in cells.items():
            normalized[(a, problem)] = w / fastest if fastest > 0 else 1.0
    t1 = {}
    for problem in config.problems:
        t1[problem] = measure_t1(get_problem(problem, config.dim, data_dir=config.data_dir), t1_evals)
    return TimingReport(wall_seconds=wall, normalized=normalized, t1_seconds=t1)
