"""Inner optimization loop: run any update rule, or a native baseline, under a
shared evaluation budget and feasibility-rule selection.

Budget accounting: initialization bills one evaluation per individual and the
generation loop runs while ``fe + N <= max_fe``, so the budget is never
overshot and every evaluation is billed.  With N=50 and max_fe=200 that is
exactly three offspring generations (FE 50 -> 100 -> 150 -> 200).

Baselines:

* ``de`` -- DE/rand/1/bin with F=0.5, CR=0.9 and elitist union selection.
  Its per-individual draw sequence matches the interpreter's randomness
  contract, so running the builtin ``de_rand_1_bin`` rule through the
  interpreter reproduces this baseline bit for bit.
* ``lshade`` -- success-history parameter adaptation (memory H=6,
  current-to-pbest/1 with an external archive) plus linear population-size
  reduction down to 4, with one-to-one feasibility-rule replacement.
* ``ga`` -- per-parent SBX crossover (eta=20) against a tournament-selected
  mate, polynomial mutation (eta=20, rate 1/D), union selection.

All offspring are clamped to the bounds before evaluation, uniformly across
algorithms, to isolate the effect of the update rule itself.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CV_SENTINEL, best_index, select_indices
from .ruledsl import RuleAst, RuleContext, binomial_crossover, draw_distinct_indices, interpret, print_rule

BASELINE_TAGS = ("de", "lshade", "ga")


@dataclass
class RunConfig:
    pop_size: int
    max_fe: int
    seed: int
    rule: RuleAst | str  # a parsed rule, or one of BASELINE_TAGS
    log_every: int = 10
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4 (three distinct donors plus the target)")
        if self.max_fe < self.pop_size:
            raise ValueError("max_fe must cover at least the initialization batch")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if isinstance(self.rule, str) and self.rule not in BASELINE_TAGS:
            raise ValueError(f"unknown baseline tag {self.rule!r}; expected one of {BASELINE_TAGS}")

    @property
    def algo_label(self) -> str:
        return self.rule if isinstance(self.rule, str) else "rule"

    def echo(self) -> dict:
        rule = self.rule if isinstance(self.rule, str) else print_rule(self.rule)
        return {
            "pop_size": self.pop_size,
            "max_fe": self.max_fe,
            "seed": self.seed,
            "rule": rule,
            "log_every": self.log_every,
            "params": dict(self.params),
        }


@dataclass(frozen=True)
class GenEntry:
    fe_used: int
    best_cv: float
    best_f: float | None  # present only when the incumbent is feasible


@dataclass
class RunLog:
    algo: str
    problem_id: str
    seed: int
    config: dict
    entries: list[GenEntry]
    best_x: np.ndarray
    best_f: float
    best_cv: float
    best_feasible: bool
    generations: int
    fe_used: int
    final_pop_size: int
    wall_seconds: float
    events: dict
    data_source: str
    # full final state, kept in memory for exact-equality tests, not serialized
    final_population: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def to_jsonl(self) -> str:
        lines = [json.dumps({"record": "config", "algo": self.algo, "problem": self.problem_id,
                             "seed": self.seed, "data_source": self.data_source, **self.config})]
        for e in self.entries:
            lines.append(json.dumps({"record": "generation", "fe_used": e.fe_used,
                                     "best_cv": e.best_cv, "best_f": e.best_f}))
        lines.append(json.dumps({
            "record": "summary",
            "best_x": [float(v) for v in self.best_x],
            "best_f": self.best_f,
            "best_cv": self.best_cv,
            "best_feasible": self.best_feasible,
            "generations": self.generations,
            "fe_used": self.fe_used,
            "final_pop_size": self.final_pop_size,
            "wall_seconds": self.wall_seconds,
            "events": self.events,
        }))
        return "\n".join(lines) + "\n"

    def save(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.to_jsonl(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def from_jsonl(cls, text: str) -> "RunLog":
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        head = lines[0]
        tail = lines[-1]
        entries = [
            GenEntry(fe_used=rec["fe_used"], best_cv=rec["best_cv"], best_f=rec["best_f"])
            for rec in lines[1:-1]
        ]
        config = {k: v for k, v in head.items() if k not in ("record", "algo", "problem", "seed", "data_source")}
        return cls(
            algo=head["algo"],
            problem_id=head["problem"],
            seed=head["seed"],
            config=config,
            entries=entries,
            best_x=np.asarray(tail["best_x"], dtype=np.float64),
            best_f=tail["best_f"],
            best_cv=tail["best_cv"],
            best_feasible=tail["best_feasible"],
            generations=tail["generations"],
            fe_used=tail["fe_used"],
            final_pop_size=tail["final_pop_size"],
            wall_seconds=tail["wall_seconds"],
            events=tail["events"],
            data_source=head.get("data_source", "n/a"),
        )

    @classmethod
    def load(cls, path: Path | str) -> "RunLog":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def _evaluate(problem, xs: np.ndarray, events: dict) -> tuple[np.ndarray, np.ndarray]:
    """Batch-evaluate, fold constraints into cv, and sanitize non-finite rows."""
    spec = problem.spec
    f, g, h = problem.evaluate_batch(xs)
    f = np.asarray(f, dtype=np.float64).copy()
    cv = np.zeros(len(xs))
    with np.errstate(invalid="ignore"):
        if g.shape[1]:
            cv += np.maximum(g, 0.0).sum(axis=1)
        if h.shape[1]:
            cv += np.maximum(np.abs(h) - spec.eps, 0.0).sum(axis=1)
    bad = ~(np.isfinite(f) & np.isfinite(cv))
    if bad.any():
        events["nonfinite_evals"] = events.get("nonfinite_evals", 0) + int(bad.sum())
        f[bad] = CV_SENTINEL
        cv[bad] = CV_SENTINEL
    return f, cv


def _log_point(entries: list[GenEntry], fe: int, f: np.ndarray, cv: np.ndarray) -> None:
    b = best_index(f, cv)
    feasible = cv[b] == 0.0
    entries.append(GenEntry(fe_used=fe, best_cv=float(cv[b]), best_f=float(f[b]) if feasible else None))


def _finish(
    algo: str,
    problem,
    config: RunConfig,
    entries: list[GenEntry],
    X: np.ndarray,
    f: np.ndarray,
    cv: np.ndarray,
    generations: int,
    fe: int,
    events: dict,
    t0: float,
) -> RunLog:
    b = best_index(f, cv)
    data_source = getattr(getattr(problem, "data", None), "source", "n/a")
    return RunLog(
        algo=algo,
        problem_id=problem.spec.id,
        seed=config.seed,
        config=config.echo(),
        entries=entries,
        best_x=X[b].copy(),
        best_f=float(f[b]),
        best_cv=float(cv[b]),
        best_feasible=bool(cv[b] == 0.0),
        generations=generations,
        fe_used=fe,
        final_pop_size=len(X),
        wall_seconds=time.perf_counter() - t0,
        events=events,
        data_source=data_source,
    )


# --- offspring generators ----------------------------------------------------


def _dsl_offspring(rule: RuleAst, X, f, cv, rng, lb, ub, events) -> np.ndarray:
    n = X.shape[0]
    out = np.empty_like(X)
    b = best_index(f, cv)
    mean = X.mean(axis=0)
    resampled = 0
    for i in range(n):
        ctx = RuleContext.for_target(X, f, cv, i, b, mean, lb, ub, rng)
        out[i] = interpret(rule, ctx)
        resampled += ctx.n_resampled
    if resampled:
        events["dsl_resamples"] = events.get("dsl_resamples", 0) + resampled
    return out


def _de_offspring(X, f, cv, rng, lb, ub, F: float, CR: float) -> np.ndarray:
    n = X.shape[0]
    out = np.empty_like(X)
    for i in range(n):
        r1, r2, r3 = draw_distinct_indices(rng, n, i)
        v = X[r1] + F * (X[r2] - X[r3])
        v = np.clip(v, lb, ub)
        out[i] = binomial_crossover(X[i], v, CR, rng)
    return out


def _tournament(rng, f, cv, n: int) -> int:
    a = int(rng.integers(n))
    b = int(rng.integers(n))
    return a if (cv[a], f[a]) <= (cv[b], f[b]) else b


def _ga_offspring(X, f, cv, rng, lb, ub, pc, pm, eta_c, eta_m) -> np.ndarray:
    n, d = X.shape
    span = ub - lb
    out = np.empty_like(X)
    e_c = 1.0 / (eta_c + 1.0)
    e_m = 1.0 / (eta_m + 1.0)
    for i in range(n):
        mate = _tournament(rng, f, cv, n)
        child = X[i]
        if rng.random() < pc:
            u = rng.random(d)
            beta = np.where(u <= 0.5, (2.0 * u) ** e_c, (1.0 / (2.0 * (1.0 - u))) ** e_c)
            child = 0.5 * ((1.0 + beta) * X[i] + (1.0 - beta) * X[mate])
        um = rng.random(d)
        ur = rng.random(d)
        mutate = um < pm
        if mutate.any():
            delta = np.where(
                ur < 0.5, (2.0 * ur) ** e_m - 1.0, 1.0 - (2.0 * (1.0 - ur)) ** e_m
            )
            child = np.where(mutate, child + delta * span, child)
        out[i] = np.clip(child, lb, ub)
    return out


# --- generational loop (rule / de / ga) ---------------------------------------


def run(problem, config: RunConfig) -> RunLog:
    """Execute one seeded run and return its log.

    Fully deterministic in the seed: initialization, offspring generation and
    selection all consume a single Philox stream in a fixed order.
    """
    if isinstance(config.rule, str) and config.rule == "lshade":
        return _run_lshade(problem, config)

    spec = problem.spec
    n, d = config.pop_size, spec.dim
    lb, ub = spec.lower, spec.upper
    rng = np.random.Generator(np.random.Philox(config.seed))
    events: dict = {}
    t0 = time.perf_counter()

    X = lb + rng.random((n, d)) * (ub - lb)
    f, cv = _evaluate(problem, X, events)
    fe = n
    entries: list[GenEntry] = []
    _log_point(entries, fe, f, cv)

    if fe + n > config.max_fe:
        events["warning"] = "budget exhausted before the first offspring generation"
        return _finish(config.algo_label, problem, config, entries, X, f, cv, 0, fe, events, t0)

    if isinstance(config.rule, str):
        if config.rule == "de":
            F = float(config.params.get("F", 0.5))
            CR = float(config.params.get("CR", 0.9))
            make_offspring = lambda: _de_offspring(X, f, cv, rng, lb, ub, F, CR)
            algo = "de"
        else:  # ga
            pc = float(config.params.get("crossover_rate", 0.9))
            pm_default = 1.0 / d
            pm = float(config.params.get("mutation_rate", pm_default))
            eta_c = float(config.params.get("eta_crossover", 20.0))
            eta_m = float(config.params.get("eta_mutation", 20.0))
            make_offspring = lambda: _ga_offspring(X, f, cv, rng, lb, ub, pc, pm, eta_c, eta_m)
            algo = "ga"
    else:
        rule = config.rule
        make_offspring = lambda: _dsl_offspring(rule, X, f, cv, rng, lb, ub, events)
        algo = "rule"

    gen = 0
    while fe + n <= config.max_fe:
        offspring = make_offspring()
        fo, cvo = _evaluate(problem, offspring, events)
        fe += n
        gen += 1
        union_X = np.vstack([X, offspring])
        union_f = np.concatenate([f, fo])
        union_cv = np.concatenate([cv, cvo])
        keep = select_indices(union_f, union_cv, n)
        X = union_X[keep]
        f = union_f[keep]
        cv = union_cv[keep]
        if gen % config.log_every == 0 or fe + n > config.max_fe:
            _log_point(entries, fe, f, cv)

    log = _finish(algo, problem, config, entries, X, f, cv, gen, fe, events, t0)
    log.final_population = (X, f, cv)
    return log


def run_baseline_de(problem, config: RunConfig) -> RunLog:
    cfg = RunConfig(config.pop_size, config.max_fe, config.seed, "de", config.log_every, config.params)
    return run(problem, cfg)


def run_baseline_ga(problem, config: RunConfig) -> RunLog:
    cfg = RunConfig(config.pop_size, config.max_fe, config.seed, "ga", config.log_every, config.params)
    return run(problem, cfg)


def run_baseline_lshade(problem, config: RunConfig) -> RunLog:
    cfg = RunConfig(config.pop_size, config.max_fe, config.seed, "lshade", config.log_every, config.params)
    return run(problem, cfg)


# --- lshade ------------------------------------------------------------------


def lshade_pop_schedule(n_init: int, fe: int, max_fe: int, n_min: int = 4) -> int:
    """Linear population-size reduction from ``n_init`` at FE=0 to ``n_min``."""
    return int(round(n_init + (n_min - n_init) * fe / max_fe))


def _draw_cauchy_f(rng, loc: float) -> float:
    f = 0.0
    while f <= 0.0:
        f = loc + 0.1 * math.tan(math.pi * (rng.random() - 0.5))
    return min(f, 1.0)


def _run_lshade(problem, config: RunConfig) -> RunLog:
    spec = problem.spec
    d = spec.dim
    lb, ub = spec.lower, spec.upper
    n_init = config.pop_size
    h_size = int(config.params.get("memory_size", 6))
    p_rate = float(config.params.get("p_best_rate", 0.11))
    arc_rate = float(config.params.get("archive_rate", 2.6))
    rng = np.random.Generator(np.random.Philox(config.seed))
    events: dict = {}
    t0 = time.perf_counter()

    n = n_init
    X = lb + rng.random((n, d)) * (ub - lb)
    f, cv = _evaluate(problem, X, events)
    fe = n
    entries: list[GenEntry] = []
    _log_point(entries, fe, f, cv)

    memory_f = np.full(h_size, 0.5)
    memory_cr = np.full(h_size, 0.5)
    mem_pos = 0
    archive: list[np.ndarray] = []

    if fe + n > config.max_fe:
        events["warning"] = "budget exhausted before the first offspring generation"
        return _finish("lshade", problem, config, entries, X, f, cv, 0, fe, events, t0)

    gen = 0
    while fe + n <= config.max_fe:
        order = np.lexsort((np.arange(n), f, cv))
        p_num = max(2, int(round(p_rate * n)))
        offspring = np.empty_like(X)
        fs = np.empty(n)
        crs = np.empty(n)
        for i in range(n):
            r = int(rng.integers(h_size))
            fi = _draw_cauchy_f(rng, memory_f[r])
            cri = float(np.clip(memory_cr[r] + 0.1 * rng.standard_normal(), 0.0, 1.0))
            fs[i] = fi
            crs[i] = cri
            pbest = int(order[int(rng.integers(p_num))])
            r1 = i
            while r1 == i:
                r1 = int(rng.integers(n))
            pool = n + len(archive)
            r2 = i
            while r2 == i or r2 == r1:
                r2 = int(rng.integers(pool))
            x_r2 = X[r2] if r2 < n else archive[r2 - n]
            v = X[i] + fi * (X[pbest] - X[i]) + fi * (X[r1] - x_r2)
            v = np.clip(v, lb, ub)
            offspring[i] = binomial_crossover(X[i], v, cri, rng)

        fo, cvo = _evaluate(problem, offspring, events)
        fe += n
        gen += 1

        s_f: list[float] = []
        s_cr: list[float] = []
        weights: list[float] = []
        for i in range(n):
            if (cvo[i], fo[i]) <= (cv[i], f[i]):
                if (cvo[i], fo[i]) < (cv[i], f[i]):
                    improvement = cv[i] - cvo[i] if cvo[i] < cv[i] else f[i] - fo[i]
                    s_f.append(fs[i])
                    s_cr.append(crs[i])
                    weights.append(improvement)
                    archive.append(X[i].copy())
                X[i] = offspring[i]
                f[i] = fo[i]
                cv[i] = cvo[i]

        arc_cap = max(1, int(round(arc_rate * n)))
        while len(archive) > arc_cap:
            del archive[int(rng.integers(len(archive)))]

        if s_f:
            w = np.asarray(weights)
            w = w / w.sum()
            sf = np.asarray(s_f)
            memory_f[mem_pos] = (w * sf * sf).sum() / (w * sf).sum()
            memory_cr[mem_pos] = (w * np.asarray(s_cr)).sum()
            mem_pos = (mem_pos + 1) % h_size

        n_new = max(4, lshade_pop_schedule(n_init, fe, config.max_fe))
        if n_new < n:
            keep = np.lexsort((np.arange(n), f, cv))[:n_new]
            keep.sort()  # preserve positional order of survivors
            X, f, cv = X[keep], f[keep], cv[keep]
            n = n_new
            arc_cap = max(1, int(round(arc_rate * n)))
            while len(archive) > arc_cap:
                del archive[int(rng.integers(len(archive)))]

        if gen % config.log_every == 0 or fe + n > config.max_fe:
            _log_point(entries, fe, f, cv)

    log = _finish("lshade", problem, config, entries, X, f, cv, gen, fe, events, t0)
    log.final_population = (X, f, cv)
    return log
