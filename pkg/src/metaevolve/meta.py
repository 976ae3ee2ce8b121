"""Outer design loop: score candidate update rules on training problems,
archive the results, and iterate an LLM (or scripted stand-in) against the
archived feedback.

Scoring uses per-problem rank normalization rather than raw objective values:
objective scales differ across problems by many orders of magnitude, so each
rule is ranked against every rule ever scored on the same problem
(feasibility rate first, then mean best objective, then mean final
violation), and its aggregate is the mean of ``(n - rank + 1) / n`` over its
problems.  Aggregates always lie in (0, 1], higher is better, and recomputing
over the full history makes the ranking independent of scoring order.

Prompts follow a five-part structure: role definition, task description (the
sampled problem's dimensions, constraint counts, bounds, feasibility estimate
and initial-population statistics; never raw populations), operating
requirements, history feedback (elite rules plus the newest records, with
parse/type errors quoted verbatim so the generator can repair them), and the
output format (fenced ``rule`` blocks with a grammar recap).
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import RunConfig, run
from .llm import LlmRequest
from .problems import estimate_feasibility_ratio
from .ruledsl import (
    BUILTIN_RULE_TEXTS,
    RuleAst,
    RuleError,
    RuleSource,
    parse,
    print_rule,
)

PROMPT_CHAR_CAP = 24000
RECENT_WINDOW = 5
_SCORING_SALT = 0xA7C4


class MetaError(RuntimeError):
    pass


@dataclass
class ProblemScore:
    feasibility_rate: float
    mean_best_f: float | None  # over feasible replicates; None if none were
    mean_final_cv: float

    def rank_key(self) -> tuple[float, float, float]:
        f = self.mean_best_f if self.mean_best_f is not None else float("inf")
        return (-self.feasibility_rate, f, self.mean_final_cv)


@dataclass
class RuleRecord:
    text: str
    rule: RuleAst | None
    per_problem: dict[str, ProblemScore]
    meta_iteration: int
    parse_failure: str | None = None
    aggregate: float | None = None

    @property
    def failed(self) -> bool:
        return self.parse_failure is not None

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "per_problem": {
                pid: {
                    "feasibility_rate": s.feasibility_rate,
                    "mean_best_f": s.mean_best_f,
                    "mean_final_cv": s.mean_final_cv,
                }
                for pid, s in sorted(self.per_problem.items())
            },
            "meta_iteration": self.meta_iteration,
            "parse_failure": self.parse_failure,
            "aggregate": self.aggregate,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RuleRecord":
        rule = None
        if doc["parse_failure"] is None:
            rule = parse(doc["text"])
        return cls(
            text=doc["text"],
            rule=rule,
            per_problem={
                pid: ProblemScore(
                    feasibility_rate=s["feasibility_rate"],
                    mean_best_f=s["mean_best_f"],
                    mean_final_cv=s["mean_final_cv"],
                )
                for pid, s in doc["per_problem"].items()
            },
            meta_iteration=doc["meta_iteration"],
            parse_failure=doc["parse_failure"],
            aggregate=doc["aggregate"],
        )


def score_rule(
    rule: RuleAst | RuleSource | str,
    training_problems: list,
    runs_per_problem: int,
    inner_budget: int,
    seed: int,
    pop_size: int = 50,
    meta_iteration: int = 0,
) -> RuleRecord:
    """Run a rule on every training problem and collect its raw score parts.

    Parse/type failures produce a record carrying the verbatim error text and
    no per-problem entries.  Aggregates are assigned by the archive, where the
    cross-rule ranking lives.
    """
    if runs_per_problem < 1:
        raise ValueError("runs_per_problem must be >= 1")
    if not isinstance(rule, RuleAst):
        text = rule.text if isinstance(rule, RuleSource) else rule
        try:
            ast = parse(rule)
        except RuleError as exc:
            return RuleRecord(
                text=text,
                rule=None,
                per_problem={},
                meta_iteration=meta_iteration,
                parse_failure=f"{exc.kind}: {exc}",
            )
    else:
        ast = rule
        text = print_rule(ast)

    per_problem: dict[str, ProblemScore] = {}
    for p_idx, problem in enumerate(training_problems):
        best_fs: list[float] = []
        final_cvs: list[float] = []
        feasible = 0
        for rep in range(runs_per_problem):
            run_seed = int(
                np.random.SeedSequence([_SCORING_SALT, seed, p_idx, rep]).generate_state(1)[0]
            )
            log = run(problem, RunConfig(pop_size, inner_budget, run_seed, ast, log_every=10**9))
            final_cvs.append(log.best_cv)
            if log.best_feasible:
                feasible += 1
                best_fs.append(log.best_f)
        per_problem[problem.spec.id] = ProblemScore(
            feasibility_rate=feasible / runs_per_problem,
            mean_best_f=statistics.fmean(best_fs) if best_fs else None,
            mean_final_cv=statistics.fmean(final_cvs),
        )
    return RuleRecord(text=text, rule=ast, per_problem=per_problem, meta_iteration=meta_iteration)


@dataclass
class MetaArchive:
    """Append-only history of scored rules plus the derived elite set."""

    history: list[RuleRecord] = field(default_factory=list)
    elite_k: int = 3
    next_iteration: int = 1
    events: list[str] = field(default_factory=list)

    def add(self, record: RuleRecord) -> RuleRecord:
        self.history.append(record)
        self.recompute_aggregates()
        return record

    def recompute_aggregates(self) -> None:
        """Re-rank every record against the full history, problem by problem."""
        keys_by_problem: dict[str, list[tuple[float, float, float]]] = {}
        for rec in self.history:
            for pid, score in rec.per_problem.items():
                keys_by_problem.setdefault(pid, []).append(score.rank_key())
        for rec in self.history:
            if rec.failed or not rec.per_problem:
                rec.aggregate = None
                continue
            normalized = []
            for pid, score in rec.per_problem.items():
                keys = keys_by_problem[pid]
                key = score.rank_key()
                rank = 1 + sum(1 for other in keys if other < key)
                normalized.append((len(keys) - rank + 1) / len(keys))
            rec.aggregate = statistics.fmean(normalized)

    @property
    def elites(self) -> list[RuleRecord]:
        """Top-k successfully scored records, one per canonical rule text."""
        scored = [r for r in self.history if not r.failed and r.aggregate is not None]
        scored.sort(key=lambda r: (-r.aggregate, r.meta_iteration))
        out: list[RuleRecord] = []
        seen: set[str] = set()
        for rec in scored:
            if rec.text in seen:
                continue
            seen.add(rec.text)
            out.append(rec)
            if len(out) == self.elite_k:
                break
        return out

    def to_json(self) -> dict:
        return {
            "version": 1,
            "elite_k": self.elite_k,
            "next_iteration": self.next_iteration,
            "events": list(self.events),
            "history": [rec.to_json() for rec in self.history],
        }

    def save(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, doc: dict) -> "MetaArchive":
        archive = cls(
            history=[RuleRecord.from_json(rec) for rec in doc["history"]],
            elite_k=doc["elite_k"],
            next_iteration=doc["next_iteration"],
            events=list(doc.get("events", [])),
        )
        archive.recompute_aggregates()
        return archive

    @classmethod
    def load(cls, path: Path | str) -> "MetaArchive":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def select_deployment_rule(archive: MetaArchive) -> RuleAst:
    """The best archived rule; ties go to the earliest meta-iteration."""
    elites = archive.elites
    if not elites:
        raise MetaError(
            "archive contains no successfully scored rule; "
            "fall back to the builtin de_rand_1_bin"
        )
    best = elites[0]
    if best.rule is None:
        best.rule = parse(best.text)
    return best.rule


# --- prompt construction -----------------------------------------------------


@dataclass
class ProblemSummary:
    """What the generator is told about the sampled problem: shape and
    population statistics, never raw decision vectors."""

    id: str
    dim: int
    n_ineq: int
    n_eq: int
    lower: float
    upper: float
    feasibility_estimate: float
    pop_size: int
    f_min: float
    f_median: float
    f_max: float
    cv_min: float
    cv_median: float
    cv_max: float


def summarize_problem(
    problem, pop_size: int = 50, seed: int = 0, feasibility_samples: int = 2000
) -> ProblemSummary:
    spec = problem.spec
    rng = np.random.Generator(np.random.Philox(seed))
    xs = spec.lower + rng.random((pop_size, spec.dim)) * (spec.upper - spec.lower)
    f, g, h = problem.evaluate_batch(xs)
    cv = np.zeros(pop_size)
    if g.shape[1]:
        cv += np.maximum(g, 0.0).sum(axis=1)
    if h.shape[1]:
        cv += np.maximum(np.abs(h) - spec.eps, 0.0).sum(axis=1)
    f = np.where(np.isfinite(f), f, np.nan)
    return ProblemSummary(
        id=spec.id,
        dim=spec.dim,
        n_ineq=spec.n_ineq,
        n_eq=spec.n_eq,
        lower=float(spec.lower.min()),
        upper=float(spec.upper.max()),
        feasibility_estimate=estimate_feasibility_ratio(problem, feasibility_samples, seed + 1),
        pop_size=pop_size,
        f_min=float(np.nanmin(f)),
        f_median=float(np.nanmedian(f)),
        f_max=float(np.nanmax(f)),
        cv_min=float(cv.min()),
        cv_median=float(np.median(cv)),
        cv_max=float(cv.max()),
    )


@dataclass
class PromptSections:
    role: str
    task: str
    operating: str
    history: str
    output_format: str

    def user_message(self) -> str:
        return "\n\n".join([self.task, self.operating, self.history, self.output_format])

    def total_chars(self) -> int:
        return sum(len(s) for s in (self.role, self.task, self.operating, self.history, self.output_format))


EMPTY_HISTORY_SENTINEL = "No prior rules evaluated."

_ROLE_TEXT = (
    "You are an expert designer of constrained evolutionary algorithms. "
    "In each episode you invent one-generation population update rules that "
    "balance objective improvement against constraint satisfaction, written "
    "in the small vector expression language described below."
)

_GRAMMAR_RECAP = """\
Rule language recap:
  program  := param* statement+          (straight-line, no loops)
  param    := NAME = NUMBER ;            (leading scalar constants, e.g. F = 0.5;)
  statement:= NAME = expression ;        (the last statement must assign `offspring`)
  expression: + - * / with parentheses and unary minus.
Vector builtins: x (target), best, r1, r2, r3 (distinct random members),
mean (population centroid), lb, ub (bounds).
Scalar builtins: cv and f (target's violation and objective), dim,
rand() and randn() (one scalar draw per call).
Functions: bincross(a, b, CR) binomial crossover of vectors a and b,
clamp(v) projects onto the bounds, abs(a), min(a, b), max(a, b).
Scalars broadcast over vectors. Example:
```rule
F = 0.5;
CR = 0.9;
v = r1 + F * (r2 - r3);
offspring = bincross(x, clamp(v), CR);
```"""


def _format_record(rec: RuleRecord) -> str:
    header = f"[iteration {rec.meta_iteration}]"
    if rec.failed:
        return f"{header} rejected rule:\n{rec.text}\nerror: {rec.parse_failure}"
    parts = []
    for pid, s in sorted(rec.per_problem.items()):
        best = f"{s.mean_best_f:.6g}" if s.mean_best_f is not None else "none feasible"
        parts.append(
            f"{pid}: feasibility_rate={s.feasibility_rate:.2f}, "
            f"mean_best_f={best}, mean_final_cv={s.mean_final_cv:.6g}"
        )
    agg = f"{rec.aggregate:.4f}" if rec.aggregate is not None else "unranked"
    return f"{header} score {agg}\n{rec.text}\n" + "\n".join(parts)


def build_prompt(
    archive: MetaArchive,
    problem_summary: ProblemSummary,
    iteration: int,
    rules_requested: int = 5,
    char_cap: int = PROMPT_CHAR_CAP,
) -> PromptSections:
    """Assemble the five prompt sections for one meta-iteration.

    The history section holds the elite rules plus the most recent records;
    when the whole prompt would exceed ``char_cap`` characters the recent
    records are dropped first, then the oldest elites, so the newest evidence
    and the best rules survive truncation.
    """
    s = problem_summary
    task = (
        f"Design an update rule for the constrained minimization problem {s.id} "
        f"(meta-iteration {iteration}).\n"
        f"Decision vector: {s.dim} variables, each bounded to [{s.lower:g}, {s.upper:g}].\n"
        f"Constraints: {s.n_ineq} inequality and {s.n_eq} equality "
        f"(equality tolerance applies); estimated feasible fraction of the box: "
        f"{s.feasibility_estimate:.4f}.\n"
        f"Statistics of an evaluated random population of {s.pop_size}:\n"
        f"  objective  min={s.f_min:.6g} median={s.f_median:.6g} max={s.f_max:.6g}\n"
        f"  violation  min={s.cv_min:.6g} median={s.cv_median:.6g} max={s.cv_max:.6g}\n"
        f"A rule is applied once per population member per generation; selection "
        f"afterwards keeps the feasibility-rule best of parents and offspring."
    )
    operating = (
        "How to proceed:\n"
        "1. Study the population statistics and the history below; prefer "
        "moves that reduce constraint violation when the population is mostly "
        "infeasible and that exploit gradients of the objective otherwise.\n"
        "2. Reuse parameters that worked (F, CR and friends are yours to pick).\n"
        "3. If a previous rule was rejected, fix the quoted error rather than "
        "resubmitting it.\n"
        f"4. Propose {rules_requested} candidate rule(s), diverse rather than "
        "five near-copies.\n"
        "5. Stay inside the rule language: no loops, no conditionals, no new "
        "builtins."
    )
    output_format = (
        f"Return exactly {rules_requested} update rule(s). Each rule must appear "
        "inside its own fenced block that starts with a line containing exactly "
        "```rule and ends with a line containing exactly ``` -- no other text "
        "inside the fences.\n\n" + _GRAMMAR_RECAP
    )

    elites = archive.elites
    elite_texts = {rec.text for rec in elites}
    recent = [rec for rec in archive.history[-RECENT_WINDOW:] if rec.text not in elite_texts]

    def render_history(elite_list, recent_list) -> str:
        if not elite_list and not recent_list:
            return EMPTY_HISTORY_SENTINEL
        blocks = []
        if elite_list:
            blocks.append("Best rules so far:")
            blocks += [_format_record(r) for r in elite_list]
        if recent_list:
            blocks.append("Most recent attempts:")
            blocks += [_format_record(r) for r in recent_list]
        return "\n\n".join(blocks)

    history = render_history(elites, recent)
    sections = PromptSections(_ROLE_TEXT, task, operating, history, output_format)
    while sections.total_chars() > char_cap and (elites or recent):
        if recent:
            recent = recent[:-1]
        else:
            elites = elites[1:]
        history = render_history(elites, recent)
        sections = PromptSections(_ROLE_TEXT, task, operating, history, output_format)
    return sections


# --- response handling -------------------------------------------------------


def extract_rules(response_text: str) -> tuple[list[RuleSource], list[str]]:
    """Pull every fenced ``rule`` block out of a response, in document order.

    Soft-fails by design: returns an empty list plus an event when nothing can
    be extracted, and ignores an unterminated final fence with an event.
    """
    sources: list[RuleSource] = []
    events: list[str] = []
    block: list[str] | None = None
    for line in response_text.splitlines():
        stripped = line.strip()
        if block is None:
            if stripped == "```rule":
                block = []
        elif stripped == "```":
            sources.append(RuleSource(text="\n".join(block), origin="llm"))
            block = None
        else:
            block.append(line)
    if block is not None:
        events.append("unterminated fenced rule block ignored")
    if not sources:
        events.append("no fenced rule blocks found in response")
    return sources, events


# --- the training loop -------------------------------------------------------


def meta_train(
    llm_client,
    training_suite: list,
    iterations: int,
    rules_per_iteration: int = 5,
    seed: int = 0,
    runs_per_problem: int = 3,
    inner_budget: int = 5000,
    pop_size: int = 50,
    elite_k: int = 3,
    archive_path: Path | str | None = None,
    transcript_dir: Path | str | None = None,
    archive: MetaArchive | None = None,
) -> MetaArchive:
    """Run the outer loop: sample a training problem, prompt, extract, score.

    Problems rotate round-robin through a seed-shuffled order of the training
    suite, so consecutive iterations exercise different problems.  With a
    scripted client the whole procedure is deterministic; an existing archive
    file is resumed rather than overwritten.
    """
    if rules_per_iteration < 1:
        raise ValueError("rules_per_iteration must be >= 1")
    if not training_suite:
        raise ValueError("training suite must be non-empty")

    if archive is None:
        if archive_path is not None and Path(archive_path).exists():
            archive = MetaArchive.load(archive_path)
            archive.elite_k = elite_k
        else:
            archive = MetaArchive(elite_k=elite_k)

    order = list(range(len(training_suite)))
    np.random.Generator(np.random.Philox(np.random.SeedSequence([_SCORING_SALT, seed]))).shuffle(order)

    first = archive.next_iteration
    for iteration in range(first, first + iterations):
        problem = training_suite[order[(iteration - 1) % len(order)]]
        summary = summarize_problem(problem, pop_size=pop_size, seed=seed + iteration)
        sections = build_prompt(archive, summary, iteration, rules_requested=rules_per_iteration)
        request = LlmRequest(
            model=getattr(llm_client, "model", "scripted"),
            system_message=sections.role,
            user_message=sections.user_message(),
            temperature=getattr(llm_client, "temperature", 0.7),
            max_tokens=getattr(llm_client, "max_tokens", 2048),
        )
        try:
            response = llm_client.complete(request)
        except Exception as exc:  # transport gave up; keep the archive intact
            archive.events.append(f"iteration {iteration}: client failure: {exc}")
            archive.next_iteration = iteration + 1
            if archive_path is not None:
                archive.save(archive_path)
            continue

        if transcript_dir is not None:
            tdir = Path(transcript_dir)
            tdir.mkdir(parents=True, exist_ok=True)
            transcript = (
                f"--- system ---\n{request.system_message}\n"
                f"--- user ---\n{request.user_message}\n"
                f"--- response ---\n{response.text}\n"
            )
            (tdir / f"{iteration}.txt").write_text(transcript, encoding="utf-8")

        sources, events = extract_rules(response.text)
        archive.events.extend(f"iteration {iteration}: {e}" for e in events)
        for idx, source in enumerate(sources[:rules_per_iteration]):
            record = score_rule(
                source,
                [problem],
                runs_per_problem=runs_per_problem,
                inner_budget=inner_budget,
                seed=int(
                    np.random.SeedSequence([_SCORING_SALT, seed, iteration, idx]).generate_state(1)[0]
                ),
                pop_size=pop_size,
                meta_iteration=iteration,
            )
            archive.add(record)
        archive.next_iteration = iteration + 1
        if archive_path is not None:
            archive.save(archive_path)
    return archive


def builtin_seed_responses() -> list[str]:
    """Fixture text bundling every builtin rule, usable to warm-start offline."""
    blocks = [f"```rule\n{text}\n```" for text in BUILTIN_RULE_TEXTS.values()]
    return ["\n\n".join(blocks)]
