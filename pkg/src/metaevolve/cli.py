"""Command-line surface.

Subcommands::

    metaevolve bench run      execute a multi-run campaign (resumable)
    metaevolve bench report   render tables/timing from completed runs
    metaevolve meta train     run the outer rule-design loop
    metaevolve solve          one run of one algorithm on one problem
    metaevolve oracle-check   cross-check the benchmark suite against the
                              independent reference evaluator

Configuration comes from a TOML file (``--config``); individual flags
override it.  Exit codes: 0 success, 1 configuration error, 2 partial
campaign failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .bench import (
    CampaignConfig,
    compute_marks,
    emit_reports,
    load_cell_logs,
    run_campaign,
    summarize,
    timing_report,
)
from .engine import RunConfig, run
from .llm import HttpLlmClient, ScriptedLlmClient
from .meta import MetaArchive, meta_train, select_deployment_rule
from .problems import CEC2010_IDS, ConfigurationError, get_problem, make_cec2010_problem
from .problems.reference import reference_evaluate
from .ruledsl import print_rule
from .bench.campaign import resolve_rule_spec

EXIT_CONFIG_ERROR = 1
EXIT_PARTIAL_FAILURE = 2


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        return tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{p}: invalid TOML: {exc}") from None


def _bench_config(doc: dict, **overrides) -> CampaignConfig:
    section = doc.get("bench", {})
    merged = {**section, **{k: v for k, v in overrides.items() if v is not None}}
    if "out" in merged:
        merged["out_dir"] = merged.pop("out")
    allowed = {
        "algorithms", "problems", "dim", "runs", "max_fe", "base_seed",
        "out_dir", "jobs", "reference", "data_dir", "log_every", "pop_size",
    }
    unknown = set(merged) - allowed
    if unknown:
        raise ConfigurationError(f"unknown bench config keys: {sorted(unknown)}")
    if "algorithms" not in merged or "problems" not in merged:
        raise ConfigurationError("bench config needs 'algorithms' and 'problems'")
    try:
        return CampaignConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None


@click.group()
@click.version_option(version=__version__, prog_name="metaevolve")
def main() -> None:
    """Constrained evolutionary optimization with generated update rules."""


@main.group()
def bench() -> None:
    """Benchmark campaigns and reports."""


_shared_bench_options = [
    click.option("--config", "config_path", type=str, default=None, help="TOML config file."),
    click.option("--seed", "base_seed", type=int, default=None, help="Base seed (run i uses seed base+i)."),
    click.option("--runs", type=int, default=None),
    click.option("--dim", type=int, default=None),
    click.option("--max-fe", "max_fe", type=int, default=None),
    click.option("--out", "out_dir", type=str, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--algorithms", type=str, default=None, help="Comma-separated algorithm tags."),
    click.option("--problems", type=str, default=None, help="Comma-separated problem ids."),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


def _split(csv_text: str | None) -> list[str] | None:
    if csv_text is None:
        return None
    return [part.strip() for part in csv_text.split(",") if part.strip()]


@bench.command("run")
@_with_options(_shared_bench_options)
def bench_run(config_path, base_seed, runs, dim, max_fe, out_dir, jobs, algorithms, problems):
    """Execute every missing (algorithm, problem, seed) run."""
    try:
        cfg = _bench_config(
            _load_config(config_path),
            base_seed=base_seed, runs=runs, dim=dim, max_fe=max_fe,
            out_dir=out_dir, jobs=jobs,
            algorithms=_split(algorithms), problems=_split(problems),
        )
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    result = run_campaign(cfg)
    click.echo(f"executed {result.executed} run(s), skipped {result.skipped} existing")
    if result.failures:
        for key, err in result.failures:
            click.echo(f"FAILED {key}: {err}", err=True)
        sys.exit(EXIT_PARTIAL_FAILURE)


@bench.command("report")
@_with_options(_shared_bench_options)
@click.option("--skip-timing", is_flag=True, default=False, help="Skip the timing measurement pass.")
def bench_report(config_path, base_seed, runs, dim, max_fe, out_dir, jobs, algorithms, problems, skip_timing):
    """Summarize completed runs into tables, marks and timing files."""
    try:
        cfg = _bench_config(
            _load_config(config_path),
            base_seed=base_seed, runs=runs, dim=dim, max_fe=max_fe,
            out_dir=out_dir, jobs=jobs,
            algorithms=_split(algorithms), problems=_split(problems),
        )
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    summaries = {}
    for algo in cfg.algorithms:
        for problem in cfg.problems:
            logs = load_cell_logs(cfg.out_dir, algo, problem)
            if logs:
                summaries[(algo, problem)] = summarize(logs, algo, problem)
    if not summaries:
        click.echo("no completed runs found; run `bench run` first", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    marks = compute_marks(summaries, cfg.algorithms, cfg.problems, cfg.reference)
    timing = None if skip_timing else timing_report(cfg)
    written = emit_reports(
        summaries, marks, timing, cfg.out_dir / "reports",
        cfg.algorithms, cfg.problems, cfg.reference,
    )
    for path in written:
        click.echo(f"wrote {path}")


@main.group("meta")
def meta_group() -> None:
    """Outer-loop training of update rules."""


@meta_group.command("train")
@click.option("--config", "config_path", type=str, default=None, help="TOML config file.")
@click.option("--iterations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=str, default=None, help="Directory for archive + transcripts.")
@click.option("--scripted", "scripted_path", type=str, default=None,
              help="File with scripted responses separated by lines of '==='; runs offline.")
def meta_train_cmd(config_path, iterations, seed, out_dir, scripted_path):
    """Train the rule generator against synthetic COPs."""
    try:
        doc = _load_config(config_path)
        section = doc.get("meta", {})
        llm_section = doc.get("llm", {})
        iterations = iterations if iterations is not None else int(section.get("iterations", 5))
        seed = seed if seed is not None else int(section.get("seed", 0))
        out = Path(out_dir or section.get("out", "meta-out"))

        from .problems import synthesize_training_cop

        training_cfg = section.get(
            "training",
            [{"seed": s, "dim": 8, "n_ineq": 2, "n_eq": 0, "target_feasibility": 0.4}
             for s in (1, 2, 3)],
        )
        suite = [
            synthesize_training_cop(
                seed=int(t["seed"]), dim=int(t["dim"]), n_ineq=int(t["n_ineq"]),
                n_eq=int(t["n_eq"]),
                target_feasibility=float(t.get("target_feasibility", 0.5)),
            )
            for t in training_cfg
        ]

        if scripted_path is not None:
            fixtures = Path(scripted_path).read_text(encoding="utf-8").split("\n===\n")
            client = ScriptedLlmClient(fixtures=[f for f in fixtures if f.strip()])
        elif "endpoint" in llm_section:
            client = HttpLlmClient(
                endpoint=llm_section["endpoint"],
                model=llm_section.get("model", ""),
                temperature=float(llm_section.get("temperature", 0.7)),
                max_tokens=int(llm_section.get("max_tokens", 2048)),
            )
        else:
            raise ConfigurationError(
                "no LLM configured: set [llm].endpoint in the config or pass --scripted"
            )
    except (ConfigurationError, KeyError, ValueError, OSError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    archive = meta_train(
        client,
        suite,
        iterations=iterations,
        rules_per_iteration=int(section.get("rules_per_iteration", 5)),
        seed=seed,
        runs_per_problem=int(section.get("replicates", 3)),
        inner_budget=int(section.get("inner_budget", 5000)),
        pop_size=int(section.get("pop_size", 50)),
        elite_k=int(section.get("elite_k", 3)),
        archive_path=out / "archive.json",
        transcript_dir=out / "transcripts",
    )
    click.echo(f"archive: {len(archive.history)} records, {len(archive.elites)} elite(s)")
    try:
        best = select_deployment_rule(archive)
        rule_path = out / "deployed_rule.txt"
        rule_path.write_text(print_rule(best) + "\n", encoding="utf-8")
        click.echo(f"deployment rule written to {rule_path}")
    except Exception as exc:
        click.echo(f"no deployable rule: {exc}", err=True)


@main.command("solve")
@click.option("--problem", "problem_id", required=True)
@click.option("--algo", default="de", help="de | lshade | ga | rule:<name-or-file>")
@click.option("--dim", type=int, default=10)
@click.option("--max-fe", type=int, default=20000)
@click.option("--seed", type=int, default=1)
@click.option("--pop", "pop_size", type=int, default=None)
@click.option("--data-dir", type=str, default=None)
@click.option("--out", "out_path", type=str, default=None, help="Optional JSONL log path.")
def solve(problem_id, algo, dim, max_fe, seed, pop_size, data_dir, out_path):
    """Run one seeded optimization and print the outcome."""
    from .bench.campaign import default_pop_size

    try:
        problem = get_problem(problem_id, dim, data_dir=data_dir)
        rule = resolve_rule_spec(algo)
    except (ConfigurationError, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    config = RunConfig(
        pop_size=pop_size or default_pop_size(algo, dim),
        max_fe=max_fe,
        seed=seed,
        rule=rule,
    )
    log = run(problem, config)
    click.echo(
        f"{problem_id} [{log.data_source}] {algo}: "
        f"best_f={log.best_f:.6g} best_cv={log.best_cv:.6g} "
        f"feasible={log.best_feasible} fe={log.fe_used} wall={log.wall_seconds:.2f}s"
    )
    if out_path:
        log.save(out_path)
        click.echo(f"log written to {out_path}")


@main.command("oracle-check")
@click.option("--dim", type=int, default=10)
@click.option("--points", type=int, default=100)
@click.option("--seed", type=int, default=42)
@click.option("--data-dir", type=str, default=None)
@click.option("--tolerance", type=float, default=1e-8)
def oracle_check(dim, points, seed, data_dir, tolerance):
    """Compare every benchmark instance against the reference evaluator."""
    rng = np.random.Generator(np.random.Philox(seed))
    worst = 0.0
    failed = False
    for pid in CEC2010_IDS:
        problem = make_cec2010_problem(pid, dim, data_dir=data_dir)
        spec = problem.spec
        xs = spec.lower + rng.random((points, dim)) * (spec.upper - spec.lower)
        mats = [m.tolist() for m in problem.data.rotations]
        max_err = 0.0
        for x in xs:
            ev = problem.evaluate(x)
            rf, rg, rh = reference_evaluate(pid, x, problem.data.shift, mats)
            vals = [(ev.f, rf)] + list(zip(ev.g, rg)) + list(zip(ev.h, rh))
            for a, b in vals:
                err = abs(a - b) / max(1.0, abs(a), abs(b))
                max_err = max(max_err, err)
        status = "ok" if max_err <= tolerance else "MISMATCH"
        failed = failed or max_err > tolerance
        worst = max(worst, max_err)
        click.echo(f"{pid} D={dim} [{problem.data.source}] max rel err {max_err:.2e} {status}")
    click.echo(f"worst relative error: {worst:.2e}")
    if failed:
        sys.exit(EXIT_PARTIAL_FAILURE)


if __name__ == "__main__":
    main()
