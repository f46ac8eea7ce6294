"""Command-line surface: run, score, report, replay-verify, fixtures.

Exit-code policy: agent-level failure (wrong answers, exhausted budgets,
failed tool calls) is recorded data and exits 0; only harness faults
(invalid config, missing traces, replay cache misses, unreachable model
endpoints) exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .judges import build_judges
from .loop import DEFAULT_BUDGET, canonical_trace_lines, read_trace, run_task
from .models import build_model
from .retrieval import CacheMissError, LiveTransport, RetrievalError, SearchCache
from .scoring import ScoringConfig, aggregate, render_summary_table, score_task
from .tasks import Task, TaskSchemaError, load_tasks
from .workspace import ImageWorkspace


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    tasks_path: Path
    mode: str
    model: str
    model_endpoint: str
    retrieval: str
    cache_dir: Path | None
    budget: int
    concurrency: int
    output: Path
    seed: int

    def validate(self) -> None:
        if self.mode not in ("gen", "atm"):
            raise ConfigError(f"mode must be gen or atm, got {self.mode!r}")
        if self.retrieval not in ("live", "record", "replay"):
            raise ConfigError(f"retrieval must be live, record or replay, got {self.retrieval!r}")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.retrieval == "replay":
            if self.cache_dir is None or not self.cache_dir.is_dir():
                raise ConfigError(f"replay requires an existing cache directory (got {self.cache_dir})")


def _resolve_cache_dir(args: argparse.Namespace, output: Path) -> Path | None:
    if args.cache_dir:
        return Path(args.cache_dir)
    if args.retrieval == "replay":
        tasks = Path(args.tasks)
        base = tasks if tasks.is_dir() else tasks.parent
        candidate = base / "search_cache"
        return candidate
    if args.retrieval == "record":
        return output / "search_cache"
    return None


def cmd_run(args: argparse.Namespace) -> int:
    output = Path(args.output)
    config = RunConfig(
        tasks_path=Path(args.tasks),
        mode=args.mode,
        model=args.model,
        model_endpoint=args.model_endpoint or "",
        retrieval=args.retrieval,
        cache_dir=_resolve_cache_dir(args, output),
        budget=args.budget,
        concurrency=args.concurrency,
        output=output,
        seed=args.seed,
    )
    config.validate()
    tasks = load_tasks(config.tasks_path)
    if not tasks:
        raise ConfigError(f"no tasks found under {config.tasks_path}")

    output.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tasks": str(config.tasks_path),
        "mode": config.mode,
        "model": config.model,
        "model_endpoint": config.model_endpoint,
        "retrieval": config.retrieval,
        "cache_dir": str(config.cache_dir) if config.cache_dir else None,
        "budget": config.budget,
        "concurrency": config.concurrency,
        "seed": config.seed,
        "task_ids": [t.task_id for t in tasks],
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(output / "run_manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)

    transport = None
    if config.retrieval in ("live", "record"):
        transport = LiveTransport()

    def one(task: Task) -> tuple[str, str]:
        model = build_model(config.model, task, endpoint=config.model_endpoint)
        trace = run_task(
            task,
            mode=config.mode,
            model=model,
            run_dir=output,
            retrieval_mode=config.retrieval,
            cache_dir=config.cache_dir,
            transport=transport,
            budget=config.budget,
        )
        return task.task_id, trace.termination

    results: list[tuple[str, str]] = []
    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    for task_id, termination in results:
        print(f"{task_id}: {termination}")
    print(f"run complete: {len(results)} traces under {output}")
    return 0


def _load_run(run_dir: Path) -> tuple[dict, list[Task]]:
    manifest_path = run_dir / "run_manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"not a run directory (missing run_manifest.json): {run_dir}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    tasks = load_tasks(manifest["tasks"])
    return manifest, tasks


def cmd_score(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    manifest, tasks = _load_run(run_dir)
    if args.tasks:
        tasks = load_tasks(args.tasks)
    text_judge, visual_judge = build_judges(args.judge, endpoint=args.judge_endpoint or "")
    cfg = ScoringConfig(ordered_checkpoints=not args.unordered_checkpoints)

    cache_dir = manifest.get("cache_dir")
    scores_dir = run_dir / "scores"
    scores_dir.mkdir(exist_ok=True)

    reports = []
    for task in tasks:
        trace_path = run_dir / "traces" / f"{task.task_id}.jsonl"
        if not trace_path.is_file():
            raise ConfigError(f"missing trace for task {task.task_id}: {trace_path}")
        trace = read_trace(run_dir, task.task_id)
        ws = ImageWorkspace.load(run_dir / task.task_id)
        artifacts = [(e.index, str(ws.path_of(e.index))) for e in ws.produced_entries()]
        with ws.open(0) as img0:
            dims = (img0.width, img0.height)
        cache = SearchCache(cache_dir, task.task_id) if cache_dir else None
        report = score_task(
            task,
            trace,
            artifacts,
            text_judge,
            visual_judge,
            cache=cache,
            cfg=cfg,
            image_dims=dims,
        )
        reports.append(report)
        with open(scores_dir / f"{task.task_id}.json", "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=1, sort_keys=True)

    summary = aggregate(reports, tasks)
    with open(run_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=1, sort_keys=True)
    table = render_summary_table(summary)
    (run_dir / "summary.md").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    summary_path = run_dir / "summary.json"
    if not summary_path.is_file():
        raise ConfigError(f"no summary.json under {run_dir}; run `score` first")
    with open(summary_path, encoding="utf-8") as f:
        summary = json.load(f)
    print(render_summary_table(summary))
    return 0


def cmd_replay_verify(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    manifest, tasks = _load_run(run_dir)
    if args.tasks:
        tasks = load_tasks(args.tasks)

    cache_dir = manifest.get("cache_dir")
    if cache_dir is None:
        raise ConfigError("replay-verify needs a run with a recorded or replayed cache")

    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        for task in tasks:
            model = build_model(manifest["model"], task, endpoint=manifest.get("model_endpoint", ""))
            trace = run_task(
                task,
                mode=manifest["mode"],
                model=model,
                run_dir=tmp,
                retrieval_mode="replay",
                cache_dir=cache_dir,
                budget=manifest.get("budget", DEFAULT_BUDGET),
            )
            original = read_trace(run_dir, task.task_id)
            if canonical_trace_lines(trace) != canonical_trace_lines(original):
                mismatches.append(task.task_id)

    if mismatches:
        print(f"replay mismatch for: {', '.join(mismatches)}")
        return 1
    print(f"replay verified: {len(tasks)} traces identical modulo timestamps")
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    from .fixtures_gen import generate_fixtures

    out = generate_fixtures(args.output, seed=args.seed)
    print(f"fixtures generated under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="procbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run agents over a task set")
    run.add_argument("--tasks", required=True, help="task file or benchmark split directory")
    run.add_argument("--mode", default="atm", choices=["gen", "atm"])
    run.add_argument("--model", required=True, help="mock:oracle | mock:script=<file> | mock:answer=<text> | model id")
    run.add_argument("--model-endpoint", default="", help="chat-completions endpoint for live models")
    run.add_argument("--retrieval", default="replay", choices=["live", "record", "replay"])
    run.add_argument("--cache-dir", default=None, help="search cache directory (default: <tasks>/search_cache)")
    run.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="interaction budget (model turns)")
    run.add_argument("--concurrency", type=int, default=1)
    run.add_argument("--output", required=True, help="run directory")
    run.add_argument("--seed", type=int, default=0)
    run.set_defaults(func=cmd_run)

    score = sub.add_parser("score", help="score a completed run")
    score.add_argument("--run-dir", required=True)
    score.add_argument("--tasks", default=None, help="override the task set recorded in the run manifest")
    score.add_argument("--judge", default="mock", help="mock | mock:answers=<file> | judge model id")
    score.add_argument("--judge-endpoint", default="")
    score.add_argument("--unordered-checkpoints", action="store_true")
    score.set_defaults(func=cmd_score)

    report = sub.add_parser("report", help="re-render the summary table of a scored run")
    report.add_argument("--run-dir", required=True)
    report.set_defaults(func=cmd_report)

    verify = sub.add_parser("replay-verify", help="re-run from cache and diff traces modulo timestamps")
    verify.add_argument("--run-dir", required=True)
    verify.add_argument("--tasks", default=None)
    verify.set_defaults(func=cmd_replay_verify)

    fixtures = sub.add_parser("fixtures", help="fixture management")
    fx_sub = fixtures.add_subparsers(dest="fixtures_command", required=True)
    gen = fx_sub.add_parser("generate", help="regenerate the synthetic fixture set")
    gen.add_argument("--output", required=True)
    gen.add_argument("--seed", type=int, default=7)
    gen.set_defaults(func=cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TaskSchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CacheMissError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RetrievalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
