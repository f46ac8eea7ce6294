"""Checkpoint matching and metric computation.

Per task: final-answer accuracy via normalized exact match, S and V-axis
pass fractions (exact rationals), the split of V into tool-intent (V_tool)
and artifact-faithfulness (V_true, any-pass over all produced artifacts),
their per-checkpoint conjunction V, and the overthink penalty
max(0, C_agent - C_human) / (C_human + 1).

Checkpoint matching is ordered-greedy by default: each V checkpoint must be
satisfied by an event after the previous V checkpoint's match (a config
switch makes it unordered). Scores are a pure function of (task, trace,
judge verdicts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any

from .answers import normalize_answer
from .judges import JudgeVerdict, TextJudge, VisualJudge, parse_verdict
from .loop import Trace, TraceEvent
from .ops import OP_NAMES, bbox_iou
from .retrieval import SearchCache
from .tasks import Checkpoint, Task, answer_matches
from .tracer import IdiomTable, extract_ops, normalize_extracted

DEFAULT_CROP_IOU = 0.3
DEFAULT_JUDGE_ARTIFACT_CAP = 16


@dataclass
class ScoringConfig:
    ordered_checkpoints: bool = True
    crop_iou_threshold: float = DEFAULT_CROP_IOU
    judge_artifact_cap: int = DEFAULT_JUDGE_ARTIFACT_CAP


@dataclass
class CheckpointVerdict:
    order: int
    axis: str
    passed: bool
    v_tool: bool | None = None
    v_true: bool | None = None
    matched_event: str | None = None
    matched_artifact: str | None = None
    judged_artifacts: list[str] = field(default_factory=list)
    reasoning: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "axis": self.axis,
            "passed": self.passed,
            "v_tool": self.v_tool,
            "v_true": self.v_true,
            "matched_event": self.matched_event,
            "matched_artifact": self.matched_artifact,
            "judged_artifacts": self.judged_artifacts,
            "reasoning": self.reasoning,
        }


@dataclass
class ScoreReport:
    task_id: str
    acc: int
    s: Fraction | None
    v_tool: Fraction | None
    v_true: Fraction | None
    v: Fraction | None
    overthink: Fraction
    c_agent: int
    c_human: int
    checkpoints: list[CheckpointVerdict] = field(default_factory=list)
    final_answer: str | None = None

    def to_dict(self) -> dict[str, Any]:
        def frac(x: Fraction | None) -> dict[str, Any] | None:
            if x is None:
                return None
            return {"value": float(x), "rational": f"{x.numerator}/{x.denominator}"}

        return {
            "task_id": self.task_id,
            "acc": self.acc,
            "s": frac(self.s),
            "v_tool": frac(self.v_tool),
            "v_true": frac(self.v_true),
            "v": frac(self.v),
            "overthink": frac(self.overthink),
            "c_agent": self.c_agent,
            "c_human": self.c_human,
            "final_answer": self.final_answer,
            "checkpoints": [c.to_dict() for c in self.checkpoints],
        }


def compute_overthink(c_agent: int, c_human: int) -> Fraction:
    """Efficiency penalty relative to the human minimal trajectory."""
    return Fraction(max(0, c_agent - c_human), c_human + 1)


def pass_fraction(passed: int, total: int) -> Fraction | None:
    """Fraction of passed checkpoints; None for an absent axis."""
    if total == 0:
        return None
    return Fraction(passed, total)


# -- V_tool -------------------------------------------------------------------


def _event_matches_op(
    event: TraceEvent,
    ckpt: Checkpoint,
    table: IdiomTable,
    image_dims: tuple[int, int] | None,
    cfg: ScoringConfig,
) -> bool:
    required = ckpt.required_op or {}
    name = required.get("name")
    constraints = required.get("args") or {}
    want_bbox = constraints.get("bbox_2d")

    if event.kind == "tool_call":
        if event.error or event.payload.get("name") != name:
            return False
        if want_bbox and name == "crop":
            got = event.payload.get("arguments", {}).get("bbox_2d")
            if got is not None and bbox_iou(list(map(float, got)), list(map(float, want_bbox))) < cfg.crop_iou_threshold:
                return False
        return True

    if event.kind == "code_block":
        source = event.payload.get("source", "")
        extraction = extract_ops(source, table)
        if extraction.parse_error:
            return False
        for ex in extraction.ops:
            op = normalize_extracted(ex, image_dims)
            if op.name != name:
                continue
            if want_bbox and name == "crop" and ex.confidence == "static":
                got = op.args.get("bbox_2d")
                if got is not None and bbox_iou(list(map(float, got)), list(map(float, want_bbox))) < cfg.crop_iou_threshold:
                    continue
            return True
        return False

    return False


def match_v_tool(
    ckpt: Checkpoint,
    trace: Trace,
    start_index: int,
    table: IdiomTable,
    image_dims: tuple[int, int] | None,
    cfg: ScoringConfig,
) -> tuple[bool, str | None, int]:
    """Ordered-greedy scan for the required visual tool intent.

    Returns (passed, matched event id, index after the match). The scan
    starts after the previous checkpoint's matched event unless unordered
    matching is configured.
    """
    begin = start_index if cfg.ordered_checkpoints else 0
    for idx in range(begin, len(trace.events)):
        event = trace.events[idx]
        if _event_matches_op(event, ckpt, table, image_dims, cfg):
            return True, event.event_id, idx + 1
    return False, None, start_index


# -- V_true -------------------------------------------------------------------


def match_v_true(
    ckpt: Checkpoint,
    artifacts: list[tuple[int, str]],
    judge: VisualJudge,
    cfg: ScoringConfig,
) -> tuple[bool, str | None, list[str], str]:
    """Any-pass: judge every produced artifact against the visual question.

    Judged most recent first, capped at cfg.judge_artifact_cap. Judge
    failures mark the artifact unanswered, never crash scoring.
    """
    expected = normalize_answer(ckpt.expected_visual_answer)
    judged: list[str] = []
    note = ""
    ordered = sorted(artifacts, key=lambda t: -t[0])[: cfg.judge_artifact_cap]
    for _index, path in ordered:
        name = path.rsplit("/", 1)[-1]
        judged.append(name)
        try:
            answer = judge.answer(path, ckpt.visual_question)
        except Exception as exc:  # noqa: BLE001 - judge transport failures are FAILs
            note = f"judge error on {name}: {exc}"
            continue
        if normalize_answer(answer) == expected:
            return True, name, judged, note
    return False, None, judged, note or "no artifact contained the expected evidence"


# -- S-axis --------------------------------------------------------------------

_SEARCH_TOOL_KINDS = ("google_search", "google_lens_search", "fetch_webpage", "download_image")


def _search_events(trace: Trace) -> list[TraceEvent]:
    return [
        e
        for e in trace.events
        if e.kind == "tool_call" and e.payload.get("name") in _SEARCH_TOOL_KINDS and not e.error
    ]


def _queries_text(events: list[TraceEvent]) -> str:
    lines = []
    for e in events:
        name = e.payload.get("name")
        args = e.payload.get("arguments", {})
        if name == "google_search":
            lines.append(f"- {args.get('query', '')}")
        elif name == "google_lens_search":
            ref = args.get("image_path") or args.get("image_ref") or args.get("image_index", 0)
            lines.append(f"- (reverse image search on {ref})")
        elif name == "fetch_webpage":
            lines.append(f"- (fetched {args.get('url', '')})")
        else:
            lines.append(f"- (downloaded {args.get('url', '')})")
    return "\n".join(lines) if lines else "(none)"


def _results_text(events: list[TraceEvent], cache: SearchCache | None, limit: int = 6000) -> str:
    if cache is None:
        return "(none)"
    chunks: list[str] = []
    for e in events:
        for key in e.payload_keys:
            payload = cache.get(key)
            if payload is None:
                continue
            body = payload.body or {}
            for r in body.get("results", []) or body.get("matches", []):
                chunks.append(f"{r.get('title', '')} | {r.get('link', '')} | {r.get('snippet', '')}")
            if "text" in body:
                chunks.append(str(body.get("text", ""))[:2000])
    text = "\n".join(chunks)
    return text[:limit] if text else "(none)"


def render_search_judge_prompt(ckpt: Checkpoint, queries_text: str, results_text: str) -> str:
    template = resources.files("procbench.data.prompts").joinpath("search_judge.txt").read_text("utf-8")
    expected_block = ""
    if ckpt.expected_answer:
        expected_block = f"\n**CRITICAL: Expected Answer to Find:**\n{ckpt.expected_answer}\n"
    return template.format(
        checkpoint_desc=ckpt.description,
        expected_answer_block=expected_block,
        queries_text=queries_text,
        results_text=results_text,
    )


def match_s_checkpoint(
    ckpt: Checkpoint,
    trace: Trace,
    judge: TextJudge,
    cache: SearchCache | None,
) -> JudgeVerdict:
    """Judge one search checkpoint from the trace's queries and payloads."""
    events = _search_events(trace)
    if not events:
        return JudgeVerdict("FAIL", "no retrieval performed", raw="")
    prompt = render_search_judge_prompt(ckpt, _queries_text(events), _results_text(events, cache))
    try:
        response = judge.complete(prompt)
    except Exception as exc:  # noqa: BLE001 - judge transport failures are FAILs
        return JudgeVerdict("FAIL", f"judge error: {exc}", raw="")
    return parse_verdict(response)


# -- task + aggregate -----------------------------------------------------------


def score_task(
    task: Task,
    trace: Trace,
    artifacts: list[tuple[int, str]],
    text_judge: TextJudge,
    visual_judge: VisualJudge,
    cache: SearchCache | None = None,
    cfg: ScoringConfig | None = None,
    table: IdiomTable | None = None,
    image_dims: tuple[int, int] | None = None,
) -> ScoreReport:
    """Score one complete trace. Missing final answer scores acc = 0."""
    cfg = cfg or ScoringConfig()
    table = table or IdiomTable.default()

    acc = 1 if (trace.final_answer is not None and answer_matches(trace.final_answer, task)) else 0

    verdicts: list[CheckpointVerdict] = []
    s_passed = s_total = 0
    vt_passed = vt_total = 0
    vr_passed = vr_total = 0
    v_passed = v_total = 0
    cursor = 0
    for ckpt in task.checkpoints:
        if ckpt.axis == "S":
            s_total += 1
            verdict = match_s_checkpoint(ckpt, trace, text_judge, cache)
            s_passed += 1 if verdict.passed else 0
            verdicts.append(
                CheckpointVerdict(
                    order=ckpt.order,
                    axis="S",
                    passed=verdict.passed,
                    reasoning=verdict.reasoning,
                )
            )
        else:
            vt_total += 1
            vr_total += 1
            v_total += 1
            tool_ok, event_id, cursor = match_v_tool(ckpt, trace, cursor, table, image_dims, cfg)
            true_ok, artifact, judged, note = match_v_true(ckpt, artifacts, visual_judge, cfg)
            vt_passed += 1 if tool_ok else 0
            vr_passed += 1 if true_ok else 0
            both = tool_ok and true_ok
            v_passed += 1 if both else 0
            verdicts.append(
                CheckpointVerdict(
                    order=ckpt.order,
                    axis="V",
                    passed=both,
                    v_tool=tool_ok,
                    v_true=true_ok,
                    matched_event=event_id,
                    matched_artifact=artifact,
                    judged_artifacts=judged,
                    reasoning=note if not true_ok else "",
                )
            )

    return ScoreReport(
        task_id=task.task_id,
        acc=acc,
        s=pass_fraction(s_passed, s_total),
        v_tool=pass_fraction(vt_passed, vt_total),
        v_true=pass_fraction(vr_passed, vr_total),
        v=pass_fraction(v_passed, v_total),
        overthink=compute_overthink(trace.c_agent, task.human_calls),
        c_agent=trace.c_agent,
        c_human=task.human_calls,
        checkpoints=verdicts,
        final_answer=trace.final_answer,
    )


def _mean(values: list[Fraction | int | float]) -> float | None:
    if not values:
        return None
    return float(sum(Fraction(v) for v in values) / len(values))


def _stratum(reports: list[ScoreReport]) -> dict[str, Any]:
    return {
        "n_tasks": len(reports),
        "acc": _mean([r.acc for r in reports]),
        "s": _mean([r.s for r in reports if r.s is not None]),
        "v_tool": _mean([r.v_tool for r in reports if r.v_tool is not None]),
        "v_true": _mean([r.v_true for r in reports if r.v_true is not None]),
        "v": _mean([r.v for r in reports if r.v is not None]),
        "overthink": _mean([r.overthink for r in reports]),
        "avg_calls": _mean([r.c_agent for r in reports]),
    }


def aggregate(reports: list[ScoreReport], tasks: list[Task]) -> dict[str, Any]:
    """Mean metrics overall, per level and per domain.

    Tasks lacking an axis are excluded from that axis's mean, not zeroed.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    by_id = {t.task_id: t for t in tasks}
    summary: dict[str, Any] = {"overall": _stratum(reports), "by_level": {}, "by_domain": {}}
    levels = sorted({by_id[r.task_id].level for r in reports if r.task_id in by_id})
    for level in levels:
        summary["by_level"][str(level)] = _stratum(
            [r for r in reports if by_id.get(r.task_id) and by_id[r.task_id].level == level]
        )
    domains = sorted({by_id[r.task_id].domain for r in reports if r.task_id in by_id})
    for domain in domains:
        summary["by_domain"][domain] = _stratum(
            [r for r in reports if by_id.get(r.task_id) and by_id[r.task_id].domain == domain]
        )
    return summary


def render_summary_table(summary: dict[str, Any]) -> str:
    """Markdown table: overall plus one row per level."""

    def fmt(x: float | None) -> str:
        return "--" if x is None else f"{100.0 * x:.1f}"

    def fmt_raw(x: float | None) -> str:
        return "--" if x is None else f"{x:.2f}"

    rows = [("Overall", summary["overall"])] + [
        (f"Level {lvl}", stratum) for lvl, stratum in sorted(summary["by_level"].items())
    ]
    lines = [
        "| Split | N | Acc | S | V_tool | V_true | V | Avg. calls | Overthink |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for name, s in rows:
        lines.append(
            f"| {name} | {s['n_tasks']} | {fmt(s['acc'])} | {fmt(s['s'])} | {fmt(s['v_tool'])} "
            f"| {fmt(s['v_true'])} | {fmt(s['v'])} | {fmt_raw(s['avg_calls'])} | {fmt_raw(s['overthink'])} |"
        )
    return "\n".join(lines)
