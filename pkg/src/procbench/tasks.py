"""Task, checkpoint and reference-trajectory schema plus the JSON loader.

A benchmark split is a directory of one-JSON-per-task files listed by an
``index.json``; image paths inside a task file are relative to the task
file's directory. Tasks are immutable after load and safe to share across
concurrent sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .answers import answer_matches as _answer_matches
from .answers import normalize_answer
from .ops import OP_NAMES

__all__ = [
    "Checkpoint",
    "Task",
    "TaskSchemaError",
    "TrajectoryStep",
    "answer_matches",
    "load_task_file",
    "load_tasks",
    "normalize_answer",
    "serialize_task",
]

LEVELS = (1, 2, 3)

# Manual annotation slot carried on traces; classification is out of scope.
FAILURE_MODES = (
    "missing_search_tools",
    "bad_search_query",
    "unfaithful_visual_tool_use",
    "missing_visual_tool_use",
    "overthinking_collapse",
    "tool_misexecution",
    "postvisual_perception_deficit",
)


class TaskSchemaError(ValueError):
    """A task file violates the documented schema. Message names the task and field."""


@dataclass(frozen=True)
class Checkpoint:
    """One stepwise verification unit on the reference trajectory.

    S-axis checkpoints audit search strategy (keywords, reference URLs and
    the expected intermediate answer); V-axis checkpoints audit visual tool
    intent (required_op) and artifact content (visual_question with its
    expected short answer).
    """

    order: int
    axis: str  # "S" | "V"
    description: str
    # S-axis
    keywords: tuple[str, ...] = ()
    reference_urls: tuple[str, ...] = ()
    expected_answer: str = ""
    # V-axis
    required_op: dict[str, Any] | None = None  # {"name": ..., "args": {constraints}}
    visual_question: str = ""
    expected_visual_answer: str = ""
    gt_artifact: str | None = None


@dataclass(frozen=True)
class TrajectoryStep:
    """One action of the human reference trajectory, replayable by the oracle model."""

    order: int
    action: dict[str, Any]  # {"kind": "tool_call", "name", "arguments"} or {"kind": "code_block", "source"}
    expected_observation_digest: str = ""


@dataclass(frozen=True)
class Task:
    """One benchmark instance."""

    task_id: str
    images: tuple[str, ...]  # resolved absolute paths; index 0 = original input
    question: str
    format_instruction: str
    level: int
    domain: str
    subdomain: str
    gold_answer: str
    accepted_variants: tuple[str, ...]
    checkpoints: tuple[Checkpoint, ...]
    human_calls: int
    human_trajectory: tuple[TrajectoryStep, ...] = ()

    @property
    def s_checkpoints(self) -> tuple[Checkpoint, ...]:
        return tuple(c for c in self.checkpoints if c.axis == "S")

    @property
    def v_checkpoints(self) -> tuple[Checkpoint, ...]:
        return tuple(c for c in self.checkpoints if c.axis == "V")


def answer_matches(candidate: str, task: Task) -> bool:
    """True iff candidate equals the gold answer or a variant after normalization."""
    return _answer_matches(candidate, task.gold_answer, list(task.accepted_variants))


def _require(cond: bool, task_id: str, message: str) -> None:
    if not cond:
        raise TaskSchemaError(f"task {task_id!r}: {message}")


def _parse_checkpoint(task_id: str, raw: dict[str, Any]) -> Checkpoint:
    axis = raw.get("axis")
    _require(axis in ("S", "V"), task_id, f"checkpoint axis must be S or V, got {axis!r}")
    order = raw.get("order")
    _require(isinstance(order, int), task_id, "checkpoint order must be an integer")
    ckpt = Checkpoint(
        order=order,
        axis=axis,
        description=str(raw.get("description", "")),
        keywords=tuple(raw.get("keywords", []) or []),
        reference_urls=tuple(raw.get("reference_urls", []) or []),
        expected_answer=str(raw.get("expected_answer", "") or ""),
        required_op=raw.get("required_op"),
        visual_question=str(raw.get("visual_question", "") or ""),
        expected_visual_answer=str(raw.get("expected_visual_answer", "") or ""),
        gt_artifact=raw.get("gt_artifact"),
    )
    if axis == "S":
        _require(
            bool(ckpt.expected_answer or ckpt.keywords),
            task_id,
            f"S-checkpoint {order} needs expected_answer or keywords",
        )
    else:
        _require(
            isinstance(ckpt.required_op, dict) and ckpt.required_op.get("name") in OP_NAMES,
            task_id,
            f"V-checkpoint {order} needs required_op with a known op name",
        )
        _require(bool(ckpt.visual_question), task_id, f"V-checkpoint {order} needs visual_question")
    return ckpt


def _parse_task(raw: dict[str, Any], base_dir: Path) -> Task:
    task_id = raw.get("task_id")
    if not task_id or not isinstance(task_id, str):
        raise TaskSchemaError(f"task file missing task_id (got {task_id!r})")

    level = raw.get("level")
    _require(level in LEVELS, task_id, f"level must be one of {list(LEVELS)}, got {level!r}")

    images_raw = raw.get("images") or []
    _require(len(images_raw) >= 1, task_id, "at least one image is required")
    images = []
    for rel in images_raw:
        path = (base_dir / rel).resolve()
        _require(path.is_file(), task_id, f"image file not found: {rel}")
        images.append(str(path))

    gold = raw.get("gold_answer")
    _require(isinstance(gold, str) and gold.strip() != "", task_id, "gold_answer must be non-empty")

    checkpoints = [_parse_checkpoint(task_id, c) for c in raw.get("checkpoints", [])]
    orders = [c.order for c in checkpoints]
    _require(
        all(b > a for a, b in zip(orders, orders[1:])),
        task_id,
        f"checkpoint order must be strictly increasing, got {orders}",
    )

    human_calls = raw.get("human_calls")
    _require(isinstance(human_calls, int) and human_calls >= 0, task_id, "human_calls must be a non-negative integer")
    n_v = sum(1 for c in checkpoints if c.axis == "V")
    _require(human_calls >= n_v, task_id, f"human_calls={human_calls} below the {n_v} V-checkpoints requiring artifacts")

    trajectory = []
    for step in raw.get("human_trajectory", []) or []:
        _require(isinstance(step.get("order"), int), task_id, "trajectory step order must be an integer")
        action = step.get("action")
        _require(
            isinstance(action, dict) and action.get("kind") in ("tool_call", "code_block"),
            task_id,
            "trajectory action kind must be tool_call or code_block",
        )
        trajectory.append(
            TrajectoryStep(
                order=step["order"],
                action=action,
                expected_observation_digest=str(step.get("expected_observation_digest", "") or ""),
            )
        )

    return Task(
        task_id=task_id,
        images=tuple(images),
        question=str(raw.get("question", "")),
        format_instruction=str(raw.get("format_instruction", "")),
        level=level,
        domain=str(raw.get("domain", "")),
        subdomain=str(raw.get("subdomain", "")),
        gold_answer=gold,
        accepted_variants=tuple(raw.get("accepted_variants", []) or []),
        checkpoints=tuple(checkpoints),
        human_calls=human_calls,
        human_trajectory=tuple(trajectory),
    )


def load_task_file(path: str | Path) -> Task:
    """Load and validate a single task JSON file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    return _parse_task(raw, path.parent)


def load_tasks(path: str | Path) -> list[Task]:
    """Load a task file, or a benchmark split directory.

    For a directory, ``index.json`` (a list of relative task-file paths)
    selects the split; without one, every ``*.json`` file at the top level
    is treated as a task file. Duplicate task_ids are an error.
    """
    path = Path(path)
    if path.is_file():
        files = [path]
    elif path.is_dir():
        index = path / "index.json"
        if index.is_file():
            with open(index, encoding="utf-8") as f:
                listed = json.load(f)
            files = [path / rel for rel in listed]
        else:
            files = sorted(p for p in path.glob("*.json"))
    else:
        raise TaskSchemaError(f"no such task file or directory: {path}")

    tasks: list[Task] = []
    seen: set[str] = set()
    for f in files:
        task = load_task_file(f)
        if task.task_id in seen:
            raise TaskSchemaError(f"duplicate task_id {task.task_id!r} in {f}")
        seen.add(task.task_id)
        tasks.append(task)
    return tasks


def serialize_task(task: Task, base_dir: str | Path) -> dict[str, Any]:
    """Task back to its JSON form, with image paths relative to base_dir."""
    base = Path(base_dir)
    ckpts = []
    for c in task.checkpoints:
        d: dict[str, Any] = {"order": c.order, "axis": c.axis, "description": c.description}
        if c.axis == "S":
            d.update(
                keywords=list(c.keywords),
                reference_urls=list(c.reference_urls),
                expected_answer=c.expected_answer,
            )
        else:
            d.update(
                required_op=c.required_op,
                visual_question=c.visual_question,
                expected_visual_answer=c.expected_visual_answer,
                gt_artifact=c.gt_artifact,
            )
        ckpts.append(d)
    return {
        "task_id": task.task_id,
        "images": [str(Path(p).relative_to(base)) if Path(p).is_relative_to(base) else p for p in task.images],
        "question": task.question,
        "format_instruction": task.format_instruction,
        "level": task.level,
        "domain": task.domain,
        "subdomain": task.subdomain,
        "gold_answer": task.gold_answer,
        "accepted_variants": list(task.accepted_variants),
        "checkpoints": ckpts,
        "human_calls": task.human_calls,
        "human_trajectory": [
            {"order": s.order, "action": s.action, "expected_observation_digest": s.expected_observation_digest}
            for s in task.human_trajectory
        ],
    }
