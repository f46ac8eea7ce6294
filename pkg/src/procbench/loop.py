"""Per-task agent loop: prompt assembly, action parsing, dispatch, tracing.

One run is a turn loop under a strict interaction budget: the model acts
(structured tool calls, a <code> block, or a final <answer>), the harness
dispatches the action through the workspace / retrieval / sandbox, and the
observation (including every new image) is appended to the multimodal
context. Every event is logged to a replayable JSONL trace.

An action and an answer in the same turn resolve to the action; the
premature answer is logged as a protocol violation.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .models import Message, ModelClient, ModelTransportError, ModelTurn, ToolCall
from .ops import OP_NAMES, OpValidationError, validate_op
from .retrieval import (
    CacheMissError,
    RetrievalError,
    SearchCache,
    SearchPayload,
    SearchRequest,
    Transport,
    decode_download,
    execute_search,
)
from .sandbox import SandboxConfig, SandboxSession
from .tasks import Task
from .workspace import ImageWorkspace, WorkspaceError, pixel_digest

DEFAULT_BUDGET = 20

MODES = ("gen", "atm")

TERMINATION_ANSWERED = "answered"
TERMINATION_BUDGET = "budget_exhausted"
TERMINATION_MODEL_ERROR = "model_error"

_MODEL_RETRIES = 3

_CODE_RE = re.compile(r"<code>(.*?)</code>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>((?:(?!<answer>).)*?)</answer>", re.DOTALL)
_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)


@dataclass
class Action:
    kind: str  # think | tool_call | code_block | answer
    tool_calls: list[ToolCall] = field(default_factory=list)
    code: str = ""
    answer: str = ""
    think: str = ""
    violation: bool = False  # action and answer in the same turn


@dataclass
class TraceEvent:
    turn: int
    event_id: str
    kind: str  # tool_call | code_block | answer | think
    payload: dict[str, Any]
    observation_digest: str = ""
    artifacts: list[int] = field(default_factory=list)
    payload_keys: list[str] = field(default_factory=list)
    violation: bool = False
    error: str | None = None
    ts: str = ""

    def produced(self) -> bool:
        return bool(self.artifacts) or bool(self.payload_keys)

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn": self.turn,
            "event_id": self.event_id,
            "kind": self.kind,
            "payload": self.payload,
            "observation_digest": self.observation_digest,
            "artifacts": self.artifacts,
            "payload_keys": self.payload_keys,
            "violation": self.violation,
            "error": self.error,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceEvent":
        return cls(
            turn=d["turn"],
            event_id=d["event_id"],
            kind=d["kind"],
            payload=d.get("payload", {}),
            observation_digest=d.get("observation_digest", ""),
            artifacts=list(d.get("artifacts", [])),
            payload_keys=list(d.get("payload_keys", [])),
            violation=bool(d.get("violation", False)),
            error=d.get("error"),
            ts=d.get("ts", ""),
        )


@dataclass
class Trace:
    task_id: str
    mode: str
    events: list[TraceEvent] = field(default_factory=list)
    final_answer: str | None = None
    termination: str = TERMINATION_BUDGET
    budget: int = DEFAULT_BUDGET
    model_id: str = ""
    failure_label: str | None = None  # manual annotation slot, never set by the harness

    @property
    def c_agent(self) -> int:
        return sum(1 for e in self.events if e.produced())

    def meta_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "mode": self.mode,
            "final_answer": self.final_answer,
            "termination": self.termination,
            "c_agent": self.c_agent,
            "budget": self.budget,
            "model_id": self.model_id,
            "failure_label": self.failure_label,
            "n_events": len(self.events),
        }


@dataclass
class Observation:
    text: str
    images: list[tuple[int, str]] = field(default_factory=list)  # (index, path)

    def digest(self) -> str:
        from .imaging import load_image

        h = hashlib.sha256()
        h.update(self.text.encode("utf-8"))
        for index, path in self.images:
            h.update(f"|{index}:".encode())
            h.update(pixel_digest(load_image(path)).encode())
        return h.hexdigest()


def load_system_prompt(mode: str) -> str:
    name = "gen_system.txt" if mode == "gen" else "atm_system.txt"
    return resources.files("procbench.data.prompts").joinpath(name).read_text("utf-8")


def load_tool_schemas(mode: str) -> list[dict]:
    search = json.loads(resources.files("procbench.data").joinpath("tools_search.json").read_text("utf-8"))
    if mode == "gen":
        return search
    visual = json.loads(resources.files("procbench.data").joinpath("tools_visual.json").read_text("utf-8"))
    return visual + search


def parse_action(turn: ModelTurn) -> Action:
    """Classify one model turn.

    Structured tool calls take precedence; else the first <code> block;
    else the <answer> content; else think-only. Unparseable output never
    errors, it becomes a think-only action.
    """
    text = turn.text or ""
    think_match = _THINK_RE.search(text)
    think = think_match.group(1).strip() if think_match else ""
    answer_match = _ANSWER_RE.search(text)
    code_match = _CODE_RE.search(text)

    if turn.tool_calls:
        return Action(
            kind="tool_call",
            tool_calls=turn.tool_calls,
            think=think,
            violation=answer_match is not None,
        )
    if code_match and code_match.group(1).strip():
        return Action(
            kind="code_block",
            code=code_match.group(1).strip("\n"),
            think=think,
            violation=answer_match is not None,
        )
    if answer_match:
        return Action(kind="answer", answer=answer_match.group(1).strip(), think=think)
    return Action(kind="think", think=think or text.strip())


@dataclass
class TaskSession:
    """Everything one task run needs; strictly sequential within a session."""

    task: Task
    mode: str
    workspace: ImageWorkspace
    sandbox: SandboxSession | None
    cache: SearchCache | None
    transport: Transport | None
    retrieval_mode: str

    def resolve_lens_target(self, args: dict[str, Any]) -> int:
        if isinstance(args.get("image_index"), int):
            return args["image_index"]
        path = args.get("image_path")
        if path:
            name = Path(str(path)).name
            for entry in self.workspace.entries:
                if entry.filename == name:
                    return entry.index
            raise WorkspaceError(f"no workspace image named {name!r}")
        ref = args.get("image_ref", "original")
        if ref == "current":
            return self.workspace.next_index - 1
        return 0


def build_observation(results: list[Observation]) -> Observation:
    """Merge per-call observations of one turn into a single model message."""
    texts = [r.text for r in results if r.text]
    images: list[tuple[int, str]] = []
    for r in results:
        images.extend(r.images)
    return Observation(text="\n\n".join(texts), images=images)


def _summarize_payload(tool: str, payload: SearchPayload, limit: int = 2000) -> str:
    body = payload.body or {}
    if tool == "google_search":
        results = body.get("results", [])
        if not results:
            return "Search returned 0 results."
        lines = [
            f"{i + 1}. {r.get('title', '')} — {r.get('link', '')}\n   {r.get('snippet', '')}"
            for i, r in enumerate(results[:10])
        ]
        return ("Search results:\n" + "\n".join(lines))[:limit]
    if tool == "google_lens_search":
        matches = body.get("matches", [])
        if not matches:
            return "Reverse image search returned 0 matches."
        lines = [
            f"{i + 1}. {m.get('title', '')} — {m.get('link', '')}\n   {m.get('snippet', '')}"
            for i, m in enumerate(matches[:10])
        ]
        return ("Visual matches:\n" + "\n".join(lines))[:limit]
    if tool == "fetch_webpage":
        text = body.get("text", "")
        if not text:
            return "Page returned no extractable text."
        return f"Content of {body.get('url', '')}:\n{text[:limit]}"
    return "Image downloaded."


class TaskRunner:
    """Runs one agent loop and accumulates the trace."""

    def __init__(self, session: TaskSession, model: ModelClient, budget: int = DEFAULT_BUDGET):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.session = session
        self.model = model
        self.budget = budget
        self.trace = Trace(
            task_id=session.task.task_id,
            mode=session.mode,
            budget=budget,
            model_id=getattr(model, "model_id", "unknown"),
        )
        self._event_no = 0
        self.messages: list[Message] = []

    # -- events -------------------------------------------------------------

    def _next_event_id(self) -> str:
        self._event_no += 1
        return f"e{self._event_no}"

    def _record(self, event: TraceEvent, observation: Observation | None) -> None:
        import time

        if observation is not None:
            event.observation_digest = observation.digest()
        event.ts = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.trace.events.append(event)

    # -- dispatch -------------------------------------------------------------

    def _dispatch_tool_call(self, turn_no: int, call: ToolCall, think: str, violation: bool) -> Observation:
        event = TraceEvent(
            turn=turn_no,
            event_id=self._next_event_id(),
            kind="tool_call",
            payload={"name": call.name, "arguments": call.arguments, "think": think},
            violation=violation,
        )
        ws = self.session.workspace
        try:
            if call.name in OP_NAMES:
                if self.session.mode == "gen":
                    raise OpValidationError(
                        f"{call.name} is not callable in code mode; perform visual operations in <code>"
                    )
                args = dict(call.arguments)
                target = args.pop("image_index", None)
                if not isinstance(target, int):
                    raise OpValidationError(f"{call.name} requires integer image_index")
                op = validate_op(call.name, args)
                index, path = ws.apply_visual_op(target, op, event.event_id)
                event.artifacts = [index]
                obs = Observation(
                    text=f"Operation {call.name} succeeded. [Image {index}: {path.name}]",
                    images=[(index, str(path))],
                )
            elif call.name == "download_image":
                payload = self._search(call, event)
                data = decode_download(payload)
                index, path = ws.register_downloaded(data, event.event_id)
                event.artifacts = [index]
                obs = Observation(
                    text=f"Downloaded image registered. [Image {index}: {path.name}]",
                    images=[(index, str(path))],
                )
            elif call.name in ("google_search", "google_lens_search", "fetch_webpage"):
                payload = self._search(call, event)
                obs = Observation(text=_summarize_payload(call.name, payload))
            else:
                raise OpValidationError(f"unknown tool {call.name!r}")
        except CacheMissError:
            # A replay-mode miss is a harness fault, not agent behavior.
            raise
        except (OpValidationError, WorkspaceError, RetrievalError) as exc:
            event.error = str(exc)
            event.artifacts = []
            obs = Observation(text=f"Tool error ({call.name}): {exc}")
        self._record(event, obs)
        return obs

    def _search(self, call: ToolCall, event: TraceEvent) -> SearchPayload:
        args = dict(call.arguments)
        digest = ""
        if call.name == "google_lens_search":
            target = self.session.resolve_lens_target(args)
            img = self.session.workspace.open(target)
            digest = pixel_digest(img)
            args["image_path"] = str(self.session.workspace.path_of(target))
        req = SearchRequest(tool=call.name, args=args, image_digest=digest)
        payload = execute_search(
            req,
            mode=self.session.retrieval_mode,
            cache=self.session.cache,
            transport=self.session.transport,
        )
        event.payload_keys = [payload.request_key]
        return payload

    def _dispatch_code(self, turn_no: int, action: Action) -> Observation:
        event = TraceEvent(
            turn=turn_no,
            event_id=self._next_event_id(),
            kind="code_block",
            payload={"source": action.code, "think": action.think},
            violation=action.violation,
        )
        if self.session.mode != "gen" or self.session.sandbox is None:
            event.error = "code execution is not available in atomic mode"
            obs = Observation(text=f"Tool error: {event.error}")
            self._record(event, obs)
            return obs
        result = self.session.sandbox.execute_code_block(action.code, event.event_id)
        event.artifacts = [index for index, _name in result.new_artifacts]
        event.payload["exit_status"] = result.exit_status
        event.payload["runtime_op_log"] = result.runtime_op_log
        parts = []
        if result.stdout:
            parts.append(f"stdout:\n{result.stdout}")
        if result.stderr:
            parts.append(f"stderr:\n{result.stderr}")
        if result.exit_status != 0:
            parts.append(f"(exit status {result.exit_status})")
        images = []
        for index, name in result.new_artifacts:
            parts.append(f"[Image {index}: {name}]")
            images.append((index, str(self.session.workspace.path_of(index))))
        if not parts:
            parts.append("(no output)")
        obs = Observation(text="\n".join(parts), images=images)
        self._record(event, obs)
        return obs

    # -- main loop ---------------------------------------------------------------

    def _initial_messages(self) -> list[Message]:
        task = self.session.task
        ws = self.session.workspace
        originals = [(e.index, str(ws.path_of(e.index))) for e in ws.entries if e.source == "original"]
        labels = " ".join(f"[Image {i}]" for i, _p in originals)
        user = f"{task.question}\n\n{task.format_instruction}".strip()
        if labels:
            user += f"\n\n{labels}"
        return [
            Message(role="system", content=load_system_prompt(self.session.mode)),
            Message(role="user", content=user, images=originals),
        ]

    def run(self) -> Trace:
        self.messages = self._initial_messages()
        tools = load_tool_schemas(self.session.mode)

        for turn_no in range(1, self.budget + 1):
            turn = self._complete_with_retries(tools)
            if turn is None:
                self.trace.termination = TERMINATION_MODEL_ERROR
                return self.trace
            action = parse_action(turn)
            self.messages.append(Message(role="assistant", content=turn.text, tool_calls=turn.tool_calls))

            if action.kind == "answer":
                event = TraceEvent(
                    turn=turn_no,
                    event_id=self._next_event_id(),
                    kind="answer",
                    payload={"text": action.answer, "think": action.think},
                )
                self._record(event, None)
                self.trace.final_answer = action.answer
                self.trace.termination = TERMINATION_ANSWERED
                return self.trace

            if action.kind == "think":
                event = TraceEvent(
                    turn=turn_no,
                    event_id=self._next_event_id(),
                    kind="think",
                    payload={"think": action.think},
                )
                self._record(event, None)
                self.messages.append(
                    Message(role="user", content="(no action taken; use a tool, code, or give <answer>)")
                )
                continue

            if action.kind == "tool_call":
                observations = [
                    self._dispatch_tool_call(turn_no, call, action.think, action.violation)
                    for call in action.tool_calls
                ]
                merged = build_observation(observations)
            else:
                merged = self._dispatch_code(turn_no, action)
            self.messages.append(Message(role="user", content=merged.text, images=merged.images))

        self.trace.termination = TERMINATION_BUDGET
        return self.trace

    def _complete_with_retries(self, tools: list[dict]) -> ModelTurn | None:
        for _attempt in range(_MODEL_RETRIES):
            try:
                return self.model.complete(self.messages, tools)
            except ModelTransportError:
                continue
        return None


def run_task(
    task: Task,
    mode: str,
    model: ModelClient,
    run_dir: str | Path,
    retrieval_mode: str = "replay",
    cache_dir: str | Path | None = None,
    transport: Transport | None = None,
    budget: int = DEFAULT_BUDGET,
    sandbox_config: SandboxConfig | None = None,
) -> Trace:
    """Run one task end to end and persist trace + artifacts under run_dir."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    run_dir = Path(run_dir)
    ws = ImageWorkspace(task.task_id, run_dir / task.task_id)
    for image_path in task.images:
        ws.add_original(image_path)

    sandbox = None
    if mode == "gen":
        sandbox = SandboxSession(ws, run_dir / "scratch" / task.task_id, sandbox_config)

    cache = SearchCache(cache_dir, task.task_id) if cache_dir is not None else None
    session = TaskSession(
        task=task,
        mode=mode,
        workspace=ws,
        sandbox=sandbox,
        cache=cache,
        transport=transport,
        retrieval_mode=retrieval_mode,
    )
    runner = TaskRunner(session, model, budget)
    trace = runner.run()
    write_trace(trace, run_dir)
    return trace


def write_trace(trace: Trace, run_dir: str | Path) -> Path:
    traces_dir = Path(run_dir) / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)
    path = traces_dir / f"{trace.task_id}.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for event in trace.events:
            f.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
    with open(traces_dir / f"{trace.task_id}.meta.json", "w", encoding="utf-8") as f:
        json.dump(trace.meta_dict(), f, indent=1, sort_keys=True)
    return path


def read_trace(run_dir: str | Path, task_id: str) -> Trace:
    traces_dir = Path(run_dir) / "traces"
    with open(traces_dir / f"{task_id}.meta.json", encoding="utf-8") as f:
        meta = json.load(f)
    events = []
    with open(traces_dir / f"{task_id}.jsonl", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                events.append(TraceEvent.from_dict(json.loads(line)))
    trace = Trace(
        task_id=meta["task_id"],
        mode=meta["mode"],
        events=events,
        final_answer=meta.get("final_answer"),
        termination=meta.get("termination", TERMINATION_BUDGET),
        budget=meta.get("budget", DEFAULT_BUDGET),
        model_id=meta.get("model_id", ""),
        failure_label=meta.get("failure_label"),
    )
    return trace


def canonical_trace_lines(trace: Trace) -> list[str]:
    """Event lines with timestamp fields stripped, for replay diffing."""
    lines = []
    for event in trace.events:
        d = event.to_dict()
        d.pop("ts", None)
        lines.append(json.dumps(d, sort_keys=True))
    return lines
