"""Chat-model clients: scripted mocks for deterministic runs, plus a live
OpenAI-compatible client.

Scripted mocks are first-class citizens: ``mock:oracle`` replays a task's
human reference trajectory and then answers with the gold answer;
``mock:script=<file>`` plays a fixed action list; ``mock:answer=<text>``
answers immediately. Real model runs go through a chat-completions endpoint
with the tool schemas attached.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .tasks import Task


@dataclass
class ToolCall:
    name: str
    arguments: dict[str, Any]
    call_id: str = ""


@dataclass
class ModelTurn:
    text: str = ""
    tool_calls: list[ToolCall] = field(default_factory=list)


@dataclass
class Message:
    """One context message; images ride along as (index, path) attachments."""

    role: str
    content: str
    images: list[tuple[int, str]] = field(default_factory=list)
    tool_calls: list[ToolCall] = field(default_factory=list)


class ModelClient(Protocol):
    model_id: str

    def complete(self, messages: list[Message], tools: list[dict]) -> ModelTurn: ...


class ModelTransportError(Exception):
    pass


def _turn_from_step(step: dict[str, Any]) -> ModelTurn:
    if "tool_call" in step:
        tc = step["tool_call"]
        return ModelTurn(tool_calls=[ToolCall(tc["name"], dict(tc.get("arguments", {})))])
    if "code" in step:
        return ModelTurn(text=f"<code>\n{step['code']}\n</code>")
    if "answer" in step:
        return ModelTurn(text=f"<answer>{step['answer']}</answer>")
    return ModelTurn(text=step.get("text", ""))


class OracleModel:
    """Replays the human reference trajectory, then answers with gold."""

    model_id = "mock:oracle"

    def __init__(self, task: Task):
        self._steps = list(task.human_trajectory)
        self._gold = task.gold_answer
        self._pos = 0

    def complete(self, messages: list[Message], tools: list[dict]) -> ModelTurn:
        if self._pos >= len(self._steps):
            return ModelTurn(text=f"<answer>{self._gold}</answer>")
        action = self._steps[self._pos].action
        self._pos += 1
        if action["kind"] == "tool_call":
            return ModelTurn(tool_calls=[ToolCall(action["name"], dict(action.get("arguments", {})))])
        return ModelTurn(text=f"<code>\n{action['source']}\n</code>")


class ScriptModel:
    """Plays a fixed list of turns; optionally repeats the last one forever."""

    def __init__(self, turns: list[dict[str, Any]], repeat_last: bool = False, model_id: str = "mock:script"):
        self.model_id = model_id
        self._turns = turns
        self._repeat_last = repeat_last
        self._pos = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptModel":
        with open(path, encoding="utf-8") as f:
            spec = json.load(f)
        return cls(spec["turns"], bool(spec.get("repeat_last", False)), model_id=f"mock:script={path}")

    def complete(self, messages: list[Message], tools: list[dict]) -> ModelTurn:
        if self._pos >= len(self._turns):
            if self._repeat_last and self._turns:
                return _turn_from_step(self._turns[-1])
            return ModelTurn(text="")
        turn = self._turns[self._pos]
        self._pos += 1
        return _turn_from_step(turn)


class OpenAIChatModel:
    """Minimal OpenAI-compatible chat client with tool-schema attachment."""

    def __init__(self, endpoint: str, model_id: str, api_key: str = "", temperature: float = 0.0):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.temperature = temperature

    @staticmethod
    def _encode_message(msg: Message) -> dict[str, Any]:
        import base64

        if not msg.images:
            return {"role": msg.role, "content": msg.content}
        parts: list[dict[str, Any]] = [{"type": "text", "text": msg.content}]
        for index, path in msg.images:
            with open(path, "rb") as f:
                b64 = base64.b64encode(f.read()).decode("ascii")
            parts.append({"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}})
        return {"role": msg.role, "content": parts}

    def complete(self, messages: list[Message], tools: list[dict]) -> ModelTurn:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body: dict[str, Any] = {
            "model": self.model_id,
            "messages": [self._encode_message(m) for m in messages],
            "temperature": self.temperature,
        }
        if tools:
            body["tools"] = tools
        try:
            resp = requests.post(self.endpoint + "/chat/completions", json=body, headers=headers, timeout=300)
            resp.raise_for_status()
            payload = resp.json()
        except Exception as exc:  # noqa: BLE001 - surfaced as a transport error
            raise ModelTransportError(str(exc)) from exc
        message = payload["choices"][0]["message"]
        calls = []
        for tc in message.get("tool_calls") or []:
            fn = tc.get("function", {})
            try:
                args = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError:
                args = {}
            calls.append(ToolCall(fn.get("name", ""), args, call_id=tc.get("id", "")))
        return ModelTurn(text=message.get("content") or "", tool_calls=calls)


def build_model(spec: str, task: Task, endpoint: str = "", api_key: str = "") -> ModelClient:
    """Model client from a config string, one instance per task session."""
    if spec == "mock:oracle":
        return OracleModel(task)
    if spec.startswith("mock:script="):
        return ScriptModel.from_file(spec.split("=", 1)[1])
    if spec.startswith("mock:answer="):
        answer = spec.split("=", 1)[1]
        return ScriptModel([{"answer": answer}], model_id=spec)
    if spec.startswith("mock:"):
        raise ValueError(f"unknown mock model {spec!r}")
    if not endpoint:
        raise ValueError(f"model {spec!r} requires --model-endpoint")
    return OpenAIChatModel(endpoint, spec, api_key)
