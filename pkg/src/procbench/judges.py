"""Judge clients and verdict parsing.

Two judge roles: a text judge scoring search checkpoints from a rendered
prompt (must answer with a ``VERDICT: PASS|FAIL`` line) and a visual judge
answering a short question about one artifact image. Real judges hit an
OpenAI-compatible chat endpoint at temperature 0; the deterministic mock
pair makes scoring fully reproducible offline.
"""

from __future__ import annotations

import base64
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .answers import normalize_answer
from .markers import read_answer

_VERDICT_RE = re.compile(r"VERDICT:\s*\[?\s*(PASS|FAIL)\s*\]?", re.IGNORECASE)


@dataclass
class JudgeVerdict:
    verdict: str  # "PASS" | "FAIL"
    reasoning: str
    raw: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def parse_verdict(text: str) -> JudgeVerdict:
    """Parse a judge response; unparseable output fails closed with raw kept."""
    m = _VERDICT_RE.search(text or "")
    if not m:
        return JudgeVerdict("FAIL", "unparseable judge output", raw=text or "")
    reasoning = ""
    rm = re.search(r"REASONING:\s*(.+)", text, re.IGNORECASE | re.DOTALL)
    if rm:
        reasoning = rm.group(1).strip()
    return JudgeVerdict(m.group(1).upper(), reasoning, raw=text)


class TextJudge(Protocol):
    def complete(self, prompt: str) -> str: ...


class VisualJudge(Protocol):
    def answer(self, image_path: str, question: str) -> str: ...


# -- deterministic mocks ----------------------------------------------------

_EXPECTED_RE = re.compile(r"\*\*CRITICAL: Expected Answer to Find:\*\*\n(.*?)(?=\n\*\*)", re.DOTALL)
_QUERIES_RE = re.compile(r"\*\*Model's Actual Search Queries:\*\*\n(.*?)(?=\n\*\*)", re.DOTALL)
_RESULTS_RE = re.compile(r"\*\*Search Results Summary:\*\*\n(.*?)(?=\n\*\*)", re.DOTALL)


class ContainmentTextJudge:
    """Mock text judge applying the prompt's own decision logic mechanically.

    PASS iff at least one query was made and the expected answer (when
    stated) appears, normalized, in the results summary.
    """

    def complete(self, prompt: str) -> str:
        def section(pattern: re.Pattern[str]) -> str:
            m = pattern.search(prompt)
            return m.group(1) if m else ""

        expected = section(_EXPECTED_RE)
        queries = section(_QUERIES_RE)
        results = section(_RESULTS_RE)
        if not queries.strip() or queries.strip() == "(none)":
            return "VERDICT: FAIL\nREASONING: no search queries were issued"
        if expected.strip():
            if normalize_answer(expected) in normalize_answer(results):
                return "VERDICT: PASS\nREASONING: results contain the expected answer"
            return "VERDICT: FAIL\nREASONING: expected answer not found in results"
        if results.strip() and results.strip() != "(none)":
            return "VERDICT: PASS\nREASONING: queries returned results"
        return "VERDICT: FAIL\nREASONING: no results returned"


class PixelProbeJudge:
    """Mock visual judge that decodes fixture evidence markers from pixels."""

    def answer(self, image_path: str, question: str) -> str:
        from .imaging import load_image

        return read_answer(load_image(image_path))


class AnswerBookJudge:
    """File-driven mock visual judge.

    The answer book maps (question, artifact basename) to the short answer
    the judge gives; anything unlisted reads as unclear. Entry format:
    ``[{"question": ..., "artifact": ..., "answer": ...}, ...]``.
    """

    def __init__(self, book_path: str | Path):
        path = Path(book_path)
        if not path.is_file():
            raise FileNotFoundError(f"mock judge expected-answer file not found: {path}")
        with open(path, encoding="utf-8") as f:
            entries = json.load(f)
        self._book: dict[tuple[str, str], str] = {
            (normalize_answer(e["question"]), e["artifact"]): e["answer"] for e in entries
        }

    def answer(self, image_path: str, question: str) -> str:
        key = (normalize_answer(question), Path(image_path).name)
        return self._book.get(key, "unclear")


# -- OpenAI-compatible live judges -------------------------------------------


class OpenAITextJudge:
    """Chat-completion judge, temperature 0, single sample."""

    def __init__(self, endpoint: str, model: str, api_key: str = ""):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key

    def _post(self, messages: list[dict]) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(
            self.endpoint + "/chat/completions",
            json={"model": self.model, "messages": messages, "temperature": 0},
            headers=headers,
            timeout=120,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"] or ""

    def complete(self, prompt: str) -> str:
        return self._post([{"role": "user", "content": prompt}])


class OpenAIVisualJudge(OpenAITextJudge):
    SYSTEM = (
        "You are a helpful assistant that answers questions about images.\n"
        "Provide concise, accurate answers based on what you see in the image."
    )

    def answer(self, image_path: str, question: str) -> str:
        with open(image_path, "rb") as f:
            b64 = base64.b64encode(f.read()).decode("ascii")
        return self._post(
            [
                {"role": "system", "content": self.SYSTEM},
                {
                    "role": "user",
                    "content": [
                        {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}},
                        {"type": "text", "text": question},
                    ],
                },
            ]
        )


def build_judges(spec: str, endpoint: str = "", api_key: str = "") -> tuple[TextJudge, VisualJudge]:
    """Judge pair from a config string.

    ``mock`` -> deterministic built-ins; ``mock:answers=<file>`` -> the
    file-driven visual mock (text judge stays the containment mock);
    anything else is treated as a model id on an OpenAI-compatible endpoint.
    """
    if spec == "mock":
        return ContainmentTextJudge(), PixelProbeJudge()
    if spec.startswith("mock:answers="):
        return ContainmentTextJudge(), AnswerBookJudge(spec.split("=", 1)[1])
    if not endpoint:
        raise ValueError(f"judge {spec!r} requires an endpoint")
    return OpenAITextJudge(endpoint, spec, api_key), OpenAIVisualJudge(endpoint, spec, api_key)
