"""Knowledge-expansion tools with a deterministic, per-task replayable cache.

Four tools: google_search, google_lens_search, fetch_webpage, download_image.
Every request is content-addressed by :func:`cache_key`; in ``record`` mode
payloads are persisted one JSON file per task, and in ``replay`` mode the
cache is the only source — no network I/O happens at all.

Live providers are configuration, not code: base URLs and keys come from
SEARCH_BASE_URL / SEARCH_API_KEY / READER_BASE_URL / IMAGE_HOST_URL.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .workspace import DOWNLOAD_CAP, pixel_digest  # noqa: F401  (cap surfaced via tool error text)

SEARCH_TOOLS = ("google_search", "google_lens_search", "fetch_webpage", "download_image")

DEFAULT_MAX_CHARS = 12000
RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.5
REQUEST_TIMEOUT_S = 30


class RetrievalError(Exception):
    pass


class CacheMissError(RetrievalError):
    def __init__(self, key: str):
        super().__init__(f"replay cache miss for request key {key}")
        self.key = key


class ProviderError(RetrievalError):
    pass


@dataclass(frozen=True)
class SearchRequest:
    tool: str
    args: dict[str, Any] = field(default_factory=dict)
    # Content hash of the image a lens request targets; filled by the caller
    # that can resolve image references, so keys stay filename-independent.
    image_digest: str = ""

    def __post_init__(self) -> None:
        if self.tool not in SEARCH_TOOLS:
            raise RetrievalError(f"unknown retrieval tool {self.tool!r}")
        if self.tool == "fetch_webpage":
            url = self.args.get("url", "")
            if not (isinstance(url, str) and url.startswith(("http://", "https://"))):
                raise RetrievalError(f"fetch_webpage url must be http/https, got {url!r}")


@dataclass
class SearchPayload:
    request_key: str
    status: str  # "ok" | "error"
    body: Any
    fetched_at: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_key": self.request_key,
            "status": self.status,
            "body": self.body,
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SearchPayload":
        return cls(d["request_key"], d["status"], d["body"], d.get("fetched_at", ""))


def _canonical_args(tool: str, args: dict[str, Any]) -> dict[str, Any]:
    out = {k: v for k, v in sorted(args.items()) if v is not None}
    if tool == "google_search":
        out.setdefault("gl", "us")
        out.setdefault("hl", "en")
    if tool == "fetch_webpage":
        out.setdefault("max_chars", DEFAULT_MAX_CHARS)
    if tool == "google_lens_search":
        # The image is identified by content, not by name or index.
        out.pop("image_path", None)
        out.pop("image_ref", None)
        out.pop("image_index", None)
    return out


def cache_key(req: SearchRequest) -> str:
    """Stable content hash of (tool, canonicalized args, lens image digest)."""
    material = {"tool": req.tool, "args": _canonical_args(req.tool, req.args)}
    if req.tool == "google_lens_search":
        material["image_digest"] = req.image_digest
    blob = json.dumps(material, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class SearchCache:
    """One JSON file per task mapping request key -> payload."""

    def __init__(self, cache_dir: str | Path, task_id: str):
        self.path = Path(cache_dir) / f"{task_id}.json"
        self._lock = threading.Lock()
        self._entries: dict[str, dict[str, Any]] = {}
        if self.path.is_file():
            with open(self.path, encoding="utf-8") as f:
                self._entries = json.load(f)

    def get(self, key: str) -> SearchPayload | None:
        entry = self._entries.get(key)
        return SearchPayload.from_dict(entry) if entry else None

    def put(self, payload: SearchPayload) -> None:
        with self._lock:
            self._entries[payload.request_key] = payload.to_dict()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as f:
                json.dump(self._entries, f, indent=1, sort_keys=True)
            os.replace(tmp, self.path)

    def __len__(self) -> int:
        return len(self._entries)


class Transport(Protocol):
    def send(self, req: SearchRequest) -> Any:
        """Return the payload body for a request, or raise ProviderError."""


class NetworkDisabledTransport:
    """Fails on any use; asserts hermeticity of replay mode."""

    def send(self, req: SearchRequest) -> Any:
        raise ProviderError(f"network disabled: attempted live {req.tool} call")


class RateLimiter:
    """Minimum-interval limiter shared by live transports."""

    def __init__(self, min_interval_s: float = 0.0):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delta = self._last + self.min_interval_s - now
            if delta > 0:
                time.sleep(delta)
            self._last = time.monotonic()


class LiveTransport:
    """HTTP transport for configured provider endpoints.

    Speaks a minimal JSON protocol documented in the README; endpoints and
    keys come from env vars so the harness runs against mock providers.
    """

    def __init__(self, rate_limiter: RateLimiter | None = None):
        self.search_base = os.environ.get("SEARCH_BASE_URL", "")
        self.reader_base = os.environ.get("READER_BASE_URL", "")
        self.image_host = os.environ.get("IMAGE_HOST_URL", "")
        self.api_key = os.environ.get("SEARCH_API_KEY", "")
        self.rate_limiter = rate_limiter or RateLimiter()

    def _request(self, method: str, url: str, **kwargs: Any) -> Any:
        import requests

        last: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            self.rate_limiter.wait()
            try:
                resp = requests.request(method, url, timeout=REQUEST_TIMEOUT_S, **kwargs)
                resp.raise_for_status()
                return resp
            except Exception as exc:  # noqa: BLE001 - wrapped and retried per policy
                last = exc
                time.sleep(RETRY_BACKOFF_S * (2**attempt))
        raise ProviderError(f"provider request failed after {RETRY_ATTEMPTS} attempts: {last}")

    def upload_image(self, image_path: str) -> str:
        """Content-addressed upload of a local image; returns its public URL."""
        if not self.image_host:
            raise ProviderError("IMAGE_HOST_URL not configured for lens upload")
        with open(image_path, "rb") as f:
            data = f.read()
        resp = self._request("POST", self.image_host.rstrip("/") + "/upload", files={"file": data})
        return resp.json()["url"]

    def send(self, req: SearchRequest) -> Any:
        args = _canonical_args(req.tool, req.args)
        headers = {"X-API-KEY": self.api_key} if self.api_key else {}
        if req.tool == "google_search":
            if not self.search_base:
                raise ProviderError("SEARCH_BASE_URL not configured")
            resp = self._request(
                "POST", self.search_base.rstrip("/") + "/search", json=args, headers=headers
            )
            return resp.json()
        if req.tool == "google_lens_search":
            if not self.search_base:
                raise ProviderError("SEARCH_BASE_URL not configured")
            image_url = req.args.get("image_url")
            if not image_url:
                local = req.args.get("image_path")
                if not local:
                    raise ProviderError("lens request lacks image_url/image_path")
                image_url = self.upload_image(local)
            resp = self._request(
                "POST",
                self.search_base.rstrip("/") + "/lens",
                json={"url": image_url},
                headers=headers,
            )
            return resp.json()
        if req.tool == "fetch_webpage":
            if not self.reader_base:
                raise ProviderError("READER_BASE_URL not configured")
            resp = self._request("GET", self.reader_base.rstrip("/") + "/" + args["url"], headers=headers)
            return {"url": args["url"], "text": resp.text}
        # download_image
        resp = self._request("GET", args["url"])
        return {
            "url": args["url"],
            "content_b64": base64.b64encode(resp.content).decode("ascii"),
            "content_type": resp.headers.get("Content-Type", "application/octet-stream"),
        }


def _truncate(body: Any, req: SearchRequest) -> Any:
    if req.tool == "fetch_webpage" and isinstance(body, dict) and isinstance(body.get("text"), str):
        max_chars = int(req.args.get("max_chars") or DEFAULT_MAX_CHARS)
        body = dict(body)
        body["text"] = body["text"][:max_chars]
    return body


def execute_search(
    req: SearchRequest,
    mode: str,
    cache: SearchCache | None = None,
    transport: Transport | None = None,
) -> SearchPayload:
    """Execute one retrieval request under live / record / replay semantics.

    replay reads only the cache (raising CacheMissError otherwise); record
    hits the transport and persists the payload; live hits the transport
    without touching the cache.
    """
    key = cache_key(req)
    if mode == "replay":
        if cache is None:
            raise CacheMissError(key)
        payload = cache.get(key)
        if payload is None:
            raise CacheMissError(key)
        return payload
    if mode not in ("live", "record"):
        raise RetrievalError(f"unknown retrieval mode {mode!r}")
    if transport is None:
        transport = LiveTransport()
    body = _truncate(transport.send(req), req)
    payload = SearchPayload(
        request_key=key,
        status="ok",
        body=body,
        fetched_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )
    if mode == "record":
        if cache is None:
            raise RetrievalError("record mode requires a cache")
        # Stored replay payloads carry no timestamp so replays are identical.
        payload = SearchPayload(key, "ok", payload.body, fetched_at="")
        cache.put(payload)
    return payload


def decode_download(payload: SearchPayload) -> bytes:
    """Bytes of a download_image payload body."""
    body = payload.body or {}
    return base64.b64decode(body.get("content_b64", ""))
