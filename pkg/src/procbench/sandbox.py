"""Guest-code execution host: isolated subprocess, artifact protocol, capture.

Each block runs in a fresh interpreter with ORIGINAL_IMAGE_PATH and
PROCESSED_IMAGE_SAVE_PATH pointing into a per-block staging directory that
is pre-seeded with copies of all current workspace images. The guest can
therefore read earlier artifacts but can never mutate the registered ones;
whatever appears new or changed in staging (or as a stray image in the
scratch cwd) is collected, renamed canonically and appended to the
workspace after the block exits.

When the guest-shim package is installed its preamble is injected before
the agent source (save-path redirection plus the runtime op log); without
it the host-side collection pass alone enforces the artifact protocol.
"""

from __future__ import annotations

import hashlib
import json
import re
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .workspace import ImageDecodeError, ImageWorkspace

DEFAULT_TIMEOUT_S = 60.0
DEFAULT_OUTPUT_CAP = 32 * 1024

CANONICAL_NAME_RE = re.compile(r"^(transformed|downloaded)_image_(\d+)\.png$")
_IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".webp", ".gif", ".tif", ".tiff"}

OP_LOG_FILENAME = "op_log.jsonl"

# Guest-side network cutoff; a no-op for protocol-compliant image code.
_NETWORK_OFF_PROLOGUE = """\
import socket as _pb_socket
def _pb_no_net(*_a, **_k):
    raise OSError("network disabled in sandbox")
_pb_socket.socket = _pb_no_net
_pb_socket.create_connection = _pb_no_net
del _pb_socket
"""


def _default_preamble_builder() -> Callable[[str, str, int], str] | None:
    try:
        import guestshim  # type: ignore[import-not-found]
    except ImportError:
        return None
    return guestshim.build_preamble


@dataclass
class SandboxConfig:
    timeout_s: float = DEFAULT_TIMEOUT_S
    output_cap_bytes: int = DEFAULT_OUTPUT_CAP
    disable_network: bool = True
    # (original_image_path, save_dir, next_index) -> preamble source.
    preamble_builder: Callable[[str, str, int], str] | None = None
    use_guest_shim: bool = True


@dataclass
class ExecutionResult:
    stdout: str
    stderr: str
    exit_status: int
    wall_time: float
    new_artifacts: list[tuple[int, str]] = field(default_factory=list)
    runtime_op_log: list[dict[str, Any]] = field(default_factory=list)
    truncated: bool = False


class SandboxSession:
    """One task session's executor. Blocks run strictly sequentially."""

    def __init__(self, workspace: ImageWorkspace, scratch_dir: str | Path, config: SandboxConfig | None = None):
        self.workspace = workspace
        self.scratch_dir = Path(scratch_dir).resolve()
        self.scratch_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or SandboxConfig()
        if self.config.preamble_builder is None and self.config.use_guest_shim:
            self.config.preamble_builder = _default_preamble_builder()
        self._block_no = 0
        self._executed = False

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _sha(path: Path) -> str:
        h = hashlib.sha256()
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(65536), b""):
                h.update(chunk)
        return h.hexdigest()

    def _seed_staging(self, staging: Path) -> dict[str, str]:
        staging.mkdir(parents=True, exist_ok=True)
        seeds: dict[str, str] = {}
        for entry in self.workspace.entries:
            src = self.workspace.output_dir / entry.filename
            dst = staging / entry.filename
            shutil.copyfile(src, dst)
            seeds[entry.filename] = self._sha(dst)
        return seeds

    def _cap(self, text: str) -> tuple[str, bool]:
        data = text.encode("utf-8", errors="replace")
        if len(data) <= self.config.output_cap_bytes:
            return text, False
        return data[: self.config.output_cap_bytes].decode("utf-8", errors="replace"), True

    # -- execution ---------------------------------------------------------

    def execute_code_block(self, source: str, event_id: str = "") -> ExecutionResult:
        if not source.strip():
            raise ValueError("empty code block")
        self._executed = True
        self._block_no += 1
        block_no = self._block_no
        staging = self.scratch_dir / f"stage_{block_no}"
        seeds = self._seed_staging(staging)
        pre_scratch = {p.name for p in self.scratch_dir.iterdir()}

        original_path = ""
        if self.workspace.entries:
            original_path = str(staging / self.workspace.entries[0].filename)
        next_index = self.workspace.next_index

        parts = []
        if self.config.disable_network:
            parts.append(_NETWORK_OFF_PROLOGUE)
        if self.config.preamble_builder is not None:
            parts.append(self.config.preamble_builder(original_path, str(staging), next_index))
        parts.append(source)
        program = self.scratch_dir / f"block_{block_no}.py"
        program.write_text("\n".join(parts), encoding="utf-8")

        import os

        env = dict(os.environ)
        env["ORIGINAL_IMAGE_PATH"] = original_path
        env["PROCESSED_IMAGE_SAVE_PATH"] = str(staging)

        start = time.monotonic()
        truncated = False
        try:
            proc = subprocess.run(
                [sys.executable, str(program)],
                cwd=self.scratch_dir,
                env=env,
                capture_output=True,
                text=True,
                timeout=self.config.timeout_s,
            )
            stdout, stderr, exit_status = proc.stdout, proc.stderr, proc.returncode
        except subprocess.TimeoutExpired as exc:
            stdout = exc.stdout.decode("utf-8", "replace") if isinstance(exc.stdout, bytes) else (exc.stdout or "")
            stderr = exc.stderr.decode("utf-8", "replace") if isinstance(exc.stderr, bytes) else (exc.stderr or "")
            stderr += f"\n[sandbox] timeout after {self.config.timeout_s}s, process killed"
            exit_status = 124
            truncated = True
        wall_time = min(time.monotonic() - start, self.config.timeout_s)

        stdout, cap1 = self._cap(stdout)
        stderr, cap2 = self._cap(stderr)
        truncated = truncated or cap1 or cap2

        notes: list[str] = []
        new_artifacts = self._collect_new(staging, seeds, pre_scratch, event_id, notes)
        if notes:
            stderr = stderr + ("\n" if stderr and not stderr.endswith("\n") else "") + "\n".join(notes)

        runtime_op_log = self._read_op_log()

        return ExecutionResult(
            stdout=stdout,
            stderr=stderr,
            exit_status=exit_status,
            wall_time=wall_time,
            new_artifacts=new_artifacts,
            runtime_op_log=runtime_op_log,
            truncated=truncated,
        )

    def _collect_new(
        self,
        staging: Path,
        seeds: dict[str, str],
        pre_scratch: set[str],
        event_id: str,
        notes: list[str],
    ) -> list[tuple[int, str]]:
        # Stray images written to the scratch cwd get redirected into staging.
        for p in sorted(self.scratch_dir.iterdir()):
            if p.is_file() and p.name not in pre_scratch and p.suffix.lower() in _IMAGE_EXTS:
                target = staging / p.name
                if not target.exists():
                    shutil.move(str(p), target)
                    notes.append(f"[sandbox] redirected stray artifact {p.name} into the save directory")

        canonical: list[tuple[int, Path]] = []
        stray: list[Path] = []
        for p in sorted(staging.iterdir()):
            if not p.is_file() or p.suffix.lower() not in _IMAGE_EXTS:
                continue
            if p.name in seeds and self._sha(p) == seeds[p.name]:
                continue  # untouched seed copy
            m = CANONICAL_NAME_RE.match(p.name)
            if m:
                canonical.append((int(m.group(2)), p))
            else:
                stray.append(p)
        canonical.sort(key=lambda t: t[0])

        new_artifacts: list[tuple[int, str]] = []
        for claimed, path in canonical + [(None, p) for p in stray]:  # type: ignore[list-item]
            try:
                index, out_path = self.workspace.register_code_artifact(path, event_id)
            except ImageDecodeError as exc:
                notes.append(f"[sandbox] skipped undecodable artifact {path.name}: {exc}")
                continue
            if claimed is None:
                notes.append(f"[sandbox] renamed {path.name} -> {out_path.name}")
            elif claimed != index:
                notes.append(f"[sandbox] index {claimed} taken; renamed {path.name} -> {out_path.name}")
            new_artifacts.append((index, out_path.name))
        return new_artifacts

    def _read_op_log(self) -> list[dict[str, Any]]:
        log_path = self.scratch_dir / OP_LOG_FILENAME
        if not log_path.is_file():
            return []
        entries: list[dict[str, Any]] = []
        for line in log_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                entries.append({"op_name": "unknown", "raw": line})
        log_path.unlink()
        return entries

    def collect_artifacts(self) -> list[tuple[int, str]]:
        """Manifest view of produced artifacts, ordered by index. Idempotent."""
        return [(e.index, e.filename) for e in self.workspace.produced_entries()]
