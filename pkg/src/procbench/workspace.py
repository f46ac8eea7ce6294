"""Per-session indexed image store with canonical artifact naming.

Index 0 is always the original input. Every image produced by a tool or by
guest code is appended at the next dense index and written to disk as
``transformed_image_N.png``; downloaded images get ``downloaded_image_N.png``.
The store is append-only: existing indices are never mutated or removed.
An ``artifacts.json`` manifest maps index -> filename -> producing event.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .imaging import apply_op, load_image
from .ops import CanonicalOp

# Per-task download cap, surfaced as tool error text on overflow.
DOWNLOAD_CAP = 5

SOURCE_ORIGINAL = "original"
SOURCE_TOOL = "tool"
SOURCE_CODE = "code"
SOURCE_DOWNLOAD = "download"


class WorkspaceError(Exception):
    pass


class BadImageIndexError(WorkspaceError):
    pass


class DownloadCapError(WorkspaceError):
    def __init__(self) -> None:
        super().__init__(f"download limit reached (max {DOWNLOAD_CAP} per task)")


class ImageDecodeError(WorkspaceError):
    pass


@dataclass(frozen=True)
class ImageEntry:
    index: int
    filename: str
    source: str
    event_id: str


def pixel_digest(img: Image.Image) -> str:
    """Content hash over decoded pixels (mode, size, raw bytes).

    Used for lens cache keys and observation digests; insensitive to PNG
    encoder differences across library versions.
    """
    h = hashlib.sha256()
    h.update(img.mode.encode())
    h.update(f"{img.width}x{img.height}".encode())
    h.update(img.tobytes())
    return h.hexdigest()


class ImageWorkspace:
    """Indexed image store for one task session. Not shareable across sessions."""

    def __init__(self, session_id: str, output_dir: str | Path):
        self.session_id = session_id
        self.output_dir = Path(output_dir).resolve()
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.entries: list[ImageEntry] = []
        self._downloads = 0

    # -- setup -----------------------------------------------------------

    def add_original(self, path: str | Path) -> int:
        """Copy an input image into the session dir as the next original index."""
        index = len(self.entries)
        img = load_image(str(path))
        filename = f"original_image_{index}.png"
        img.save(self.output_dir / filename, format="PNG")
        self.entries.append(ImageEntry(index, filename, SOURCE_ORIGINAL, event_id=""))
        self._write_manifest()
        return index

    # -- queries ---------------------------------------------------------

    @property
    def next_index(self) -> int:
        return len(self.entries)

    @property
    def downloads_used(self) -> int:
        return self._downloads

    def path_of(self, index: int) -> Path:
        return self.output_dir / self.get(index).filename

    def get(self, index: int) -> ImageEntry:
        if not (0 <= index < len(self.entries)):
            raise BadImageIndexError(
                f"image index {index} does not exist (valid: 0..{len(self.entries) - 1})"
            )
        return self.entries[index]

    def open(self, index: int) -> Image.Image:
        return load_image(str(self.path_of(index)))

    def produced_entries(self) -> list[ImageEntry]:
        """Every non-original image, in index order."""
        return [e for e in self.entries if e.source != SOURCE_ORIGINAL]

    # -- mutation (append-only) ------------------------------------------

    def apply_visual_op(self, target: int, op: CanonicalOp, event_id: str = "") -> tuple[int, Path]:
        """Apply a validated op to image `target`; append and persist the result."""
        src = self.open(target)
        out = apply_op(src, op)
        index = len(self.entries)
        filename = f"transformed_image_{index}.png"
        out.save(self.output_dir / filename, format="PNG")
        self.entries.append(ImageEntry(index, filename, SOURCE_TOOL, event_id))
        self._write_manifest()
        return index, self.output_dir / filename

    def register_code_artifact(self, source_path: str | Path, event_id: str = "") -> tuple[int, Path]:
        """Append an image produced by guest code (re-encoded as PNG)."""
        try:
            img = load_image(str(source_path))
        except (UnidentifiedImageError, OSError) as exc:
            raise ImageDecodeError(f"cannot decode artifact {source_path}: {exc}") from exc
        index = len(self.entries)
        filename = f"transformed_image_{index}.png"
        img.save(self.output_dir / filename, format="PNG")
        self.entries.append(ImageEntry(index, filename, SOURCE_CODE, event_id))
        self._write_manifest()
        return index, self.output_dir / filename

    def register_downloaded(self, data: bytes, event_id: str = "") -> tuple[int, Path]:
        """Append a downloaded image. Fails atomically on bad bytes or cap overflow."""
        if self._downloads >= DOWNLOAD_CAP:
            raise DownloadCapError()
        try:
            img = Image.open(io.BytesIO(data))
            img.load()
            if img.mode not in ("RGB", "L"):
                img = img.convert("RGB")
        except (UnidentifiedImageError, OSError) as exc:
            raise ImageDecodeError(f"cannot decode downloaded image: {exc}") from exc
        index = len(self.entries)
        filename = f"downloaded_image_{index}.png"
        img.save(self.output_dir / filename, format="PNG")
        self.entries.append(ImageEntry(index, filename, SOURCE_DOWNLOAD, event_id))
        self._downloads += 1
        self._write_manifest()
        return index, self.output_dir / filename

    # -- manifest ----------------------------------------------------------

    def _write_manifest(self) -> None:
        manifest = {
            "session_id": self.session_id,
            "images": [
                {"index": e.index, "filename": e.filename, "source": e.source, "event_id": e.event_id}
                for e in self.entries
            ],
        }
        tmp = self.output_dir / "artifacts.json.tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
        os.replace(tmp, self.output_dir / "artifacts.json")

    @classmethod
    def load(cls, output_dir: str | Path) -> "ImageWorkspace":
        """Rehydrate a workspace view from its on-disk manifest (read-only use)."""
        output_dir = Path(output_dir)
        with open(output_dir / "artifacts.json", encoding="utf-8") as f:
            manifest = json.load(f)
        ws = cls(manifest.get("session_id", output_dir.name), output_dir)
        ws.entries = [
            ImageEntry(e["index"], e["filename"], e["source"], e.get("event_id", ""))
            for e in manifest["images"]
        ]
        ws._downloads = sum(1 for e in ws.entries if e.source == SOURCE_DOWNLOAD)
        return ws
