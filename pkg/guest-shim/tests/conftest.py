from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
CORPUS_DIR = REPO_ROOT / "fixtures" / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    assert CORPUS_DIR.is_dir(), "primary fixture corpus missing (fixtures/corpus)"
    return CORPUS_DIR


def _write_original(path: Path) -> None:
    # 100x80: corpus snippets with computed boxes assume these dimensions.
    from PIL import Image
    import numpy as np

    rng = np.random.RandomState(11)
    arr = rng.randint(0, 256, (80, 100, 3)).astype("uint8")
    Image.fromarray(arr, "RGB").save(path)


def run_guest(
    source: str,
    workdir: Path,
    with_preamble: bool = True,
    next_index: int = 1,
) -> tuple[subprocess.CompletedProcess, list[dict], Path]:
    """Execute one guest program under the documented env-var contract.

    Returns (process, parsed op_log entries, save_dir).
    """
    import guestshim

    scratch = workdir / "scratch"
    save_dir = workdir / "save"
    scratch.mkdir(parents=True, exist_ok=True)
    save_dir.mkdir(parents=True, exist_ok=True)
    original = workdir / "original_image_0.png"
    if not original.exists():
        _write_original(original)

    if with_preamble:
        program = guestshim.build_preamble(str(original), str(save_dir), next_index) + "\n" + source
    else:
        program = source
    prog_path = scratch / "prog.py"
    prog_path.write_text(program, encoding="utf-8")

    env = dict(os.environ)
    env["ORIGINAL_IMAGE_PATH"] = str(original)
    env["PROCESSED_IMAGE_SAVE_PATH"] = str(save_dir)
    proc = subprocess.run(
        [sys.executable, str(prog_path)],
        cwd=scratch,
        env=env,
        capture_output=True,
        text=True,
        timeout=120,
    )

    entries: list[dict] = []
    log_path = scratch / "op_log.jsonl"
    if log_path.is_file():
        for line in log_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                entries.append(json.loads(line))
    return proc, entries, save_dir
