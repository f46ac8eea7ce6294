from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    assert FIXTURES_DIR.is_dir(), "committed fixture set missing; run `procbench fixtures generate --output fixtures`"
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def fixture_tasks(fixtures_dir):
    from procbench.tasks import load_tasks

    return load_tasks(fixtures_dir)


def make_random_image(rng: np.random.RandomState, min_side: int = 8, max_side: int = 64) -> Image.Image:
    w = int(rng.randint(min_side, max_side + 1))
    h = int(rng.randint(min_side, max_side + 1))
    mode = "RGB" if rng.rand() < 0.7 else "L"
    shape = (h, w, 3) if mode == "RGB" else (h, w)
    arr = rng.randint(0, 256, size=shape).astype(np.uint8)
    return Image.fromarray(arr, mode)


@pytest.fixture()
def sample_image(tmp_path) -> Path:
    img = Image.new("RGB", (100, 80), (120, 130, 140))
    path = tmp_path / "orig.png"
    img.save(path)
    return path


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    """Run the CLI as a subprocess (exit-code fidelity)."""
    return subprocess.run(
        [sys.executable, "-m", "procbench.cli", *argv],
        capture_output=True,
        text=True,
        timeout=600,
    )


@pytest.fixture(scope="session")
def oracle_run_dir(tmp_path_factory, fixtures_dir) -> Path:
    """One shared oracle replay run over all committed fixtures."""
    from procbench.cli import main

    run_dir = tmp_path_factory.mktemp("oracle_run")
    rc = main(
        [
            "run",
            "--tasks",
            str(fixtures_dir),
            "--mode",
            "atm",
            "--model",
            "mock:oracle",
            "--retrieval",
            "replay",
            "--output",
            str(run_dir),
        ]
    )
    assert rc == 0
    return run_dir
