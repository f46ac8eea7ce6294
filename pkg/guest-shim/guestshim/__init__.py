"""Guest-side instrumentation preamble builder.

The emitted preamble is self-contained source text meant to be prepended
to an agent-written program before it runs in the sandbox. It redirects
image saves into the processed-image directory under canonical names,
hooks the recognized visual-operation entry points of the guest imaging
libraries into a runtime operation log (``op_log.jsonl`` in the working
directory), and is a semantic no-op for programs that never touch images.
Injection is idempotent and hook failures never crash the guest program.
"""

from __future__ import annotations

from ._body import PREAMBLE_BODY

__version__ = "0.1.0"

__all__ = ["build_preamble"]


def build_preamble(original_path: str, save_dir: str, next_index: int) -> str:
    """Preamble source for one guest program.

    original_path: path of image 0 (exported as ORIGINAL_IMAGE_PATH when
    unset); save_dir: redirection target directory (PROCESSED_IMAGE_SAVE_PATH);
    next_index: first index for canonically renamed artifacts.
    """
    header = (
        f"_GS_SAVE_DIR = {str(save_dir)!r}\n"
        f"_GS_ORIGINAL = {str(original_path)!r}\n"
        f"_GS_START_INDEX = {int(next_index)}\n"
    )
    return header + PREAMBLE_BODY
