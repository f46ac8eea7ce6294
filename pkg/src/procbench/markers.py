"""Machine-decodable evidence markers for the synthetic fixture set.

A marker is a pair of solid color blocks: a fixed orientation block plus a
payload block whose exact RGB encodes a short answer word. The deterministic
mock visual judge "reads" an artifact by decoding markers: a marker only
decodes when each block spans enough pixels (too-small evidence is
unreadable, so the agent must crop/zoom/resize first) and when the blocks
sit in the upright arrangement (so rotated or mirrored evidence is
unreadable until fixed). Dark variants at 1/4 intensity model under-exposed
evidence that an exact brightness x4 enhancement restores.

Both block colors use channel values divisible by 4 so the dark variant
round-trips exactly, and exact-match decoding survives crops, flips,
90-degree rotations and solid-interior resampling.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

# Every block of a readable marker must span at least this many pixels.
MIN_BLOCK_PIXELS = 900

ORIENT_COLOR = (252, 0, 252)

PAYLOAD_PALETTE: dict[str, tuple[int, int, int]] = {
    "maple": (252, 84, 0),
    "harbor": (0, 84, 252),
    "zorvex": (0, 252, 84),
    "quartz": (252, 252, 0),
    "falcon": (84, 0, 252),
    "indigo": (0, 252, 252),
    "vexa": (252, 0, 84),
    "lantern": (84, 252, 0),
    "cobalt": (0, 84, 84),
    "ember": (252, 168, 84),
    "prism": (168, 0, 168),
    "tidal": (84, 168, 252),
}

UNREADABLE = "unclear"


def _dark(color: tuple[int, int, int]) -> tuple[int, int, int]:
    return (color[0] // 4, color[1] // 4, color[2] // 4)


def draw_marker(
    img: Image.Image,
    origin: tuple[int, int],
    block: tuple[int, int],
    word: str,
    layout: str = "vertical",
    flipped: bool = False,
    dark: bool = False,
) -> None:
    """Draw a marker at origin with per-block size ``block``.

    vertical: orientation block above the payload block; horizontal:
    orientation block left of the payload block. ``flipped`` swaps the two
    blocks (an upside-down or mirrored marker that will not decode until
    the image is rotated/flipped back).
    """
    if word not in PAYLOAD_PALETTE:
        raise KeyError(f"word {word!r} not in payload palette")
    orient = _dark(ORIENT_COLOR) if dark else ORIENT_COLOR
    payload = _dark(PAYLOAD_PALETTE[word]) if dark else PAYLOAD_PALETTE[word]
    x, y = origin
    w, h = block
    draw = ImageDraw.Draw(img)
    if layout == "vertical":
        first = (x, y, x + w - 1, y + h - 1)
        second = (x, y + h, x + w - 1, y + 2 * h - 1)
    else:
        first = (x, y, x + w - 1, y + h - 1)
        second = (x + w, y, x + 2 * w - 1, y + h - 1)
    a, b = (second, first) if flipped else (first, second)
    draw.rectangle(a, fill=orient)
    draw.rectangle(b, fill=payload)


def _components(mask: np.ndarray) -> list[tuple[int, float, float]]:
    """(area, centroid_y, centroid_x) of mask components above the size gate."""
    from scipy import ndimage

    labels, count = ndimage.label(mask)
    out = []
    for i in range(1, count + 1):
        ys, xs = np.nonzero(labels == i)
        if ys.size >= MIN_BLOCK_PIXELS:
            out.append((int(ys.size), float(ys.mean()), float(xs.mean())))
    return out


def _aligned(orient: tuple[int, float, float], payload: tuple[int, float, float]) -> bool:
    """True when payload sits directly below or directly right of orient."""
    o_area, oy, ox = orient
    p_area, py, px = payload
    span = float(np.sqrt(max(o_area, p_area)))
    below = (py - oy) > 0.4 * span and abs(px - ox) < 0.75 * span
    right = (px - ox) > 0.4 * span and abs(py - oy) < 0.75 * span
    return below or right


def decode_marker(img: Image.Image) -> str | None:
    """Decode the largest readable marker in an image, or None.

    Readable means: both blocks exact palette colors, each at least
    MIN_BLOCK_PIXELS, payload below/right of the orientation block.
    """
    arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    orient_mask = np.all(arr == ORIENT_COLOR, axis=-1)
    if not orient_mask.any():
        return None
    orient_comps = _components(orient_mask)
    if not orient_comps:
        return None

    best: tuple[int, str] | None = None
    for word, color in PAYLOAD_PALETTE.items():
        mask = np.all(arr == color, axis=-1)
        if not mask.any():
            continue
        for comp in _components(mask):
            if any(_aligned(o, comp) for o in orient_comps):
                if best is None or comp[0] > best[0]:
                    best = (comp[0], word)
    return best[1] if best else None


def read_answer(img: Image.Image) -> str:
    """Judge-style read: decoded word, or the explicit unreadable token."""
    return decode_marker(img) or UNREADABLE
