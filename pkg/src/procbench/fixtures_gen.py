"""Synthetic fixture builder: 6 tasks (2 per level) plus supporting data.

Images are generated deterministically (seeded noise, distractor shapes,
drawn text) with machine-decodable evidence markers; each task ships a full
checkpoint list, a human reference trajectory, and a canned search cache
recorded from the offline fixture search corpus.

Generation is self-validating: every task's trajectory is replayed through
the real agent loop against the fixture transport, scored with the mock
judges, and asserted perfect before the fixture set is written out.
"""

from __future__ import annotations

import base64
import io
import json
import shutil
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from . import markers
from .judges import ContainmentTextJudge, PixelProbeJudge
from .loop import run_task
from .models import OracleModel
from .retrieval import ProviderError, SearchCache, SearchRequest
from .fixtures_corpus import corpus_entries
from .scoring import score_task
from .tasks import Task, load_tasks
from .workspace import ImageWorkspace


class FixtureTransport:
    """Offline provider: canned results for the fixture search corpus."""

    def __init__(self, corpus: dict[str, Any]):
        self.corpus = corpus

    def send(self, req: SearchRequest) -> Any:
        if req.tool == "google_search":
            query = req.args.get("query", "")
            results = self.corpus.get("search", {}).get(query)
            return {"query": query, "results": results or []}
        if req.tool == "google_lens_search":
            return {"matches": self.corpus.get("lens", [])}
        if req.tool == "fetch_webpage":
            url = req.args.get("url", "")
            text = self.corpus.get("pages", {}).get(url, "")
            return {"url": url, "text": text}
        if req.tool == "download_image":
            url = req.args.get("url", "")
            data = self.corpus.get("downloads", {}).get(url)
            if data is None:
                raise ProviderError(f"no fixture image at {url}")
            return {"url": url, "content_b64": data, "content_type": "image/png"}
        raise ProviderError(f"unhandled tool {req.tool}")


def _png_b64(img: Image.Image) -> str:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _background(rng: np.random.RandomState, size: tuple[int, int], base: tuple[int, int, int]) -> Image.Image:
    # Coarse block noise: textured but PNG-friendly (committed fixtures stay small).
    w, h = size
    cell = 8
    gw, gh = -(-w // cell), -(-h // cell)
    noise = rng.randint(-18, 19, size=(gh, gw, 3))
    noise = np.kron(noise, np.ones((cell, cell, 1), dtype=np.int16))[:h, :w]
    arr = np.clip(np.array(base, dtype=np.int16) + noise, 0, 255).astype(np.uint8)
    return Image.fromarray(arr, "RGB")


def _decorate(img: Image.Image, rng: np.random.RandomState, texts: list[str]) -> None:
    """Distractor shapes and text; colors stay off the marker palette."""
    draw = ImageDraw.Draw(img)
    w, h = img.size
    for _ in range(6):
        x1, y1 = int(rng.randint(0, w - 40)), int(rng.randint(0, h - 40))
        x2, y2 = x1 + int(rng.randint(20, 120)), y1 + int(rng.randint(20, 120))
        color = (int(rng.randint(60, 200)) | 1, int(rng.randint(60, 200)) | 1, int(rng.randint(60, 200)) | 1)
        if rng.rand() < 0.5:
            draw.rectangle((x1, y1, min(x2, w - 1), min(y2, h - 1)), outline=color, width=2)
        else:
            draw.ellipse((x1, y1, min(x2, w - 1), min(y2, h - 1)), outline=color, width=2)
    font = ImageFont.load_default()
    for i, text in enumerate(texts):
        x = 20 + int(rng.randint(0, max(1, w - 220)))
        y = 12 + (i * 37) % max(1, h - 30)
        draw.text((x, y), text, fill=(201, 201, 201), font=font)


def _norm_box(px_box: tuple[int, int, int, int], size: tuple[int, int]) -> list[int]:
    x1, y1, x2, y2 = px_box
    w, h = size
    return [round(x1 * 1000 / w), round(y1 * 1000 / h), round(x2 * 1000 / w), round(y2 * 1000 / h)]


def _tool_step(order: int, name: str, arguments: dict[str, Any]) -> dict[str, Any]:
    return {"order": order, "action": {"kind": "tool_call", "name": name, "arguments": arguments}, "expected_observation_digest": ""}


def _build_fixture_defs(rng: np.random.RandomState) -> list[dict[str, Any]]:
    defs: list[dict[str, Any]] = []

    # level1_sign: tiny dark marker; crop+zoom then brightness x4.
    size = (1200, 900)
    img = _background(rng, size, (52, 57, 66))
    _decorate(img, rng, ["city transit map", "sector 7", "maintenance notice"])
    markers.draw_marker(img, (760, 320), (20, 20), "maple", dark=True)
    crop_px = (720, 280, 840, 420)
    bbox = _norm_box(crop_px, size)
    gt = img.crop(crop_px)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {"gt_ckpt1.png": gt},
            "task": {
                "task_id": "level1_sign",
                "images": ["images/level1_sign/original_image_0.png"],
                "question": (
                    "A small display board is hidden in the scene and its panel is badly "
                    "under-lit. Zoom into the board and recover the word encoded on it."
                ),
                "format_instruction": "Answer with a single lowercase word.",
                "level": 1,
                "domain": "street_scenes",
                "subdomain": "signage",
                "gold_answer": "maple",
                "accepted_variants": [],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Crop to the small display board region to isolate the panel.",
                        "required_op": {"name": "crop", "args": {"bbox_2d": bbox}},
                        "visual_question": "What word is encoded on the display board?",
                        "expected_visual_answer": "maple",
                        "gt_artifact": "images/level1_sign/gt_ckpt1.png",
                    },
                    {
                        "order": 2,
                        "axis": "V",
                        "description": "Brighten the under-lit crop so the panel becomes readable.",
                        "required_op": {"name": "enhance"},
                        "visual_question": "What word is encoded on the display board?",
                        "expected_visual_answer": "maple",
                        "gt_artifact": None,
                    },
                ],
                "human_calls": 2,
                "human_trajectory": [
                    _tool_step(1, "crop", {"image_index": 0, "bbox_2d": bbox, "zoom_scale": 3.0}),
                    _tool_step(2, "enhance", {"image_index": 1, "brightness": 4.0}),
                ],
            },
            "corpus": {},
        }
    )

    # level1_flyer: marker printed upside down; one 180-degree rotation.
    size = (900, 700)
    img = _background(rng, size, (70, 62, 55))
    _decorate(img, rng, ["community fair", "saturday 10am", "pier entrance"])
    markers.draw_marker(img, (390, 240), (40, 40), "harbor", layout="vertical", flipped=True)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {},
            "task": {
                "task_id": "level1_flyer",
                "images": ["images/level1_flyer/original_image_0.png"],
                "question": "The flyer was photographed upside down. Fix its orientation and read the marked word.",
                "format_instruction": "Answer with a single lowercase word.",
                "level": 1,
                "domain": "documents",
                "subdomain": "flyers",
                "gold_answer": "harbor",
                "accepted_variants": [],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Rotate the flyer 180 degrees so the printed marker reads upright.",
                        "required_op": {"name": "rotate"},
                        "visual_question": "What word is marked on the flyer?",
                        "expected_visual_answer": "harbor",
                        "gt_artifact": None,
                    }
                ],
                "human_calls": 1,
                "human_trajectory": [_tool_step(1, "rotate", {"image_index": 0, "angle": 180, "expand": True})],
            },
            "corpus": {},
        }
    )

    # level2_price: crop reveals a brand word, then one web search for a fact.
    size = (1400, 1000)
    img = _background(rng, size, (44, 66, 58))
    _decorate(img, rng, ["clearance aisle", "weekly deals", "sku 4417-armature"])
    markers.draw_marker(img, (980, 620), (18, 18), "zorvex")
    crop_px = (940, 580, 1060, 700)
    bbox = _norm_box(crop_px, size)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {},
            "task": {
                "task_id": "level2_price",
                "images": ["images/level2_price/original_image_0.png"],
                "question": (
                    "A brand word is printed in miniature on the shelf price tag. Identify the brand, "
                    "then find the year the original product under that brand was released."
                ),
                "format_instruction": "Answer with a 4-digit year.",
                "level": 2,
                "domain": "retail",
                "subdomain": "products",
                "gold_answer": "2013",
                "accepted_variants": [],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Crop and magnify the price tag so the brand word is legible.",
                        "required_op": {"name": "crop", "args": {"bbox_2d": bbox}},
                        "visual_question": "What brand word is printed on the price tag?",
                        "expected_visual_answer": "zorvex",
                        "gt_artifact": None,
                    },
                    {
                        "order": 2,
                        "axis": "S",
                        "description": "Search for the release year of the original zorvex product.",
                        "keywords": ["zorvex", "release year"],
                        "reference_urls": ["https://example.org/zorvex-history"],
                        "expected_answer": "2013",
                    },
                ],
                "human_calls": 2,
                "human_trajectory": [
                    _tool_step(1, "crop", {"image_index": 0, "bbox_2d": bbox, "zoom_scale": 4.0}),
                    _tool_step(2, "google_search", {"query": "zorvex original product release year"}),
                ],
            },
            "corpus": {
                "search": {
                    "zorvex original product release year": [
                        {
                            "title": "Zorvex product history",
                            "link": "https://example.org/zorvex-history",
                            "snippet": "The original Zorvex device was released in 2013 and discontinued in 2019.",
                        },
                        {
                            "title": "Zorvex fan wiki",
                            "link": "https://example.org/zorvex-wiki",
                            "snippet": "Zorvex is a fictional electronics brand used in test corpora.",
                        },
                    ]
                }
            },
        }
    )

    # level2_poster: whole-frame brightness restore, then a page fetch.
    size = (1000, 800)
    img = _background(rng, size, (16, 14, 18))
    _decorate(img, rng, ["night exhibition", "hall b"])
    markers.draw_marker(img, (430, 300), (48, 48), "quartz", dark=True)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {},
            "task": {
                "task_id": "level2_poster",
                "images": ["images/level2_poster/original_image_0.png"],
                "question": (
                    "The poster photo is heavily under-exposed. Restore it, read the marked mural name, "
                    "and report the year that mural was unveiled according to the city archive page."
                ),
                "format_instruction": "Answer with a 4-digit year.",
                "level": 2,
                "domain": "culture",
                "subdomain": "murals",
                "gold_answer": "1998",
                "accepted_variants": [],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Brighten the under-exposed poster so the mural name is readable.",
                        "required_op": {"name": "enhance"},
                        "visual_question": "What mural name is marked on the poster?",
                        "expected_visual_answer": "quartz",
                        "gt_artifact": None,
                    },
                    {
                        "order": 2,
                        "axis": "S",
                        "description": "Fetch the city archive page and find the unveiling year of the quartz mural.",
                        "keywords": ["quartz", "mural", "unveiled"],
                        "reference_urls": ["https://example.org/quartz-archive"],
                        "expected_answer": "1998",
                    },
                ],
                "human_calls": 2,
                "human_trajectory": [
                    _tool_step(1, "enhance", {"image_index": 0, "brightness": 4.0}),
                    _tool_step(2, "fetch_webpage", {"url": "https://example.org/quartz-archive"}),
                ],
            },
            "corpus": {
                "pages": {
                    "https://example.org/quartz-archive": (
                        "City archive: public murals.\n"
                        "The quartz mural was unveiled in 1998 on the east facade of the old depot. "
                        "It was restored in 2011 after storm damage."
                    )
                }
            },
        }
    )

    # level3_logo: exact crop -> lens -> multi-hop search -> zoomed crop.
    size = (1600, 1200)
    img = _background(rng, size, (58, 48, 46))
    _decorate(img, rng, ["roadside stand", "cold drinks", "est. long ago"])
    markers.draw_marker(img, (1000, 700), (22, 22), "vexa")
    wide_px = (900, 600, 1200, 900)
    tight_px = (970, 670, 1080, 790)
    wide_bbox = _norm_box(wide_px, size)
    tight_bbox = _norm_box(tight_px, size)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {},
            "task": {
                "task_id": "level3_logo",
                "images": ["images/level3_logo/original_image_0.png"],
                "question": (
                    "A faded soda logo appears on the stand. Isolate it, identify the brand with a reverse "
                    "image search, and report the year that brand was founded."
                ),
                "format_instruction": "Answer with a 4-digit year.",
                "level": 3,
                "domain": "street_scenes",
                "subdomain": "brands",
                "gold_answer": "1987",
                "accepted_variants": [],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Crop the stand region containing the faded logo for reverse image search.",
                        "required_op": {"name": "crop", "args": {"bbox_2d": wide_bbox}},
                        "visual_question": "What brand word is encoded on the stand?",
                        "expected_visual_answer": "vexa",
                        "gt_artifact": None,
                    },
                    {
                        "order": 2,
                        "axis": "S",
                        "description": "Identify the brand via reverse image search and retrieve its founding year.",
                        "keywords": ["vexa", "founded"],
                        "reference_urls": ["https://example.org/vexa-cola"],
                        "expected_answer": "1987",
                    },
                    {
                        "order": 3,
                        "axis": "V",
                        "description": "Zoom into the logo itself to cross-validate the identified brand.",
                        "required_op": {"name": "crop", "args": {"bbox_2d": tight_bbox}},
                        "visual_question": "What brand word is encoded on the stand?",
                        "expected_visual_answer": "vexa",
                        "gt_artifact": None,
                    },
                ],
                "human_calls": 4,
                "human_trajectory": [
                    _tool_step(1, "crop", {"image_index": 0, "bbox_2d": wide_bbox, "zoom_scale": 1.0}),
                    _tool_step(2, "google_lens_search", {"image_path": "transformed_image_1.png"}),
                    _tool_step(3, "google_search", {"query": "vexa cola founding year"}),
                    _tool_step(4, "crop", {"image_index": 0, "bbox_2d": tight_bbox, "zoom_scale": 4.0}),
                ],
            },
            "corpus": {
                "lens": [
                    {
                        "title": "Vexa Cola vintage sign",
                        "link": "https://example.org/vexa-cola",
                        "snippet": "Enamel advertising sign of the Vexa Cola soda brand.",
                    }
                ],
                "search": {
                    "vexa cola founding year": [
                        {
                            "title": "Vexa Cola - company history",
                            "link": "https://example.org/vexa-cola",
                            "snippet": "Vexa Cola was founded in 1987 in Porto Verde and sold regionally until 2004.",
                        }
                    ]
                },
            },
        }
    )

    # level3_mural: mirrored photo -> flip -> closeup crop -> search for the artist.
    size = (1300, 950)
    img = _background(rng, size, (40, 52, 64))
    _decorate(img, rng, ["east wall", "harbor district"])
    markers.draw_marker(img, (520, 400), (40, 40), "lantern", layout="horizontal", flipped=True)
    marker_px = (520, 400, 600, 440)
    flipped_px = (size[0] - marker_px[2], marker_px[1], size[0] - marker_px[0], marker_px[3])
    crop_px = (flipped_px[0] - 40, flipped_px[1] - 40, flipped_px[2] + 40, flipped_px[3] + 40)
    crop_bbox = _norm_box(crop_px, size)
    defs.append(
        {
            "image": img,
            "gt_artifacts": {},
            "task": {
                "task_id": "level3_mural",
                "images": ["images/level3_mural/original_image_0.png"],
                "question": (
                    "This mural photo is mirrored. Restore it, read the mural's marked name up close, "
                    "and find the artist who painted that mural."
                ),
                "format_instruction": "Answer with the artist's full name.",
                "level": 3,
                "domain": "culture",
                "subdomain": "murals",
                "gold_answer": "Mira Voss",
                "accepted_variants": ["voss"],
                "checkpoints": [
                    {
                        "order": 1,
                        "axis": "V",
                        "description": "Mirror the photo back so the mural name reads correctly.",
                        "required_op": {"name": "flip"},
                        "visual_question": "What name is marked on the mural?",
                        "expected_visual_answer": "lantern",
                        "gt_artifact": None,
                    },
                    {
                        "order": 2,
                        "axis": "V",
                        "description": "Crop the restored photo around the mural name for a legible closeup.",
                        "required_op": {"name": "crop", "args": {"bbox_2d": crop_bbox}},
                        "visual_question": "What name is marked on the mural?",
                        "expected_visual_answer": "lantern",
                        "gt_artifact": None,
                    },
                    {
                        "order": 3,
                        "axis": "S",
                        "description": "Search for the artist of the lantern mural.",
                        "keywords": ["lantern", "mural", "artist"],
                        "reference_urls": ["https://example.org/lantern-mural"],
                        "expected_answer": "Mira Voss",
                    },
                ],
                "human_calls": 3,
                "human_trajectory": [
                    _tool_step(1, "flip", {"image_index": 0, "direction": "horizontal"}),
                    _tool_step(2, "crop", {"image_index": 1, "bbox_2d": crop_bbox, "zoom_scale": 2.0}),
                    _tool_step(3, "google_search", {"query": "lantern mural harbor district artist"}),
                ],
            },
            "corpus": {
                "search": {
                    "lantern mural harbor district artist": [
                        {
                            "title": "Harbor district public art register",
                            "link": "https://example.org/lantern-mural",
                            "snippet": "The lantern mural on the east wall was painted by Mira Voss in 2006.",
                        }
                    ]
                }
            },
        }
    )

    return defs


LOOP_CROP_SCRIPT = {
    "turns": [
        {
            "tool_call": {
                "name": "crop",
                "arguments": {"image_index": 0, "bbox_2d": [100, 100, 500, 500], "zoom_scale": 1.0},
            }
        }
    ],
    "repeat_last": True,
}


def _validate_oracle(task: Task, fixtures_dir: Path, corpus: dict[str, Any]) -> list[dict[str, str]]:
    """Replay the trajectory through the real loop; assert a perfect score.

    Returns answer-book entries derived from the produced artifacts.
    """
    transport = FixtureTransport(corpus)
    with tempfile.TemporaryDirectory() as tmp:
        trace = run_task(
            task,
            mode="atm",
            model=OracleModel(task),
            run_dir=tmp,
            retrieval_mode="record",
            cache_dir=fixtures_dir / "search_cache",
            transport=transport,
        )
        if trace.termination != "answered" or trace.final_answer != task.gold_answer:
            raise AssertionError(f"{task.task_id}: oracle replay failed ({trace.termination})")
        ws = ImageWorkspace.load(Path(tmp) / task.task_id)
        artifacts = [(e.index, str(ws.path_of(e.index))) for e in ws.produced_entries()]
        cache = SearchCache(fixtures_dir / "search_cache", task.task_id)
        report = score_task(task, trace, artifacts, ContainmentTextJudge(), PixelProbeJudge(), cache=cache)
        problems = []
        if report.acc != 1:
            problems.append("acc")
        for metric in ("s", "v_tool", "v_true", "v"):
            value = getattr(report, metric)
            if value is not None and value != 1:
                problems.append(metric)
        if report.overthink != 0:
            problems.append("overthink")
        if problems:
            raise AssertionError(f"{task.task_id}: oracle score imperfect: {problems}\n{report.to_dict()}")

        probe = PixelProbeJudge()
        book: list[dict[str, str]] = []
        seen_questions = {c.visual_question for c in task.v_checkpoints}
        for question in sorted(seen_questions):
            for _index, path in artifacts:
                answer = probe.answer(path, question)
                if answer != "unclear":
                    book.append({"question": question, "artifact": Path(path).name, "answer": answer})
        return book


def generate_fixtures(output_dir: str | Path, seed: int = 7) -> Path:
    """Build the committed fixture set under output_dir (replacing it)."""
    out = Path(output_dir)
    if out.exists():
        shutil.rmtree(out)
    (out / "images").mkdir(parents=True)
    (out / "search_cache").mkdir()
    (out / "corpus").mkdir()
    (out / "scripts").mkdir()
    (out / "judges").mkdir()

    rng = np.random.RandomState(seed)
    defs = _build_fixture_defs(rng)

    index = []
    for d in defs:
        task_id = d["task"]["task_id"]
        img_dir = out / "images" / task_id
        img_dir.mkdir(parents=True)
        d["image"].save(img_dir / "original_image_0.png", format="PNG")
        for name, gt in d["gt_artifacts"].items():
            gt.save(img_dir / name, format="PNG")
        task_file = f"{task_id}.json"
        with open(out / task_file, "w", encoding="utf-8") as f:
            json.dump(d["task"], f, indent=1, sort_keys=True)
        index.append(task_file)
    with open(out / "index.json", "w", encoding="utf-8") as f:
        json.dump(index, f, indent=1)

    # Oracle replay + perfect-score validation per task; record search caches.
    tasks = load_tasks(out)
    book: list[dict[str, str]] = []
    for task, d in zip(tasks, defs):
        book.extend(_validate_oracle(task, out, d["corpus"]))
    with open(out / "judges" / "visual_answers.json", "w", encoding="utf-8") as f:
        json.dump(book, f, indent=1, sort_keys=True)

    for entry in corpus_entries():
        (out / "corpus" / f"{entry['name']}.py").write_text(entry["source"], encoding="utf-8")
        expected = {
            "constant_args": entry["constant_args"],
            "static_ops": entry["static_ops"],
            "runtime_log": entry["runtime_log"],
        }
        with open(out / "corpus" / f"{entry['name']}.json", "w", encoding="utf-8") as f:
            json.dump(expected, f, indent=1, sort_keys=True)

    with open(out / "scripts" / "loop_crop.json", "w", encoding="utf-8") as f:
        json.dump(LOOP_CROP_SCRIPT, f, indent=1)

    return out


def fixture_corpus_image() -> Image.Image:
    """Original image used when executing tracer-corpus snippets (100x80)."""
    rng = np.random.RandomState(11)
    return _background(rng, (100, 80), (90, 110, 130))
