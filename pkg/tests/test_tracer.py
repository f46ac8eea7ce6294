import json

import pytest

from procbench.tracer import ExtractedOp, IdiomTable, IdiomTableError, extract_ops, normalize_extracted
from procbench.ops import CanonicalOp


def _ops(source):
    return extract_ops(source)


def test_constant_propagated_crop():
    result = _ops("box=(10,20,110,220)\nimg2=img.crop(box)\nimg2.save(p)\n")
    assert not result.parse_error
    assert len(result.ops) == 1
    op = result.ops[0]
    assert op.op.name == "crop"
    assert op.op.args["bbox"] == [10, 20, 110, 220]
    assert op.confidence == "static"
    assert op.pixel_args


def test_pure_print_extracts_nothing():
    result = _ops("print('no images here')\n")
    assert result.ops == [] and not result.parse_error


def test_loop_crop_is_single_dynamic():
    result = _ops("for i in range(5):\n    img.crop((i, 0, i + 10, 10))\n")
    assert [(o.op.name, o.confidence) for o in result.ops] == [("crop", "dynamic")]


def test_parse_failure_marks_block_tool_absent():
    result = _ops("def broken(:\n")
    assert result.parse_error and result.ops == []


def test_rebound_name_is_dynamic():
    result = _ops("b=(0,0,10,10)\nb=(1,1,11,11)\nimg.crop(b)\n")
    assert [o.confidence for o in result.ops] == ["dynamic"]
    assert result.ops[0].op.name == "crop"


def test_import_alias_resolution():
    result = _ops("import numpy as xp\nout = xp.fliplr(arr)\n")
    assert [(o.op.name, o.op.args.get("direction")) for o in result.ops] == [("flip", "horizontal")]


def test_unknown_calls_ignored():
    result = _ops("text = '  x '.strip()\nresult = sorted([3, 1])\n")
    assert result.ops == []


def test_extraction_is_pure():
    src = "img.rotate(90, expand=True)\n"
    a, b = extract_ops(src), extract_ops(src)
    assert [o.op.to_dict() for o in a.ops] == [o.op.to_dict() for o in b.ops]


def test_normalize_unit_scale_identity():
    ex = ExtractedOp(CanonicalOp("crop", {"bbox": [10, 20, 110, 220]}), "static", (1, 0, 1, 10), pixel_args=True)
    out = normalize_extracted(ex, (1000, 1000))
    assert out.args["bbox_2d"] == [10, 20, 110, 220]
    assert "bbox" not in out.args


def test_normalize_inverse_of_denormalization():
    ex = ExtractedOp(CanonicalOp("crop", {"bbox": [500, 250, 1500, 750]}), "static", (1, 0, 1, 10), pixel_args=True)
    out = normalize_extracted(ex, (2000, 1000))
    assert out.args["bbox_2d"] == [250, 250, 750, 750]


def test_normalize_nonspatial_passthrough():
    ex = ExtractedOp(CanonicalOp("rotate", {"angle": 90}), "static", (1, 0, 1, 10), pixel_args=False)
    assert normalize_extracted(ex, (640, 480)).args == {"angle": 90}


def test_normalize_unknown_dims_keeps_pixels():
    ex = ExtractedOp(CanonicalOp("crop", {"bbox": [1, 2, 3, 4]}), "static", (1, 0, 1, 10), pixel_args=True)
    out = normalize_extracted(ex, None)
    assert out.args.get("bbox") == [1, 2, 3, 4]


def test_ambiguous_table_rejected():
    entries = [
        {"kind": "function", "qual": "cv2.Canny", "canonical": "edge_detect"},
        {"kind": "function", "qual": "cv2.Canny", "canonical": "edge_detect"},
    ]
    with pytest.raises(IdiomTableError, match="ambiguous"):
        IdiomTable(entries)


def _multiset(names):
    out = {}
    for n in names:
        out[n] = out.get(n, 0) + 1
    return out


def test_corpus_static_extraction_matches_frozen(fixtures_dir):
    """Tracer output equals the hand-derived expectations, args included."""
    corpus = sorted((fixtures_dir / "corpus").glob("*.json"))
    assert len(corpus) >= 50
    for expected_path in corpus:
        source = expected_path.with_suffix(".py").read_text()
        expected = json.loads(expected_path.read_text())
        result = extract_ops(source)
        assert not result.parse_error, expected_path.name
        got = sorted(
            (json.dumps({"n": o.op.name, "a": o.op.args, "c": o.confidence, "p": o.pixel_args}, sort_keys=True))
            for o in result.ops
        )
        want = sorted(
            json.dumps(
                {"n": e["name"], "a": e["args"], "c": e["confidence"], "p": e["pixel_args"]}, sort_keys=True
            )
            for e in expected["static_ops"]
        )
        assert got == want, f"{expected_path.name}:\n got {got}\nwant {want}"
