from fractions import Fraction

import pytest
from PIL import Image

from procbench import markers
from procbench.judges import AnswerBookJudge, ContainmentTextJudge, PixelProbeJudge
from procbench.loop import Trace, TraceEvent, read_trace
from procbench.retrieval import SearchCache, SearchPayload
from procbench.scoring import (
    ScoringConfig,
    aggregate,
    compute_overthink,
    match_s_checkpoint,
    match_v_tool,
    match_v_true,
    pass_fraction,
    render_summary_table,
    score_task,
)
from procbench.tasks import Checkpoint
from procbench.tracer import IdiomTable

from test_loop import _task


def _event(event_id, name, arguments, artifacts=(), keys=()):
    return TraceEvent(
        turn=1,
        event_id=event_id,
        kind="tool_call",
        payload={"name": name, "arguments": arguments},
        artifacts=list(artifacts),
        payload_keys=list(keys),
    )


def _v_ckpt(order, name, bbox=None, question="q?", answer="maple"):
    required = {"name": name}
    if bbox:
        required["args"] = {"bbox_2d": bbox}
    return Checkpoint(
        order=order,
        axis="V",
        description="",
        required_op=required,
        visual_question=question,
        expected_visual_answer=answer,
    )


def test_overthink_clamp_boundary():
    assert compute_overthink(2, 2) == Fraction(0)


def test_overthink_formula():
    assert compute_overthink(5, 2) == Fraction(1)


def test_overthink_underuse_not_rewarded():
    assert compute_overthink(1, 3) == Fraction(0)


def test_overthink_zero_human_calls():
    assert compute_overthink(3, 0) == Fraction(3, 1)


def test_pass_fraction_absent_axis():
    assert pass_fraction(0, 0) is None
    assert pass_fraction(3, 4) == Fraction(3, 4)


@pytest.fixture(scope="module")
def table():
    return IdiomTable.default()


def test_v_tool_name_match(table):
    trace = Trace("t", "atm", events=[_event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]}, artifacts=[1])])
    ok, event_id, _ = match_v_tool(_v_ckpt(1, "crop"), trace, 0, table, None, ScoringConfig())
    assert ok and event_id == "e1"


def test_v_tool_absence(table):
    trace = Trace("t", "atm", events=[_event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]})])
    ok, _, _ = match_v_tool(_v_ckpt(1, "rotate"), trace, 0, table, None, ScoringConfig())
    assert not ok


def test_v_tool_ordered_greedy_consumes_events(table):
    trace = Trace(
        "t",
        "atm",
        events=[
            _event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]}),
            _event("e2", "rotate", {"angle": 90}),
        ],
    )
    cfg = ScoringConfig()
    ok1, id1, cursor = match_v_tool(_v_ckpt(1, "rotate"), trace, 0, table, None, cfg)
    assert ok1 and id1 == "e2"
    # next checkpoint may only match after e2; no crop remains
    ok2, _, _ = match_v_tool(_v_ckpt(2, "crop"), trace, cursor, table, None, cfg)
    assert not ok2
    # unordered switch rescans from the start
    ok3, id3, _ = match_v_tool(_v_ckpt(2, "crop"), trace, cursor, table, None, ScoringConfig(ordered_checkpoints=False))
    assert ok3 and id3 == "e1"


def test_v_tool_bbox_iou_gate(table):
    cfg = ScoringConfig()
    trace = Trace("t", "atm", events=[_event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]})])
    ok, _, _ = match_v_tool(_v_ckpt(1, "crop", bbox=[600, 600, 900, 900]), trace, 0, table, None, cfg)
    assert not ok
    ok, _, _ = match_v_tool(_v_ckpt(1, "crop", bbox=[0, 0, 110, 110]), trace, 0, table, None, cfg)
    assert ok
    # later matching event still found after a failing one
    trace2 = Trace(
        "t",
        "atm",
        events=[
            _event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]}),
            _event("e2", "crop", {"bbox_2d": [600, 600, 900, 900]}),
        ],
    )
    ok, event_id, _ = match_v_tool(_v_ckpt(1, "crop", bbox=[600, 600, 900, 900]), trace2, 0, table, None, cfg)
    assert ok and event_id == "e2"


def test_v_tool_failed_event_never_matches(table):
    event = _event("e1", "crop", {"bbox_2d": [0, 0, 100, 100]})
    event.error = "bad args"
    trace = Trace("t", "atm", events=[event])
    ok, _, _ = match_v_tool(_v_ckpt(1, "crop"), trace, 0, table, None, ScoringConfig())
    assert not ok


def test_v_tool_gen_mode_via_tracer(table):
    source = "img2 = img.crop((100, 100, 300, 300))\n"
    event = TraceEvent(turn=1, event_id="e1", kind="code_block", payload={"source": source}, artifacts=[1])
    trace = Trace("t", "gen", events=[event])
    # pixel box (100,100,300,300) on a 1000x1000 image -> same normalized coords
    ok, event_id, _ = match_v_tool(
        _v_ckpt(1, "crop", bbox=[100, 100, 300, 300]), trace, 0, table, (1000, 1000), ScoringConfig()
    )
    assert ok and event_id == "e1"


def test_v_tool_gen_dynamic_accepted(table):
    source = "for i in range(3):\n    img.crop((i, i, i + 10, i + 10))\n"
    event = TraceEvent(turn=1, event_id="e1", kind="code_block", payload={"source": source})
    trace = Trace("t", "gen", events=[event])
    ok, _, _ = match_v_tool(_v_ckpt(1, "crop", bbox=[0, 0, 500, 500]), trace, 0, table, (1000, 1000), ScoringConfig())
    assert ok


def _marker_artifact(tmp_path, name, word):
    img = Image.new("RGB", (300, 300), (20, 20, 20))
    markers.draw_marker(img, (100, 100), (40, 40), word)
    path = tmp_path / name
    img.save(path)
    return str(path)


def _blank_artifact(tmp_path, name):
    path = tmp_path / name
    Image.new("RGB", (300, 300), (20, 20, 20)).save(path)
    return str(path)


def test_v_true_any_pass(tmp_path):
    ckpt = _v_ckpt(1, "crop", answer="maple")
    artifacts = [
        (1, _blank_artifact(tmp_path, "transformed_image_1.png")),
        (2, _marker_artifact(tmp_path, "transformed_image_2.png", "maple")),
        (3, _blank_artifact(tmp_path, "transformed_image_3.png")),
    ]
    passed, matched, judged, _ = match_v_true(ckpt, artifacts, PixelProbeJudge(), ScoringConfig())
    assert passed and matched == "transformed_image_2.png"

    without = [a for a in artifacts if a[0] != 2]
    passed, matched, _, _ = match_v_true(ckpt, without, PixelProbeJudge(), ScoringConfig())
    assert not passed and matched is None


def test_v_true_zero_artifacts_fails():
    passed, _, judged, note = match_v_true(_v_ckpt(1, "crop"), [], PixelProbeJudge(), ScoringConfig())
    assert not passed and judged == []


def test_v_true_normalized_comparison(tmp_path):
    ckpt = _v_ckpt(1, "crop", answer="  MAPLE  ")
    artifacts = [(1, _marker_artifact(tmp_path, "transformed_image_1.png", "maple"))]
    passed, _, _, _ = match_v_true(ckpt, artifacts, PixelProbeJudge(), ScoringConfig())
    assert passed


def test_v_true_judge_failure_is_fail_not_crash(tmp_path):
    class BrokenJudge:
        def answer(self, image_path, question):
            raise RuntimeError("judge endpoint down")

    artifacts = [(1, _blank_artifact(tmp_path, "transformed_image_1.png"))]
    passed, _, _, note = match_v_true(_v_ckpt(1, "crop"), artifacts, BrokenJudge(), ScoringConfig())
    assert not passed
    assert "judge error" in note


def test_v_true_cap_most_recent_first(tmp_path):
    artifacts = [(i, _blank_artifact(tmp_path, f"transformed_image_{i}.png")) for i in range(1, 6)]
    cfg = ScoringConfig(judge_artifact_cap=2)
    _, _, judged, _ = match_v_true(_v_ckpt(1, "crop"), artifacts, PixelProbeJudge(), cfg)
    assert judged == ["transformed_image_5.png", "transformed_image_4.png"]


def _s_ckpt(expected="1987"):
    return Checkpoint(order=1, axis="S", description="find it", keywords=("vexa",), expected_answer=expected)


def test_s_checkpoint_no_search_fails():
    trace = Trace("t", "atm", events=[])
    verdict = match_s_checkpoint(_s_ckpt(), trace, ContainmentTextJudge(), None)
    assert not verdict.passed
    assert verdict.reasoning == "no retrieval performed"


def test_s_checkpoint_pass_and_fail_via_cache(tmp_path):
    cache = SearchCache(tmp_path, "t")
    cache.put(
        SearchPayload(
            "k1", "ok", {"results": [{"title": "Vexa", "link": "https://v", "snippet": "founded in 1987"}]}
        )
    )
    event = _event("e1", "google_search", {"query": "vexa"}, keys=["k1"])
    trace = Trace("t", "atm", events=[event])
    assert match_s_checkpoint(_s_ckpt("1987"), trace, ContainmentTextJudge(), cache).passed
    assert not match_s_checkpoint(_s_ckpt("2050"), trace, ContainmentTextJudge(), cache).passed


def test_s_checkpoint_judge_failure_is_fail(tmp_path):
    class BrokenJudge:
        def complete(self, prompt):
            raise RuntimeError("offline")

    event = _event("e1", "google_search", {"query": "vexa"}, keys=["k1"])
    trace = Trace("t", "atm", events=[event])
    verdict = match_s_checkpoint(_s_ckpt(), trace, BrokenJudge(), SearchCache(tmp_path, "t"))
    assert not verdict.passed and "judge error" in verdict.reasoning


def test_score_task_missing_answer_is_zero_acc(tmp_path):
    task = _task(tmp_path)
    trace = Trace("t1", "atm", events=[], final_answer=None, termination="budget_exhausted")
    report = score_task(task, trace, [], ContainmentTextJudge(), PixelProbeJudge())
    assert report.acc == 0
    assert report.s is None and report.v is None
    assert report.overthink == Fraction(0)


def test_score_task_accepts_variants(tmp_path):
    task = _task(tmp_path)
    trace = Trace("t1", "atm", events=[], final_answer="  WIDGET. ", termination="answered")
    report = score_task(task, trace, [], ContainmentTextJudge(), PixelProbeJudge())
    assert report.acc == 1


def test_score_deterministic(tmp_path):
    task = _task(tmp_path)
    trace = Trace("t1", "atm", events=[_event("e1", "invert", {"image_index": 0}, artifacts=[1])], final_answer="widget")
    a = score_task(task, trace, [], ContainmentTextJudge(), PixelProbeJudge()).to_dict()
    b = score_task(task, trace, [], ContainmentTextJudge(), PixelProbeJudge()).to_dict()
    assert a == b


def test_judge_swap_stability(fixtures_dir, fixture_tasks, oracle_run_dir):
    """Two mock judges that agree on answers yield identical score reports."""
    from procbench.workspace import ImageWorkspace

    book_judge = AnswerBookJudge(fixtures_dir / "judges" / "visual_answers.json")
    for task in fixture_tasks:
        trace = read_trace(oracle_run_dir, task.task_id)
        ws = ImageWorkspace.load(oracle_run_dir / task.task_id)
        artifacts = [(e.index, str(ws.path_of(e.index))) for e in ws.produced_entries()]
        cache = SearchCache(fixtures_dir / "search_cache", task.task_id)
        a = score_task(task, trace, artifacts, ContainmentTextJudge(), PixelProbeJudge(), cache=cache)
        b = score_task(task, trace, artifacts, ContainmentTextJudge(), book_judge, cache=cache)
        assert a.to_dict() == b.to_dict()


def test_aggregate_means_and_strata(tmp_path):
    t1 = _task(tmp_path, task_id="a")
    t2 = _task(tmp_path, task_id="b")
    trace_good = Trace("a", "atm", events=[], final_answer="widget")
    trace_bad = Trace("b", "atm", events=[], final_answer="wrong")
    r1 = score_task(t1, trace_good, [], ContainmentTextJudge(), PixelProbeJudge())
    r2 = score_task(t2, trace_bad, [], ContainmentTextJudge(), PixelProbeJudge())
    summary = aggregate([r1, r2], [t1, t2])
    assert summary["overall"]["acc"] == 0.5
    assert summary["overall"]["s"] is None  # no S axis anywhere -> excluded, not zero
    assert list(summary["by_level"].keys()) == ["1"]  # level 2/3 rows absent
    table = render_summary_table(summary)
    assert "Level 1" in table and "Level 2" not in table


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate([], [])
