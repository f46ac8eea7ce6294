import json

import pytest

from procbench.tasks import TaskSchemaError, load_task_file, load_tasks, serialize_task


def test_fixture_level1_sign(fixtures_dir):
    tasks = load_tasks(fixtures_dir / "level1_sign.json")
    assert len(tasks) == 1
    task = tasks[0]
    assert task.level == 1
    assert len(task.checkpoints) == 2


def test_empty_directory(tmp_path):
    assert load_tasks(tmp_path) == []


def _minimal_task(tmp_path, **overrides):
    from PIL import Image

    img = tmp_path / "img.png"
    Image.new("RGB", (10, 10)).save(img)
    base = {
        "task_id": "t1",
        "images": ["img.png"],
        "question": "q",
        "format_instruction": "",
        "level": 1,
        "domain": "d",
        "subdomain": "s",
        "gold_answer": "a",
        "accepted_variants": [],
        "checkpoints": [],
        "human_calls": 0,
        "human_trajectory": [],
    }
    base.update(overrides)
    return base


def _write(tmp_path, data, name="t1.json"):
    path = tmp_path / name
    with open(path, "w") as f:
        json.dump(data, f)
    return path


def test_level_out_of_range_rejected(tmp_path):
    path = _write(tmp_path, _minimal_task(tmp_path, level=4))
    with pytest.raises(TaskSchemaError, match="t1.*level"):
        load_task_file(path)


def test_missing_image_rejected(tmp_path):
    path = _write(tmp_path, _minimal_task(tmp_path, images=["nope.png"]))
    with pytest.raises(TaskSchemaError, match="image file not found"):
        load_task_file(path)


def test_empty_gold_answer_rejected(tmp_path):
    path = _write(tmp_path, _minimal_task(tmp_path, gold_answer="  "))
    with pytest.raises(TaskSchemaError, match="gold_answer"):
        load_task_file(path)


def test_duplicate_task_id_rejected(tmp_path):
    _write(tmp_path, _minimal_task(tmp_path), "a.json")
    _write(tmp_path, _minimal_task(tmp_path), "b.json")
    with pytest.raises(TaskSchemaError, match="duplicate task_id"):
        load_tasks(tmp_path)


def test_checkpoint_order_must_increase(tmp_path):
    ckpts = [
        {"order": 2, "axis": "S", "description": "", "expected_answer": "x"},
        {"order": 1, "axis": "S", "description": "", "expected_answer": "y"},
    ]
    path = _write(tmp_path, _minimal_task(tmp_path, checkpoints=ckpts))
    with pytest.raises(TaskSchemaError, match="strictly increasing"):
        load_task_file(path)


def test_v_checkpoint_requires_op_and_question(tmp_path):
    ckpts = [{"order": 1, "axis": "V", "description": "", "visual_question": "q?"}]
    path = _write(tmp_path, _minimal_task(tmp_path, checkpoints=ckpts, human_calls=1))
    with pytest.raises(TaskSchemaError, match="required_op"):
        load_task_file(path)


def test_s_checkpoint_requires_evidence(tmp_path):
    ckpts = [{"order": 1, "axis": "S", "description": ""}]
    path = _write(tmp_path, _minimal_task(tmp_path, checkpoints=ckpts))
    with pytest.raises(TaskSchemaError, match="expected_answer or keywords"):
        load_task_file(path)


def test_human_calls_lower_bound(tmp_path):
    ckpts = [
        {
            "order": 1,
            "axis": "V",
            "description": "",
            "required_op": {"name": "crop"},
            "visual_question": "q?",
            "expected_visual_answer": "a",
        }
    ]
    path = _write(tmp_path, _minimal_task(tmp_path, checkpoints=ckpts, human_calls=0))
    with pytest.raises(TaskSchemaError, match="human_calls"):
        load_task_file(path)


def test_index_json_selects_split(tmp_path):
    _write(tmp_path, _minimal_task(tmp_path), "a.json")
    _write(tmp_path, _minimal_task(tmp_path, task_id="t2"), "b.json")
    with open(tmp_path / "index.json", "w") as f:
        json.dump(["b.json"], f)
    tasks = load_tasks(tmp_path)
    assert [t.task_id for t in tasks] == ["t2"]


def test_serialize_round_trip(fixtures_dir, fixture_tasks, tmp_path):
    for task in fixture_tasks:
        data = serialize_task(task, fixtures_dir)
        path = _write(tmp_path / ".." / tmp_path.name, data, f"{task.task_id}.json")
        # re-point image paths at the fixture dir for reload
        data["images"] = [str(fixtures_dir / rel) for rel in data["images"]]
        with open(path, "w") as f:
            json.dump(data, f)
        again = load_task_file(path)
        assert again.task_id == task.task_id
        assert again.checkpoints == task.checkpoints
        assert again.human_trajectory == task.human_trajectory
        assert again.gold_answer == task.gold_answer
