import pytest
from PIL import Image

from procbench.sandbox import SandboxConfig, SandboxSession
from procbench.workspace import ImageWorkspace

COMPLIANT = """
import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img2 = img.crop((10, 10, 60, 60))
img2.save(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png"))
print("saved", img2.size)
"""

STRAY = """
from PIL import Image
Image.new("RGB", (30, 30), (1, 2, 3)).save("out.png")
print("done")
"""


@pytest.fixture()
def session(tmp_path, sample_image):
    ws = ImageWorkspace("t1", tmp_path / "ws")
    ws.add_original(sample_image)
    return SandboxSession(ws, tmp_path / "scratch", SandboxConfig(timeout_s=30, use_guest_shim=False))


def test_protocol_compliant_save(session):
    result = session.execute_code_block(COMPLIANT, "e1")
    assert result.exit_status == 0
    assert result.new_artifacts == [(1, "transformed_image_1.png")]
    assert "saved" in result.stdout
    assert not result.truncated
    assert result.wall_time <= session.config.timeout_s


def test_stray_artifact_redirected_and_renamed(session):
    result = session.execute_code_block(STRAY, "e1")
    assert result.exit_status == 0
    assert result.new_artifacts == [(1, "transformed_image_1.png")]
    assert "redirected" in result.stderr and "renamed" in result.stderr


def test_syntax_error_path(session):
    result = session.execute_code_block("def broken(:\n", "e1")
    assert result.exit_status != 0
    assert result.new_artifacts == []
    assert "SyntaxError" in result.stderr


def test_empty_source_rejected(session):
    with pytest.raises(ValueError):
        session.execute_code_block("   ", "e1")


def test_timeout_truncates(tmp_path, sample_image):
    ws = ImageWorkspace("t1", tmp_path / "ws")
    ws.add_original(sample_image)
    session = SandboxSession(ws, tmp_path / "scratch", SandboxConfig(timeout_s=1.5, use_guest_shim=False))
    result = session.execute_code_block("import time\ntime.sleep(30)\n", "e1")
    assert result.exit_status != 0
    assert result.truncated
    assert result.wall_time <= 1.5
    assert "timeout" in result.stderr


def test_stdout_cap(tmp_path, sample_image):
    ws = ImageWorkspace("t1", tmp_path / "ws")
    ws.add_original(sample_image)
    session = SandboxSession(ws, tmp_path / "scratch", SandboxConfig(output_cap_bytes=100, use_guest_shim=False))
    result = session.execute_code_block("print('x' * 10000)\n", "e1")
    assert result.truncated
    assert len(result.stdout.encode()) <= 100


def test_guest_cannot_mutate_registered_artifacts(session):
    session.execute_code_block(COMPLIANT, "e1")
    pristine = session.workspace.path_of(1).read_bytes()
    overwrite = """
import os
from PIL import Image
p = os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png")
Image.new("RGB", (5, 5), (255, 0, 0)).save(p)
orig = os.environ["ORIGINAL_IMAGE_PATH"]
Image.new("RGB", (5, 5), (0, 255, 0)).save(orig)
"""
    result = session.execute_code_block(overwrite, "e2")
    assert session.workspace.path_of(1).read_bytes() == pristine
    # the two clobbered staging copies come back as NEW artifacts
    assert [i for i, _n in result.new_artifacts] == [2, 3]
    assert "renamed" in result.stderr or "taken" in result.stderr


def test_guest_reads_previous_artifacts(session):
    session.execute_code_block(COMPLIANT, "e1")
    reader = """
import os
from PIL import Image
prev = Image.open(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png"))
print("prev size", prev.size)
"""
    result = session.execute_code_block(reader, "e2")
    assert result.exit_status == 0
    assert "prev size (50, 50)" in result.stdout
    assert result.new_artifacts == []


def test_index_collision_renamed_to_next_free(session):
    session.execute_code_block(COMPLIANT, "e1")
    again = session.execute_code_block(COMPLIANT.replace("(10, 10, 60, 60)", "(0, 0, 40, 40)"), "e2")
    assert again.new_artifacts == [(2, "transformed_image_2.png")]
    assert "taken" in again.stderr


def test_collect_artifacts_ordered_and_idempotent(session):
    assert session.collect_artifacts() == []
    session.execute_code_block(COMPLIANT, "e1")
    session.execute_code_block(STRAY, "e2")
    first = session.collect_artifacts()
    assert first == [(1, "transformed_image_1.png"), (2, "transformed_image_2.png")]
    assert session.collect_artifacts() == first


def test_network_disabled_in_guest(session):
    probe = """
import socket
try:
    socket.socket()
    print("net ok")
except OSError as exc:
    print("blocked:", exc)
"""
    result = session.execute_code_block(probe, "e1")
    assert "blocked:" in result.stdout


def test_runtime_op_log_collected_when_present(session):
    writer = """
import json
with open("op_log.jsonl", "w") as f:
    f.write(json.dumps({"op_name": "crop", "args": {"bbox": [1, 2, 3, 4]}, "seq": 1}) + "\\n")
print("wrote log")
"""
    result = session.execute_code_block(writer, "e1")
    assert result.runtime_op_log == [{"op_name": "crop", "args": {"bbox": [1, 2, 3, 4]}, "seq": 1}]
    # consumed: the next block starts with a clean log
    result2 = session.execute_code_block("print('quiet')\n", "e2")
    assert result2.runtime_op_log == []


def test_guest_shim_integration_when_installed(tmp_path, sample_image):
    """With the shim package installed, absolute-path saves are redirected
    in-guest and the runtime op log reaches the execution result."""
    pytest.importorskip("guestshim")
    ws = ImageWorkspace("t1", tmp_path / "ws")
    ws.add_original(sample_image)
    session = SandboxSession(ws, tmp_path / "scratch", SandboxConfig(timeout_s=30, use_guest_shim=True))
    assert session.config.preamble_builder is not None
    outside = tmp_path / "elsewhere"
    outside.mkdir()
    src = f"""
import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img.crop((10, 20, 60, 70)).save({str(outside / "x.png")!r})
print("ok")
"""
    result = session.execute_code_block(src, "e1")
    assert result.exit_status == 0
    assert result.new_artifacts == [(1, "transformed_image_1.png")]
    assert not (outside / "x.png").exists()
    ops = [e for e in result.runtime_op_log if e.get("op_name") == "crop"]
    assert ops and ops[0]["args"]["bbox"] == [10, 20, 60, 70]


def test_preamble_differential_on_compliant_snippet(tmp_path, sample_image):
    """Redirection hooks never change what a protocol-compliant block produces."""
    pytest.importorskip("guestshim")

    def run(flag):
        ws = ImageWorkspace("t1", tmp_path / f"ws_{flag}")
        ws.add_original(sample_image)
        session = SandboxSession(ws, tmp_path / f"scratch_{flag}", SandboxConfig(use_guest_shim=flag))
        result = session.execute_code_block(COMPLIANT, "e1")
        return result, ws.path_of(1).read_bytes()

    with_shim, bytes_with = run(True)
    without, bytes_without = run(False)
    assert with_shim.exit_status == without.exit_status == 0
    assert with_shim.stdout == without.stdout
    assert bytes_with == bytes_without


def test_jpeg_artifact_reencoded_as_png(session):
    src = """
import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img.crop((0, 0, 30, 30)).save("closeup.jpg")
"""
    result = session.execute_code_block(src, "e1")
    assert result.new_artifacts == [(1, "transformed_image_1.png")]
    reloaded = Image.open(session.workspace.path_of(1))
    assert reloaded.format == "PNG"
