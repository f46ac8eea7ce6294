import guestshim

from conftest import run_guest

COMPLIANT = """
import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img.crop((10, 10, 60, 60)).save(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png"))
print("done")
"""


def test_preamble_is_source_text():
    text = guestshim.build_preamble("/x/orig.png", "/x/save", 3)
    assert "_GS_SAVE_DIR = '/x/save'" in text
    assert "_GS_START_INDEX = 3" in text
    compile(text, "<preamble>", "exec")  # must always be valid source


def test_compliant_save_kept_and_logged(tmp_path):
    proc, log, save_dir = run_guest(COMPLIANT, tmp_path)
    assert proc.returncode == 0
    assert (save_dir / "transformed_image_1.png").exists()
    saves = [e for e in log if e["op_name"] == "save"]
    assert len(saves) == 1
    assert saves[0]["output_file"].endswith("transformed_image_1.png")
    crops = [e for e in log if e["op_name"] == "crop"]
    assert crops and crops[0]["args"]["bbox"] == [10, 10, 60, 60]


def test_relative_save_redirected(tmp_path):
    source = """
import os
from PIL import Image
Image.new("RGB", (20, 20), (9, 9, 9)).save("out.png")
print("saved")
"""
    proc, log, save_dir = run_guest(source, tmp_path, next_index=4)
    assert proc.returncode == 0
    assert (save_dir / "transformed_image_4.png").exists()
    saves = [e for e in log if e["op_name"] == "save"]
    assert saves[0]["args"]["path"] == "out.png"
    assert saves[0]["output_file"].endswith("transformed_image_4.png")


def test_jpeg_extension_redirected_to_png(tmp_path):
    source = """
import os
from PIL import Image
Image.new("RGB", (20, 20), (9, 9, 9)).save("pic.jpg", quality=90)
"""
    proc, log, save_dir = run_guest(source, tmp_path)
    assert proc.returncode == 0
    assert (save_dir / "transformed_image_1.png").exists()
    from PIL import Image

    assert Image.open(save_dir / "transformed_image_1.png").format == "PNG"


def test_sequence_strictly_increasing(tmp_path):
    source = """
import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
a = img.crop((0, 0, 10, 10))
b = img.rotate(90, expand=True)
a.save("a.png")
b.save("b.png")
"""
    proc, log, _ = run_guest(source, tmp_path)
    assert proc.returncode == 0
    seqs = [e["seq"] for e in log]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_idempotent_double_injection(tmp_path):
    import guestshim as gs

    single, single_log, _ = run_guest(COMPLIANT, tmp_path / "one")
    pre = gs.build_preamble("ignored", "ignored", 9)
    doubled = pre + "\n" + COMPLIANT  # run_guest prepends the real preamble again
    double, double_log, _ = run_guest(doubled, tmp_path / "two")
    assert double.returncode == single.returncode == 0
    assert double.stdout == single.stdout

    def shape(log):
        import os

        return [
            (e["op_name"], e["args"] if e["op_name"] != "save" else os.path.basename(e["args"]["path"]))
            for e in log
        ]

    assert shape(double_log) == shape(single_log)


def test_exit_status_preserved(tmp_path):
    proc, _, _ = run_guest("import sys\nprint('bye')\nsys.exit(3)\n", tmp_path)
    assert proc.returncode == 3
    assert proc.stdout == "bye\n"


def test_no_absence_warnings_with_full_environment(tmp_path):
    proc, _, _ = run_guest("print('ok')\n", tmp_path)
    assert "[shim] library unavailable" not in proc.stderr


def test_unhooked_writer_swept_into_manifest(tmp_path):
    source = """
import os, io
from PIL import Image
buf = io.BytesIO()
Image.new("RGB", (8, 8), (1, 2, 3)).save(buf, format="PNG")
with open(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "sneaky.png"), "wb") as f:
    f.write(buf.getvalue())
"""
    proc, log, save_dir = run_guest(source, tmp_path)
    assert proc.returncode == 0
    assert (save_dir / "sneaky.png").exists()
    sweep = [e for e in log if e["op_name"] == "save" and e["args"].get("path") == "sneaky.png"]
    assert sweep and sweep[0]["output_file"].endswith("sneaky.png")


def test_internal_library_calls_not_double_logged(tmp_path):
    # ImageOps.grayscale calls convert("L") internally; one entry only.
    source = """
import os
from PIL import Image, ImageOps
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
gray = ImageOps.grayscale(img)
"""
    proc, log, _ = run_guest(source, tmp_path)
    assert proc.returncode == 0
    assert [e["op_name"] for e in log] == ["grayscale"]


def test_enhancer_constructor_conversion_not_logged(tmp_path):
    source = """
import os
from PIL import Image, ImageEnhance
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
out = ImageEnhance.Contrast(img).enhance(1.5)
"""
    proc, log, _ = run_guest(source, tmp_path)
    assert proc.returncode == 0
    assert [e["op_name"] for e in log] == ["enhance"]
    assert log[0]["args"] == {"contrast": 1.5}


def test_matplotlib_savefig_redirected(tmp_path):
    source = """
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
plt.plot([1, 2, 3])
plt.savefig("figure.png")
print("plotted")
"""
    proc, log, save_dir = run_guest(source, tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert (save_dir / "transformed_image_1.png").exists()
    saves = [e for e in log if e["op_name"] == "save"]
    assert saves and saves[0]["args"]["path"] == "figure.png"
