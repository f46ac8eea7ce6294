"""Tracer regression corpus: guest snippets with expected extraction results.

Each entry carries the snippet source, the expected static extraction
(hand-derived from the code, never computed by the tracer itself), and the
runtime operation log the snippet produces when executed under the guest
shim. ``constant_args`` marks snippets whose traced calls carry only
literal/foldable arguments; on those the static op-name multiset must equal
the runtime log exactly. Dynamic snippets (loops, conditionals, helpers,
computed arguments) are covered by dynamic-confidence ops instead.

Every snippet is runnable: it reads ORIGINAL_IMAGE_PATH and executes all of
its traced calls (no dead branches), so recorded runtime logs stay the
ground truth for live shim runs.
"""

from __future__ import annotations

from typing import Any

_PIL_PRELUDE = 'import os\nfrom PIL import Image\nimg = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])\n'
_CV2_PRELUDE = 'import os\nimport cv2\narr = cv2.imread(os.environ["ORIGINAL_IMAGE_PATH"])\n'
_NP_PRELUDE = (
    'import os\nimport numpy as np\nfrom PIL import Image\n'
    'arr = np.array(Image.open(os.environ["ORIGINAL_IMAGE_PATH"]))\n'
)


def _s(name: str, args: dict[str, Any] | None = None, confidence: str = "static", pixel: bool = False) -> dict:
    return {"name": name, "args": args or {}, "confidence": confidence, "pixel_args": pixel}


def _r(name: str, args: dict[str, Any] | None = None) -> dict:
    return {"op_name": name, "args": args or {}}


CORPUS: list[dict[str, Any]] = [
    # -- PIL, literal arguments -------------------------------------------
    {
        "name": "pil_crop_literal",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'box = (10, 20, 110, 220)\nimg2 = img.crop(box)\nimg2.save(os.path.join(os.environ["PROCESSED_IMAGE_SAVE_PATH"], "transformed_image_1.png"))\n',
        "static_ops": [_s("crop", {"bbox": [10, 20, 110, 220]}, pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [10, 20, 110, 220]})],
    },
    {
        "name": "pil_crop_inline",
        "constant_args": True,
        "source": _PIL_PRELUDE + "img2 = img.crop((5, 5, 55, 105))\nprint(img2.size)\n",
        "static_ops": [_s("crop", {"bbox": [5, 5, 55, 105]}, pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [5, 5, 55, 105]})],
    },
    {
        "name": "pil_crop_kw",
        "constant_args": True,
        "source": _PIL_PRELUDE + "img2 = img.crop(box=(0, 0, 64, 48))\n",
        "static_ops": [_s("crop", {"bbox": [0, 0, 64, 48]}, pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [0, 0, 64, 48]})],
    },
    {
        "name": "pil_rotate_90_expand",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.rotate(90, expand=True)\nprint(out.size)\n",
        "static_ops": [_s("rotate", {"angle": 90, "expand": True})],
        "runtime_log": [_r("rotate", {"angle": 90})],
    },
    {
        "name": "pil_rotate_negative",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.rotate(-45, expand=False)\n",
        "static_ops": [_s("rotate", {"angle": -45, "expand": False})],
        "runtime_log": [_r("rotate", {"angle": -45})],
    },
    {
        "name": "pil_rotate_kwarg",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.rotate(angle=180)\n",
        "static_ops": [_s("rotate", {"angle": 180})],
        "runtime_log": [_r("rotate", {"angle": 180})],
    },
    {
        "name": "pil_transpose_mirror",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.transpose(Image.FLIP_LEFT_RIGHT)\n",
        "static_ops": [_s("flip", {"direction": "horizontal"})],
        "runtime_log": [_r("flip", {"direction": "horizontal"})],
    },
    {
        "name": "pil_transpose_vertical",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.transpose(Image.Transpose.FLIP_TOP_BOTTOM)\n",
        "static_ops": [_s("flip", {"direction": "vertical"})],
        "runtime_log": [_r("flip", {"direction": "vertical"})],
    },
    {
        "name": "pil_transpose_rotate90",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.transpose(Image.ROTATE_90)\n",
        "static_ops": [_s("rotate", {"angle": 90})],
        "runtime_log": [_r("rotate", {"angle": 90})],
    },
    {
        "name": "pil_resize_literal",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.resize((200, 150))\n",
        "static_ops": [_s("resize", {"width": 200, "height": 150})],
        "runtime_log": [_r("resize", {"width": 200, "height": 150})],
    },
    {
        "name": "pil_resize_bound_name",
        "constant_args": True,
        "source": _PIL_PRELUDE + "size = (320, 240)\nout = img.resize(size)\n",
        "static_ops": [_s("resize", {"width": 320, "height": 240})],
        "runtime_log": [_r("resize", {"width": 320, "height": 240})],
    },
    {
        "name": "pil_convert_gray",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'gray = img.convert("L")\n',
        "static_ops": [_s("grayscale")],
        "runtime_log": [_r("grayscale")],
    },
    {
        "name": "pil_convert_rgb_not_an_op",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'rgb = img.convert("RGB")\nprint(rgb.mode)\n',
        "static_ops": [],
        "runtime_log": [],
    },
    {
        "name": "pil_enhance_brightness",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageEnhance\nout = ImageEnhance.Brightness(img).enhance(2.0)\n",
        "static_ops": [_s("enhance", {"brightness": 2.0})],
        "runtime_log": [_r("enhance", {"brightness": 2.0})],
    },
    {
        "name": "pil_enhance_contrast_via_var",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageEnhance\nenh = ImageEnhance.Contrast(img)\nout = enh.enhance(1.5)\n",
        "static_ops": [_s("enhance", {"contrast": 1.5})],
        "runtime_log": [_r("enhance", {"contrast": 1.5})],
    },
    {
        "name": "pil_enhance_sharpness",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageEnhance\nout = ImageEnhance.Sharpness(img).enhance(0.5)\n",
        "static_ops": [_s("enhance", {"sharpness": 0.5})],
        "runtime_log": [_r("enhance", {"sharpness": 0.5})],
    },
    {
        "name": "pil_filter_gaussian",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageFilter\nout = img.filter(ImageFilter.GaussianBlur(3))\n",
        "static_ops": [_s("blur", {"radius": 3})],
        "runtime_log": [_r("blur", {"radius": 3})],
    },
    {
        "name": "pil_filter_gaussian_kw",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageFilter\nout = img.filter(ImageFilter.GaussianBlur(radius=2))\n",
        "static_ops": [_s("blur", {"radius": 2})],
        "runtime_log": [_r("blur", {"radius": 2})],
    },
    {
        "name": "pil_filter_sharpen",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageFilter\nout = img.filter(ImageFilter.SHARPEN)\n",
        "static_ops": [_s("sharpen")],
        "runtime_log": [_r("sharpen")],
    },
    {
        "name": "pil_filter_find_edges",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageFilter\nout = img.filter(ImageFilter.FIND_EDGES)\n",
        "static_ops": [_s("edge_detect", {"method": "simple"})],
        "runtime_log": [_r("edge_detect", {"method": "simple"})],
    },
    {
        "name": "pil_filter_median",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageFilter\nout = img.filter(ImageFilter.MedianFilter(5))\n",
        "static_ops": [_s("denoise")],
        "runtime_log": [_r("denoise")],
    },
    {
        "name": "pil_ops_grayscale",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageOps\ngray = ImageOps.grayscale(img)\n",
        "static_ops": [_s("grayscale")],
        "runtime_log": [_r("grayscale")],
    },
    {
        "name": "pil_ops_invert",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'from PIL import ImageOps\nneg = ImageOps.invert(img.convert("RGB"))\n',
        "static_ops": [_s("invert")],
        "runtime_log": [_r("invert")],
    },
    {
        "name": "pil_ops_autocontrast",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageOps\nout = ImageOps.autocontrast(img, cutoff=2)\n",
        "static_ops": [_s("autocontrast", {"cutoff": 2})],
        "runtime_log": [_r("autocontrast", {"cutoff": 2})],
    },
    {
        "name": "pil_ops_equalize",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageOps\nout = ImageOps.equalize(img)\n",
        "static_ops": [_s("equalize")],
        "runtime_log": [_r("equalize")],
    },
    {
        "name": "pil_ops_mirror",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageOps\nout = ImageOps.mirror(img)\n",
        "static_ops": [_s("flip", {"direction": "horizontal"})],
        "runtime_log": [_r("flip", {"direction": "horizontal"})],
    },
    {
        "name": "pil_ops_flip_vertical",
        "constant_args": True,
        "source": _PIL_PRELUDE + "from PIL import ImageOps\nout = ImageOps.flip(img)\n",
        "static_ops": [_s("flip", {"direction": "vertical"})],
        "runtime_log": [_r("flip", {"direction": "vertical"})],
    },
    {
        "name": "pil_chained_crop_rotate",
        "constant_args": True,
        "source": _PIL_PRELUDE + "out = img.crop((0, 0, 50, 50)).rotate(90, expand=True)\n",
        "static_ops": [_s("rotate", {"angle": 90, "expand": True}), _s("crop", {"bbox": [0, 0, 50, 50]}, pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [0, 0, 50, 50]}), _r("rotate", {"angle": 90})],
    },
    {
        "name": "pil_two_sequential_crops",
        "constant_args": True,
        "source": _PIL_PRELUDE + "a = img.crop((0, 0, 40, 40))\nb = img.crop((40, 40, 90, 90))\n",
        "static_ops": [
            _s("crop", {"bbox": [0, 0, 40, 40]}, pixel=True),
            _s("crop", {"bbox": [40, 40, 90, 90]}, pixel=True),
        ],
        "runtime_log": [_r("crop", {"bbox": [0, 0, 40, 40]}), _r("crop", {"bbox": [40, 40, 90, 90]})],
    },
    {
        "name": "pil_point_not_traced",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'gray = img.convert("L")\nbw = gray.point(lambda p: 255 if p > 128 else 0)\n',
        "static_ops": [_s("grayscale")],
        "runtime_log": [_r("grayscale")],
    },
    {
        "name": "pil_crop_save_jpeg",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'img.crop((8, 8, 72, 72)).save("closeup.jpg")\n',
        "static_ops": [_s("crop", {"bbox": [8, 8, 72, 72]}, pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [8, 8, 72, 72]})],
    },
    {
        "name": "pil_resize_then_save_arbitrary",
        "constant_args": True,
        "source": _PIL_PRELUDE + 'small = img.resize((64, 64))\nsmall.save("thumb.png")\n',
        "static_ops": [_s("resize", {"width": 64, "height": 64})],
        "runtime_log": [_r("resize", {"width": 64, "height": 64})],
    },
    # -- cv2 ----------------------------------------------------------------
    {
        "name": "cv2_canny",
        "constant_args": True,
        "source": _CV2_PRELUDE + "edges = cv2.Canny(arr, 50, 150)\nprint(edges.shape)\n",
        "static_ops": [_s("edge_detect", {"method": "canny"})],
        "runtime_log": [_r("edge_detect", {"method": "canny"})],
    },
    {
        "name": "cv2_threshold_binary",
        "constant_args": True,
        "source": _CV2_PRELUDE + "gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)\nret, th = cv2.threshold(gray, 127, 255, cv2.THRESH_BINARY)\n",
        "static_ops": [_s("grayscale"), _s("threshold", {"mode": "binary", "value": 127})],
        "runtime_log": [_r("grayscale"), _r("threshold", {"value": 127, "mode": "binary"})],
    },
    {
        "name": "cv2_threshold_inv",
        "constant_args": True,
        "source": _CV2_PRELUDE + "gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)\nret, th = cv2.threshold(gray, 100, 255, cv2.THRESH_BINARY_INV)\n",
        "static_ops": [_s("grayscale"), _s("threshold", {"mode": "binary_inv", "value": 100})],
        "runtime_log": [_r("grayscale"), _r("threshold", {"value": 100, "mode": "binary_inv"})],
    },
    {
        "name": "cv2_threshold_trunc",
        "constant_args": True,
        "source": _CV2_PRELUDE + "gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)\nret, th = cv2.threshold(gray, 180, 255, cv2.THRESH_TRUNC)\n",
        "static_ops": [_s("grayscale"), _s("threshold", {"mode": "trunc", "value": 180})],
        "runtime_log": [_r("grayscale"), _r("threshold", {"value": 180, "mode": "trunc"})],
    },
    {
        "name": "cv2_flip_horizontal",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.flip(arr, 1)\n",
        "static_ops": [_s("flip", {"direction": "horizontal"})],
        "runtime_log": [_r("flip", {"direction": "horizontal"})],
    },
    {
        "name": "cv2_flip_vertical",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.flip(arr, 0)\n",
        "static_ops": [_s("flip", {"direction": "vertical"})],
        "runtime_log": [_r("flip", {"direction": "vertical"})],
    },
    {
        "name": "cv2_flip_both",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.flip(arr, -1)\n",
        "static_ops": [_s("flip", {"direction": "both"})],
        "runtime_log": [_r("flip", {"direction": "both"})],
    },
    {
        "name": "cv2_rotate_clockwise",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.rotate(arr, cv2.ROTATE_90_CLOCKWISE)\n",
        "static_ops": [_s("rotate", {"angle": 270})],
        "runtime_log": [_r("rotate", {"angle": 270})],
    },
    {
        "name": "cv2_rotate_ccw",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.rotate(arr, cv2.ROTATE_90_COUNTERCLOCKWISE)\n",
        "static_ops": [_s("rotate", {"angle": 90})],
        "runtime_log": [_r("rotate", {"angle": 90})],
    },
    {
        "name": "cv2_resize_literal",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.resize(arr, (128, 96))\n",
        "static_ops": [_s("resize", {"width": 128, "height": 96})],
        "runtime_log": [_r("resize", {"width": 128, "height": 96})],
    },
    {
        "name": "cv2_gaussian_blur",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.GaussianBlur(arr, (5, 5), 0)\n",
        "static_ops": [_s("blur")],
        "runtime_log": [_r("blur")],
    },
    {
        "name": "cv2_median_blur",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.medianBlur(arr, 5)\n",
        "static_ops": [_s("denoise")],
        "runtime_log": [_r("denoise")],
    },
    {
        "name": "cv2_equalize_hist",
        "constant_args": True,
        "source": _CV2_PRELUDE + "gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)\nout = cv2.equalizeHist(gray)\n",
        "static_ops": [_s("grayscale"), _s("equalize")],
        "runtime_log": [_r("grayscale"), _r("equalize")],
    },
    {
        "name": "cv2_bitwise_not",
        "constant_args": True,
        "source": _CV2_PRELUDE + "out = cv2.bitwise_not(arr)\n",
        "static_ops": [_s("invert")],
        "runtime_log": [_r("invert")],
    },
    {
        "name": "cv2_sobel",
        "constant_args": True,
        "source": _CV2_PRELUDE + "gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)\nout = cv2.Sobel(gray, cv2.CV_64F, 1, 0)\n",
        "static_ops": [_s("grayscale"), _s("edge_detect", {"method": "sobel"})],
        "runtime_log": [_r("grayscale"), _r("edge_detect", {"method": "sobel"})],
    },
    # -- numpy ---------------------------------------------------------------
    {
        "name": "np_flipud",
        "constant_args": True,
        "source": _NP_PRELUDE + "out = np.flipud(arr)\n",
        "static_ops": [_s("flip", {"direction": "vertical"})],
        "runtime_log": [_r("flip", {"direction": "vertical"})],
    },
    {
        "name": "np_fliplr",
        "constant_args": True,
        "source": _NP_PRELUDE + "out = np.fliplr(arr)\n",
        "static_ops": [_s("flip", {"direction": "horizontal"})],
        "runtime_log": [_r("flip", {"direction": "horizontal"})],
    },
    {
        "name": "np_rot90_default",
        "constant_args": True,
        "source": _NP_PRELUDE + "out = np.rot90(arr)\n",
        "static_ops": [_s("rotate", {"angle": 90})],
        "runtime_log": [_r("rotate", {"angle": 90})],
    },
    {
        "name": "np_rot90_twice",
        "constant_args": True,
        "source": _NP_PRELUDE + "out = np.rot90(arr, 2)\n",
        "static_ops": [_s("rotate", {"angle": 180})],
        "runtime_log": [_r("rotate", {"angle": 180})],
    },
    # -- dynamic arguments / control flow --------------------------------------
    {
        "name": "dyn_loop_crops",
        "constant_args": False,
        "source": _PIL_PRELUDE + "tiles = []\nfor i in range(3):\n    tiles.append(img.crop((i * 10, 0, i * 10 + 50, 50)))\n",
        "static_ops": [_s("crop", {}, confidence="dynamic", pixel=True)],
        "runtime_log": [
            _r("crop", {"bbox": [0, 0, 50, 50]}),
            _r("crop", {"bbox": [10, 0, 60, 50]}),
            _r("crop", {"bbox": [20, 0, 70, 50]}),
        ],
    },
    {
        "name": "dyn_conditional_rotate",
        "constant_args": False,
        "source": _PIL_PRELUDE + "needs_fix = True\nif needs_fix:\n    out = img.rotate(90, expand=True)\n",
        "static_ops": [_s("rotate", {"angle": 90, "expand": True}, confidence="dynamic")],
        "runtime_log": [_r("rotate", {"angle": 90})],
    },
    {
        "name": "dyn_helper_function",
        "constant_args": False,
        "source": _PIL_PRELUDE + "def prep(im):\n    return im.crop((10, 10, 60, 60))\n\nout = prep(img)\n",
        "static_ops": [_s("crop", {"bbox": [10, 10, 60, 60]}, confidence="dynamic", pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [10, 10, 60, 60]})],
    },
    {
        "name": "dyn_computed_box",
        "constant_args": False,
        "source": _PIL_PRELUDE + "w, h = img.size\nbox = (w // 4, h // 4, w // 2, h // 2)\nout = img.crop(box)\n",
        "static_ops": [_s("crop", {}, confidence="dynamic", pixel=True)],
        "runtime_log": [_r("crop", {"bbox": [25, 20, 50, 40]})],
    },
    {
        "name": "dyn_while_enhance",
        "constant_args": False,
        "source": _PIL_PRELUDE + "from PIL import ImageEnhance\ni = 0\nwhile i < 2:\n    img = ImageEnhance.Brightness(img).enhance(1.2)\n    i += 1\n",
        "static_ops": [_s("enhance", {"brightness": 1.2}, confidence="dynamic")],
        "runtime_log": [_r("enhance", {"brightness": 1.2}), _r("enhance", {"brightness": 1.2})],
    },
    {
        "name": "dyn_mixed_static_and_loop",
        "constant_args": False,
        "source": _PIL_PRELUDE + "tile = img.crop((0, 0, 80, 80))\nfor _ in range(2):\n    tile = tile.rotate(90, expand=True)\n",
        "static_ops": [
            _s("crop", {"bbox": [0, 0, 80, 80]}, pixel=True),
            _s("rotate", {"angle": 90, "expand": True}, confidence="dynamic"),
        ],
        "runtime_log": [
            _r("crop", {"bbox": [0, 0, 80, 80]}),
            _r("rotate", {"angle": 90}),
            _r("rotate", {"angle": 90}),
        ],
    },
    # -- no image operations ------------------------------------------------------
    {
        "name": "plain_print",
        "constant_args": True,
        "source": 'print("hello from the guest")\n',
        "static_ops": [],
        "runtime_log": [],
    },
    {
        "name": "plain_arithmetic",
        "constant_args": True,
        "source": "total = sum(i * i for i in range(100))\nprint(total)\n",
        "static_ops": [],
        "runtime_log": [],
    },
    {
        "name": "plain_text_io",
        "constant_args": True,
        "source": 'with open("notes.txt", "w") as f:\n    f.write("no images here")\nprint(open("notes.txt").read())\n',
        "static_ops": [],
        "runtime_log": [],
    },
]


def corpus_entries() -> list[dict[str, Any]]:
    names = [e["name"] for e in CORPUS]
    assert len(names) == len(set(names))
    return CORPUS
