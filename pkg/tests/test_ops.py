import pytest
from hypothesis import given
from hypothesis import strategies as st

from procbench.ops import (
    OpValidationError,
    bbox_iou,
    denormalize_bbox,
    normalize_bbox,
    validate_op,
)


def test_center_half_crop_on_unit_image():
    assert denormalize_bbox([250, 250, 750, 750], 1000, 1000) == (250, 250, 750, 750)


def test_full_frame_identity():
    assert denormalize_bbox([0, 0, 1000, 1000], 640, 480) == (0, 0, 640, 480)


def test_linear_scaling():
    assert denormalize_bbox([250, 250, 750, 750], 2000, 1000) == (500, 250, 1500, 750)


def test_degenerate_box_clamped_to_one_pixel():
    x1, y1, x2, y2 = denormalize_bbox([500, 500, 501, 501], 10, 10)
    assert x2 - x1 >= 1 and y2 - y1 >= 1
    assert 0 <= x1 < x2 <= 10 and 0 <= y1 < y2 <= 10


@pytest.mark.parametrize("bad", [[700, 0, 300, 500], [0, 0, 0, 500], [-1, 0, 10, 10], [0, 0, 1001, 10]])
def test_inverted_or_out_of_range_rejected(bad):
    with pytest.raises(OpValidationError):
        denormalize_bbox(bad, 100, 100)


def test_normalize_inverts_denormalize_example():
    assert normalize_bbox((500, 250, 1500, 750), 2000, 1000) == [250, 250, 750, 750]
    assert normalize_bbox((10, 20, 110, 220), 1000, 1000) == [10, 20, 110, 220]


@given(
    st.integers(1, 999),
    st.integers(1, 999),
    st.integers(16, 4000),
    st.integers(16, 4000),
)
def test_denormalize_within_bounds(a, b, w, h):
    x1 = min(a, b) - 1 if min(a, b) > 0 else 0
    x2 = max(a, b) + 1
    px = denormalize_bbox([x1, x1, x2, x2], w, h)
    assert 0 <= px[0] < px[2] <= max(w, px[2])
    assert px[2] - px[0] >= 1 and px[3] - px[1] >= 1


def test_validate_applies_defaults():
    op = validate_op("crop", {"bbox_2d": [0, 0, 500, 500]})
    assert op.args["zoom_scale"] == 1.0
    op = validate_op("flip", {})
    assert op.args["direction"] == "horizontal"
    op = validate_op("threshold", {})
    assert op.args == {"value": 128, "mode": "binary"}


def test_validate_rejects_unknown_keys():
    with pytest.raises(OpValidationError, match="unknown argument"):
        validate_op("crop", {"bbox_2d": [0, 0, 10, 10], "angle": 90})


def test_validate_rejects_unknown_op():
    with pytest.raises(OpValidationError, match="unknown operation"):
        validate_op("sepia", {})


def test_validate_requires_mandatory_args():
    with pytest.raises(OpValidationError, match="requires argument"):
        validate_op("rotate", {})


def test_validate_range_checks():
    with pytest.raises(OpValidationError):
        validate_op("crop", {"bbox_2d": [0, 0, 10, 10], "zoom_scale": 9.0})
    with pytest.raises(OpValidationError):
        validate_op("denoise", {"strength": 31})
    with pytest.raises(OpValidationError):
        validate_op("threshold", {"value": 300})


def test_resize_needs_some_dimension():
    with pytest.raises(OpValidationError, match="width, height or scale"):
        validate_op("resize", {})
    assert validate_op("resize", {"scale": 2.0}).args["scale"] == 2.0


def test_label_passthrough():
    op = validate_op("invert", {"label": "negative view"})
    assert op.args["label"] == "negative view"


def test_bbox_iou_basics():
    assert bbox_iou([0, 0, 10, 10], [0, 0, 10, 10]) == 1.0
    assert bbox_iou([0, 0, 10, 10], [20, 20, 30, 30]) == 0.0
    assert 0.0 < bbox_iou([0, 0, 10, 10], [5, 5, 15, 15]) < 1.0
