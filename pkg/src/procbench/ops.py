"""Canonical visual operations: names, argument schemas, bbox conventions.

A canonical op is the normalized name+arguments form shared by the atomic
tool schema, the code tracer's output, and checkpoint constraints. Spatial
coordinates in canonical form use the 0-1000 normalized convention with
(0, 0) at the top-left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class OpValidationError(ValueError):
    """Raised when an operation payload does not match its schema."""


# Argument schema per op: name -> (type, required, default, constraint).
# Constraint is ("range", lo, hi), ("choices", [...]), ("min", lo) or None.
OP_SCHEMAS: dict[str, dict[str, tuple[type, bool, Any, Any]]] = {
    "crop": {
        "bbox_2d": (list, True, None, ("bbox", 0, 1000)),
        "zoom_scale": (float, False, 1.0, ("range", 0.5, 5.0)),
    },
    "rotate": {
        "angle": (float, True, None, None),
        "expand": (bool, False, True, None),
    },
    "flip": {
        "direction": (str, False, "horizontal", ("choices", ["horizontal", "vertical", "both"])),
    },
    "resize": {
        "width": (int, False, None, ("min", 1)),
        "height": (int, False, None, ("min", 1)),
        "scale": (float, False, None, ("min", 1e-9)),
    },
    "enhance": {
        "brightness": (float, False, 1.0, ("min", 0.0)),
        "contrast": (float, False, 1.0, ("min", 0.0)),
        "sharpness": (float, False, 1.0, ("min", 0.0)),
    },
    "grayscale": {},
    "autocontrast": {
        "cutoff": (float, False, 0.0, ("range", 0.0, 49.0)),
    },
    "blur": {
        "radius": (int, False, 2, ("min", 0)),
    },
    "sharpen": {},
    "denoise": {
        "strength": (int, False, 10, ("range", 1, 30)),
    },
    "edge_detect": {
        "method": (str, False, "canny", ("choices", ["canny", "sobel", "simple"])),
    },
    "invert": {},
    "equalize": {},
    "threshold": {
        "value": (int, False, 128, ("range", 0, 255)),
        "mode": (str, False, "binary", ("choices", ["binary", "binary_inv", "trunc", "tozero"])),
    },
}

OP_NAMES = frozenset(OP_SCHEMAS)

# Free-text annotation accepted by every op (never affects semantics).
_LABEL_KEY = "label"


@dataclass
class CanonicalOp:
    """A normalized visual operation: name plus arguments.

    Tool-call payloads go through :func:`validate_op` before execution.
    Tracer-extracted ops are constructed directly: their spatial arguments
    may still be in pixel space and filter-style arguments may be partial,
    which the schema would reject.
    """

    name: str
    args: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "args": dict(self.args)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CanonicalOp":
        return cls(name=data["name"], args=dict(data.get("args", {})))


def _check_bbox(bbox: Any) -> list[float]:
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise OpValidationError(f"bbox_2d must be 4 numbers, got {bbox!r}")
    vals = []
    for v in bbox:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise OpValidationError(f"bbox_2d entries must be numbers, got {v!r}")
        vals.append(float(v))
    x1, y1, x2, y2 = vals
    if not (0 <= x1 < x2 <= 1000 and 0 <= y1 < y2 <= 1000):
        raise OpValidationError(f"bbox_2d out of range or inverted: {vals}")
    return vals


def validate_op(name: str, args: dict[str, Any]) -> CanonicalOp:
    """Validate a tool-call payload against its op schema.

    Returns a CanonicalOp with defaults applied and numeric types coerced.
    Unknown argument keys are rejected.
    """
    if name not in OP_SCHEMAS:
        raise OpValidationError(f"unknown operation {name!r}")
    schema = OP_SCHEMAS[name]
    out: dict[str, Any] = {}
    for key, value in args.items():
        if key == _LABEL_KEY:
            if value is not None and not isinstance(value, str):
                raise OpValidationError("label must be a string")
            out[_LABEL_KEY] = value
            continue
        if key not in schema:
            raise OpValidationError(f"unknown argument {key!r} for {name}")
        typ, _required, _default, constraint = schema[key]
        if constraint and constraint[0] == "bbox":
            out[key] = _check_bbox(value)
            continue
        if typ is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise OpValidationError(f"{name}.{key} must be a number, got {value!r}")
            value = float(value)
        elif typ is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise OpValidationError(f"{name}.{key} must be an integer, got {value!r}")
        elif typ is bool:
            if not isinstance(value, bool):
                raise OpValidationError(f"{name}.{key} must be a boolean, got {value!r}")
        elif typ is str:
            if not isinstance(value, str):
                raise OpValidationError(f"{name}.{key} must be a string, got {value!r}")
        if constraint:
            kind = constraint[0]
            if kind == "range" and not (constraint[1] <= value <= constraint[2]):
                raise OpValidationError(f"{name}.{key}={value} outside [{constraint[1]}, {constraint[2]}]")
            if kind == "min" and value < constraint[1]:
                raise OpValidationError(f"{name}.{key}={value} below minimum {constraint[1]}")
            if kind == "choices" and value not in constraint[1]:
                raise OpValidationError(f"{name}.{key}={value!r} not one of {constraint[1]}")
        out[key] = value
    for key, (typ, required, default, _c) in schema.items():
        if key in out:
            continue
        if required:
            raise OpValidationError(f"{name} requires argument {key!r}")
        if default is not None:
            out[key] = default
    if name == "resize" and not any(k in out for k in ("width", "height", "scale")):
        raise OpValidationError("resize requires width, height or scale")
    return CanonicalOp(name=name, args=out)


def denormalize_bbox(bbox_2d: list[float], width: int, height: int) -> tuple[int, int, int, int]:
    """Map a 0-1000 normalized bbox onto pixel coordinates.

    Round-half-up, then clamped so each side is at least one pixel.
    """
    x1n, y1n, x2n, y2n = _check_bbox(bbox_2d)

    def px(v: float, dim: int) -> int:
        return int(v * dim / 1000.0 + 0.5)

    x1, x2 = px(x1n, width), px(x2n, width)
    y1, y2 = px(y1n, height), px(y2n, height)
    if x2 <= x1:
        if x1 >= width:
            x1 = width - 1
        x2 = x1 + 1
    if y2 <= y1:
        if y1 >= height:
            y1 = height - 1
        y2 = y1 + 1
    return x1, y1, x2, y2


def normalize_bbox(bbox_px: tuple[float, float, float, float] | list[float], width: int, height: int) -> list[int]:
    """Inverse of :func:`denormalize_bbox`: pixel box to 0-1000 coordinates."""
    x1, y1, x2, y2 = bbox_px

    def norm(v: float, dim: int) -> int:
        n = int(v * 1000.0 / dim + 0.5)
        return max(0, min(1000, n))

    return [norm(x1, width), norm(y1, height), norm(x2, width), norm(y2, height)]


def bbox_iou(a: list[float], b: list[float]) -> float:
    """Intersection-over-union of two [x1, y1, x2, y2] boxes."""
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    iw, ih = max(0.0, ix2 - ix1), max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter <= 0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)
