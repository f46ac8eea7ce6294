"""Pixel-level implementations of the atomic visual operations.

All kernels take and return PIL images in mode "RGB" or "L". Geometric ops
at multiples of 90 degrees, flips, inverts and unit-zoom crops are exact
pixel copies; resampling ops use LANCZOS. Constants that the tool schema
does not expose (canny thresholds, denoise mapping, sharpen kernel) are
fixed here and documented in the README.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageEnhance, ImageFilter, ImageOps

from .ops import CanonicalOp, denormalize_bbox

RESAMPLE = Image.Resampling.LANCZOS

# Fixed hysteresis thresholds for canny; the tool schema exposes none.
CANNY_LOW = 50.0
CANNY_HIGH = 150.0
# Denoise strength (1-30) maps linearly onto a Gaussian radius.
DENOISE_RADIUS_PER_STRENGTH = 0.1


def load_image(path: str) -> Image.Image:
    """Open an image and normalize its mode to RGB (or keep single-channel L)."""
    img = Image.open(path)
    img.load()
    if img.mode not in ("RGB", "L"):
        img = img.convert("RGB")
    return img


def _to_array(img: Image.Image) -> np.ndarray:
    return np.asarray(img, dtype=np.uint8)


def _from_array(arr: np.ndarray, mode: str) -> Image.Image:
    return Image.fromarray(arr.astype(np.uint8), mode=mode)


def op_crop(img: Image.Image, bbox_2d: list[float], zoom_scale: float = 1.0, **_: object) -> Image.Image:
    x1, y1, x2, y2 = denormalize_bbox(bbox_2d, img.width, img.height)
    region = img.crop((x1, y1, x2, y2))
    if zoom_scale == 1.0:
        return region
    # Output size comes from the normalized box in one rounding step, so
    # dims track bbox * dims * zoom within one pixel at any zoom factor.
    bx1, by1, bx2, by2 = bbox_2d
    w = max(1, int((bx2 - bx1) * img.width / 1000.0 * zoom_scale + 0.5))
    h = max(1, int((by2 - by1) * img.height / 1000.0 * zoom_scale + 0.5))
    return region.resize((w, h), RESAMPLE)


_EXACT_ROTATIONS = {
    90: Image.Transpose.ROTATE_90,
    180: Image.Transpose.ROTATE_180,
    270: Image.Transpose.ROTATE_270,
}


def op_rotate(img: Image.Image, angle: float, expand: bool = True, **_: object) -> Image.Image:
    turns = angle % 360.0
    if turns == 0.0:
        return img.copy()
    if turns in (90.0, 180.0, 270.0) and (expand or turns == 180.0 or img.width == img.height):
        return img.transpose(_EXACT_ROTATIONS[int(turns)])
    return img.rotate(angle, resample=Image.Resampling.BICUBIC, expand=expand)


def op_flip(img: Image.Image, direction: str = "horizontal", **_: object) -> Image.Image:
    if direction == "horizontal":
        return img.transpose(Image.Transpose.FLIP_LEFT_RIGHT)
    if direction == "vertical":
        return img.transpose(Image.Transpose.FLIP_TOP_BOTTOM)
    return img.transpose(Image.Transpose.ROTATE_180)


def op_resize(
    img: Image.Image,
    width: int | None = None,
    height: int | None = None,
    scale: float | None = None,
    **_: object,
) -> Image.Image:
    if width and height:
        w, h = width, height
    elif width:
        w = width
        h = max(1, int(width * img.height / img.width + 0.5))
    elif height:
        h = height
        w = max(1, int(height * img.width / img.height + 0.5))
    else:
        w = max(1, int(img.width * scale + 0.5))
        h = max(1, int(img.height * scale + 0.5))
    return img.resize((w, h), RESAMPLE)


def op_enhance(
    img: Image.Image,
    brightness: float = 1.0,
    contrast: float = 1.0,
    sharpness: float = 1.0,
    **_: object,
) -> Image.Image:
    if brightness == 1.0 and contrast == 1.0 and sharpness == 1.0:
        return img.copy()
    out = img
    if brightness != 1.0:
        arr = _to_array(out).astype(np.float64) * brightness
        out = _from_array(np.clip(np.rint(arr), 0, 255), out.mode)
    if contrast != 1.0:
        # Midpoint-anchored: v' = (v - 128) * c + 128.
        arr = (_to_array(out).astype(np.float64) - 128.0) * contrast + 128.0
        out = _from_array(np.clip(np.rint(arr), 0, 255), out.mode)
    if sharpness != 1.0:
        out = ImageEnhance.Sharpness(out).enhance(sharpness)
    return out


def op_grayscale(img: Image.Image, **_: object) -> Image.Image:
    return img.convert("L")


def op_autocontrast(img: Image.Image, cutoff: float = 0.0, **_: object) -> Image.Image:
    return ImageOps.autocontrast(img, cutoff=cutoff)


def op_blur(img: Image.Image, radius: int = 2, **_: object) -> Image.Image:
    return img.filter(ImageFilter.GaussianBlur(radius=radius))


def op_sharpen(img: Image.Image, **_: object) -> Image.Image:
    return img.filter(ImageFilter.SHARPEN)


def op_denoise(img: Image.Image, strength: int = 10, **_: object) -> Image.Image:
    radius = strength * DENOISE_RADIUS_PER_STRENGTH
    return img.filter(ImageFilter.GaussianBlur(radius=radius))


def op_invert(img: Image.Image, **_: object) -> Image.Image:
    return _from_array(255 - _to_array(img), img.mode)


def op_equalize(img: Image.Image, **_: object) -> Image.Image:
    return ImageOps.equalize(img)


def op_threshold(img: Image.Image, value: int = 128, mode: str = "binary", **_: object) -> Image.Image:
    arr = _to_array(img.convert("L"))
    if mode == "binary":
        out = np.where(arr > value, 255, 0)
    elif mode == "binary_inv":
        out = np.where(arr > value, 0, 255)
    elif mode == "trunc":
        out = np.minimum(arr, value)
    else:  # tozero
        out = np.where(arr > value, arr, 0)
    return _from_array(out, "L")


def _canny(gray: np.ndarray) -> np.ndarray:
    from scipy import ndimage

    img = ndimage.gaussian_filter(gray.astype(np.float64), sigma=1.4)
    gx = ndimage.sobel(img, axis=1)
    gy = ndimage.sobel(img, axis=0)
    mag = np.hypot(gx, gy)
    ang = (np.rad2deg(np.arctan2(gy, gx)) + 180.0) % 180.0

    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    center = padded[1 : h + 1, 1 : w + 1]
    left, right = padded[1 : h + 1, 0:w], padded[1 : h + 1, 2 : w + 2]
    up, down = padded[0:h, 1 : w + 1], padded[2 : h + 2, 1 : w + 1]
    ul, dr = padded[0:h, 0:w], padded[2 : h + 2, 2 : w + 2]
    ur, dl = padded[0:h, 2 : w + 2], padded[2 : h + 2, 0:w]

    d0 = (ang < 22.5) | (ang >= 157.5)
    d45 = (ang >= 22.5) & (ang < 67.5)
    d90 = (ang >= 67.5) & (ang < 112.5)
    d135 = (ang >= 112.5) & (ang < 157.5)
    keep = (
        (d0 & (center >= left) & (center >= right))
        | (d90 & (center >= up) & (center >= down))
        | (d45 & (center >= ur) & (center >= dl))
        | (d135 & (center >= ul) & (center >= dr))
    )
    nms = np.where(keep, mag, 0.0)

    strong = nms >= CANNY_HIGH
    weak = nms >= CANNY_LOW
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return np.zeros_like(gray, dtype=np.uint8)
    strong_labels = np.unique(labels[strong & (labels > 0)])
    edges = np.isin(labels, strong_labels[strong_labels > 0])
    return (edges.astype(np.uint8)) * 255


def op_edge_detect(img: Image.Image, method: str = "canny", **_: object) -> Image.Image:
    gray = img.convert("L")
    if method == "canny":
        return _from_array(_canny(_to_array(gray)), "L")
    if method == "sobel":
        from scipy import ndimage

        arr = _to_array(gray).astype(np.float64)
        mag = np.hypot(ndimage.sobel(arr, axis=1), ndimage.sobel(arr, axis=0))
        return _from_array(np.clip(np.rint(mag), 0, 255), "L")
    return gray.filter(ImageFilter.FIND_EDGES)


_KERNELS = {
    "crop": op_crop,
    "rotate": op_rotate,
    "flip": op_flip,
    "resize": op_resize,
    "enhance": op_enhance,
    "grayscale": op_grayscale,
    "autocontrast": op_autocontrast,
    "blur": op_blur,
    "sharpen": op_sharpen,
    "denoise": op_denoise,
    "edge_detect": op_edge_detect,
    "invert": op_invert,
    "equalize": op_equalize,
    "threshold": op_threshold,
}


def apply_op(img: Image.Image, op: CanonicalOp) -> Image.Image:
    """Apply a validated canonical op to an image, returning a new image."""
    kernel = _KERNELS[op.name]
    args = {k: v for k, v in op.args.items() if k != "label"}
    return kernel(img, **args)
