"""Source body of the guest preamble (kept as text, never imported here).

The body runs after a three-line header defining _GS_SAVE_DIR, _GS_ORIGINAL
and _GS_START_INDEX. Design constraints: stdout is never touched, every
hook is individually guarded, nested library-internal calls are not logged
(re-entrancy flag), and a second injection is a no-op via a builtins
sentinel.
"""

PREAMBLE_BODY = r'''
import builtins as _gs_builtins


def _gs_install():
    save_dir = _GS_SAVE_DIR
    original = _GS_ORIGINAL
    start_index = int(_GS_START_INDEX)
    import atexit as _gs_atexit
    import importlib.util as _gs_ilu
    import json as _gs_json
    import os as _gs_os
    import re as _gs_re
    import sys as _gs_sys

    _gs_os.environ.setdefault("ORIGINAL_IMAGE_PATH", original)
    _gs_os.environ.setdefault("PROCESSED_IMAGE_SAVE_PATH", save_dir)

    for _gs_lib in ("PIL", "cv2", "numpy", "matplotlib", "scipy"):
        try:
            if _gs_ilu.find_spec(_gs_lib) is None:
                _gs_sys.stderr.write("[shim] library unavailable: %s\n" % _gs_lib)
        except Exception:
            _gs_sys.stderr.write("[shim] library unavailable: %s\n" % _gs_lib)

    log_path = _gs_os.path.join(_gs_os.getcwd(), "op_log.jsonl")
    state = {"seq": 0, "next": start_index, "in_hook": False}
    logged_files = set()
    canonical_re = _gs_re.compile(r"^(transformed|downloaded)_image_(\d+)\.png$")
    try:
        preexisting = set(_gs_os.listdir(save_dir))
    except OSError:
        preexisting = set()

    def log_entry(op_name, args, output_file=None):
        state["seq"] += 1
        entry = {"op_name": op_name, "args": args, "output_file": output_file, "seq": state["seq"]}
        try:
            with open(log_path, "a", encoding="utf-8") as f:
                f.write(_gs_json.dumps(entry) + "\n")
        except Exception:
            pass
        if output_file:
            logged_files.add(_gs_os.path.basename(str(output_file)))

    def canonical_target(path):
        """(final path, redirected?) for a guest-requested save destination."""
        name = _gs_os.path.basename(str(path))
        parent = _gs_os.path.dirname(_gs_os.path.abspath(str(path)))
        if canonical_re.match(name) and parent == _gs_os.path.abspath(save_dir):
            return str(path), False
        while True:
            candidate = _gs_os.path.join(save_dir, "transformed_image_%d.png" % state["next"])
            state["next"] += 1
            if not _gs_os.path.exists(candidate):
                return candidate, True

    def guarded(fn):
        """Run fn(); nested hooked calls inside it are passed through unlogged."""

        def runner(orig, log_after, *args, **kwargs):
            if state["in_hook"]:
                return orig(*args, **kwargs)
            state["in_hook"] = True
            try:
                result = orig(*args, **kwargs)
            finally:
                state["in_hook"] = False
            try:
                log_after(result)
            except Exception:
                log_entry("unknown", {})
            return result

        return runner

    _gs_run = guarded(None)

    # ---- PIL hooks ------------------------------------------------------
    try:
        from PIL import Image as _gs_Image

        orig_save = _gs_Image.Image.save

        def save_hook(self, fp=None, format=None, **params):
            if state["in_hook"] or not isinstance(fp, (str, bytes, _gs_os.PathLike)):
                return orig_save(self, fp, format, **params)
            target, redirected = canonical_target(fp)
            state["in_hook"] = True
            try:
                if redirected:
                    result = orig_save(self, target)
                else:
                    result = orig_save(self, fp, format, **params)
            finally:
                state["in_hook"] = False
            log_entry("save", {"path": str(fp)}, output_file=target)
            return result

        _gs_Image.Image.save = save_hook

        def hook_method(name, log_after):
            orig = getattr(_gs_Image.Image, name)

            def wrapper(self, *args, **kwargs):
                return _gs_run(lambda *a, **k: orig(self, *a, **k), lambda _r: log_after(args, kwargs), *args, **kwargs)

            setattr(_gs_Image.Image, name, wrapper)

        def arg_at(args, kwargs, pos, kw):
            if kw in kwargs:
                return kwargs[kw]
            if len(args) > pos:
                return args[pos]
            return None

        hook_method(
            "crop",
            lambda a, k: log_entry("crop", {"bbox": list(arg_at(a, k, 0, "box"))} if arg_at(a, k, 0, "box") else {}),
        )
        hook_method("rotate", lambda a, k: log_entry("rotate", {"angle": arg_at(a, k, 0, "angle")}))

        transpose_map = {
            0: ("flip", {"direction": "horizontal"}),
            1: ("flip", {"direction": "vertical"}),
            2: ("rotate", {"angle": 90}),
            3: ("rotate", {"angle": 180}),
            4: ("rotate", {"angle": 270}),
        }

        def log_transpose(a, k):
            method = arg_at(a, k, 0, "method")
            try:
                mapped = transpose_map.get(int(method))
            except (TypeError, ValueError):
                mapped = None
            if mapped:
                log_entry(mapped[0], dict(mapped[1]))

        hook_method("transpose", log_transpose)

        def log_resize(a, k):
            size = arg_at(a, k, 0, "size")
            if size and len(size) == 2:
                log_entry("resize", {"width": int(size[0]), "height": int(size[1])})

        hook_method("resize", log_resize)

        def log_convert(a, k):
            if arg_at(a, k, 0, "mode") == "L":
                log_entry("grayscale", {})

        hook_method("convert", log_convert)

        filter_map = {
            "GaussianBlur": ("blur", "radius"),
            "BoxBlur": ("blur", "radius"),
            "SHARPEN": ("sharpen", None),
            "EDGE_ENHANCE": ("sharpen", None),
            "UnsharpMask": ("sharpen", None),
            "FIND_EDGES": ("edge_detect", "simple"),
            "MedianFilter": ("denoise", None),
            "SMOOTH": ("denoise", None),
            "SMOOTH_MORE": ("denoise", None),
        }

        def log_filter(a, k):
            flt = arg_at(a, k, 0, "filter")
            name = flt.__name__ if isinstance(flt, type) else type(flt).__name__
            mapped = filter_map.get(name)
            if not mapped:
                return
            canonical, extra = mapped
            if canonical == "blur" and extra:
                radius = getattr(flt, "radius", None)
                log_entry("blur", {"radius": radius} if radius is not None else {})
            elif canonical == "edge_detect":
                log_entry("edge_detect", {"method": "simple"})
            else:
                log_entry(canonical, {})

        hook_method("filter", log_filter)
    except Exception:
        _gs_sys.stderr.write("[shim] PIL image hooks unavailable\n")

    try:
        from PIL import ImageEnhance as _gs_Enh

        def guard_init(cls):
            # Enhancer constructors convert() internally; keep that unlogged.
            orig_init = cls.__init__

            def wrapper(self, image):
                if state["in_hook"]:
                    return orig_init(self, image)
                state["in_hook"] = True
                try:
                    return orig_init(self, image)
                finally:
                    state["in_hook"] = False

            cls.__init__ = wrapper

        for extra in ("Color",):
            if hasattr(_gs_Enh, extra):
                guard_init(getattr(_gs_Enh, extra))

        for cls_name, arg_name in (("Brightness", "brightness"), ("Contrast", "contrast"), ("Sharpness", "sharpness")):
            cls = getattr(_gs_Enh, cls_name)
            guard_init(cls)
            orig_enhance = cls.enhance

            def make(orig, key):
                def wrapper(self, factor):
                    return _gs_run(lambda f: orig(self, f), lambda _r: log_entry("enhance", {key: factor}), factor)

                return wrapper

            cls.enhance = make(orig_enhance, arg_name)
    except Exception:
        _gs_sys.stderr.write("[shim] PIL enhancer hooks unavailable\n")

    try:
        from PIL import ImageOps as _gs_Ops

        def hook_function(module, name, log_after):
            orig = getattr(module, name)

            def wrapper(*args, **kwargs):
                return _gs_run(orig, lambda _r: log_after(args, kwargs), *args, **kwargs)

            setattr(module, name, wrapper)

        hook_function(_gs_Ops, "grayscale", lambda a, k: log_entry("grayscale", {}))
        hook_function(_gs_Ops, "invert", lambda a, k: log_entry("invert", {}))
        hook_function(_gs_Ops, "equalize", lambda a, k: log_entry("equalize", {}))
        hook_function(_gs_Ops, "mirror", lambda a, k: log_entry("flip", {"direction": "horizontal"}))
        hook_function(_gs_Ops, "flip", lambda a, k: log_entry("flip", {"direction": "vertical"}))

        def log_autocontrast(a, k):
            cutoff = k.get("cutoff", a[1] if len(a) > 1 else None)
            log_entry("autocontrast", {"cutoff": cutoff} if cutoff is not None else {})

        hook_function(_gs_Ops, "autocontrast", log_autocontrast)
    except Exception:
        _gs_sys.stderr.write("[shim] PIL ImageOps hooks unavailable\n")

    # ---- numpy hooks -----------------------------------------------------
    try:
        import numpy as _gs_np

        def hook_np(name, log_after):
            orig = getattr(_gs_np, name)

            def wrapper(*args, **kwargs):
                return _gs_run(orig, lambda _r: log_after(args, kwargs), *args, **kwargs)

            setattr(_gs_np, name, wrapper)

        hook_np("flipud", lambda a, k: log_entry("flip", {"direction": "vertical"}))
        hook_np("fliplr", lambda a, k: log_entry("flip", {"direction": "horizontal"}))

        def log_rot90(a, k):
            raw = k.get("k", a[1] if len(a) > 1 else 1)
            try:
                log_entry("rotate", {"angle": (90 * int(raw)) % 360})
            except (TypeError, ValueError):
                log_entry("rotate", {})

        hook_np("rot90", log_rot90)
    except Exception:
        _gs_sys.stderr.write("[shim] numpy hooks unavailable\n")

    # ---- cv2 hooks (lazy: applied when the guest imports cv2) -------------
    def hook_cv2(cv2):
        if getattr(cv2, "_gs_hooked", False):
            return
        cv2._gs_hooked = True

        def hook(name, log_after):
            orig = getattr(cv2, name, None)
            if orig is None:
                return

            def wrapper(*args, **kwargs):
                return _gs_run(orig, lambda _r: log_after(args, kwargs), *args, **kwargs)

            setattr(cv2, name, wrapper)

        def arg_at(args, kwargs, pos, kw):
            if kw in kwargs:
                return kwargs[kw]
            if len(args) > pos:
                return args[pos]
            return None

        hook("Canny", lambda a, k: log_entry("edge_detect", {"method": "canny"}))
        hook("Sobel", lambda a, k: log_entry("edge_detect", {"method": "sobel"}))
        hook("GaussianBlur", lambda a, k: log_entry("blur", {}))
        hook("medianBlur", lambda a, k: log_entry("denoise", {}))
        hook("fastNlMeansDenoising", lambda a, k: log_entry("denoise", {}))
        hook("fastNlMeansDenoisingColored", lambda a, k: log_entry("denoise", {}))
        hook("equalizeHist", lambda a, k: log_entry("equalize", {}))
        hook("bitwise_not", lambda a, k: log_entry("invert", {}))

        thresh_modes = {0: "binary", 1: "binary_inv", 2: "trunc", 3: "tozero"}

        def log_threshold(a, k):
            mode = thresh_modes.get(int(arg_at(a, k, 3, "type")) & 7)
            if mode:
                log_entry("threshold", {"value": int(arg_at(a, k, 1, "thresh")), "mode": mode})

        hook("threshold", log_threshold)

        def log_resize(a, k):
            dsize = arg_at(a, k, 1, "dsize")
            if dsize and len(dsize) == 2 and dsize[0] and dsize[1]:
                log_entry("resize", {"width": int(dsize[0]), "height": int(dsize[1])})
            else:
                fx = k.get("fx")
                log_entry("resize", {"scale": fx} if fx else {})

        hook("resize", log_resize)

        def log_flip(a, k):
            code = arg_at(a, k, 1, "flipCode")
            direction = "both" if code < 0 else ("horizontal" if code > 0 else "vertical")
            log_entry("flip", {"direction": direction})

        hook("flip", log_flip)

        rotate_angles = {0: 270, 1: 180, 2: 90}

        def log_rotate(a, k):
            angle = rotate_angles.get(int(arg_at(a, k, 1, "rotateCode")))
            if angle is not None:
                log_entry("rotate", {"angle": angle})

        hook("rotate", log_rotate)

        gray_codes = {6, 7, 10, 11}

        def log_cvt(a, k):
            if int(arg_at(a, k, 1, "code")) in gray_codes:
                log_entry("grayscale", {})

        hook("cvtColor", log_cvt)

        orig_imwrite = getattr(cv2, "imwrite", None)
        if orig_imwrite is not None:

            def imwrite_hook(filename, img, *args):
                if state["in_hook"]:
                    return orig_imwrite(filename, img, *args)
                target, redirected = canonical_target(filename)
                state["in_hook"] = True
                try:
                    result = orig_imwrite(target if redirected else filename, img, *args)
                finally:
                    state["in_hook"] = False
                log_entry("save", {"path": str(filename)}, output_file=target)
                return result

            cv2.imwrite = imwrite_hook

    def hook_plt(pyplot):
        if getattr(pyplot, "_gs_hooked", False):
            return
        pyplot._gs_hooked = True
        orig_savefig = pyplot.savefig

        def savefig_hook(fname, *args, **kwargs):
            if state["in_hook"] or not isinstance(fname, (str, _gs_os.PathLike)):
                return orig_savefig(fname, *args, **kwargs)
            target, redirected = canonical_target(fname)
            state["in_hook"] = True
            try:
                result = orig_savefig(target if redirected else fname, *args, **kwargs)
            finally:
                state["in_hook"] = False
            log_entry("save", {"path": str(fname)}, output_file=target)
            return result

        pyplot.savefig = savefig_hook

    orig_import = _gs_builtins.__import__

    def import_hook(name, *args, **kwargs):
        module = orig_import(name, *args, **kwargs)
        try:
            if name == "cv2" or name.startswith("cv2."):
                hook_cv2(_gs_sys.modules.get("cv2", module))
            if name == "matplotlib.pyplot" or (name == "matplotlib" and "matplotlib.pyplot" in _gs_sys.modules):
                hook_plt(_gs_sys.modules["matplotlib.pyplot"])
        except Exception:
            pass
        return module

    _gs_builtins.__import__ = import_hook
    if "cv2" in _gs_sys.modules:
        try:
            hook_cv2(_gs_sys.modules["cv2"])
        except Exception:
            pass

    # ---- exit sweep: every save-dir file gets a manifest entry -------------
    def sweep():
        try:
            names = sorted(_gs_os.listdir(save_dir))
        except OSError:
            return
        for name in names:
            if name in preexisting or name in logged_files:
                continue
            if not name.lower().endswith((".png", ".jpg", ".jpeg", ".bmp", ".webp", ".gif", ".tif", ".tiff")):
                continue
            log_entry("save", {"path": name}, output_file=_gs_os.path.join(save_dir, name))

    _gs_atexit.register(sweep)


if not getattr(_gs_builtins, "_GS_SHIM_ACTIVE", False):
    _gs_builtins._GS_SHIM_ACTIVE = True
    try:
        _gs_install()
    except Exception as _gs_exc:
        import sys as _gs_sys_fallback

        _gs_sys_fallback.stderr.write("[shim] instrumentation disabled: %r\n" % (_gs_exc,))
del _gs_install
del _gs_builtins
'''
