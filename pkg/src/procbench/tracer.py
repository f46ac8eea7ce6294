"""AST extraction of canonical visual operations from guest source.

Parses agent-written code, resolves import aliases and single-assignment
constants inside the block, and emits canonical ops for every call matching
the idiom table. Calls whose arguments cannot be folded to constants, or
that sit inside loops/conditionals/function bodies, are emitted once with
confidence="dynamic". The extractor is a pure function of (source, table).
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .ops import CanonicalOp, normalize_bbox

__all__ = ["ExtractedOp", "ExtractionResult", "IdiomTable", "extract_ops", "normalize_extracted"]


class IdiomTableError(ValueError):
    pass


@dataclass(frozen=True)
class ExtractedOp:
    op: CanonicalOp
    confidence: str  # "static" | "dynamic"
    span: tuple[int, int, int, int]  # (line, col, end_line, end_col)
    pixel_args: bool = False


@dataclass
class ExtractionResult:
    ops: list[ExtractedOp] = field(default_factory=list)
    parse_error: bool = False


class IdiomTable:
    """Pattern table, loaded from a data file so new idioms need no code change."""

    def __init__(self, entries: list[dict[str, Any]]):
        self.method_entries: dict[str, list[dict[str, Any]]] = {}
        self.function_entries: dict[str, dict[str, Any]] = {}
        for entry in entries:
            kind = entry.get("kind")
            if kind == "method":
                bucket = self.method_entries.setdefault(entry["name"], [])
                if any(e.get("receiver") == entry.get("receiver") for e in bucket):
                    raise IdiomTableError(f"ambiguous method pattern {entry['name']!r}")
                bucket.append(entry)
            elif kind == "function":
                if entry["qual"] in self.function_entries:
                    raise IdiomTableError(f"ambiguous function pattern {entry['qual']!r}")
                self.function_entries[entry["qual"]] = entry
            else:
                raise IdiomTableError(f"bad entry kind {kind!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "IdiomTable":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f)["entries"])

    @classmethod
    def default(cls) -> "IdiomTable":
        data = resources.files("procbench.data").joinpath("idioms.json").read_text("utf-8")
        return cls(json.loads(data)["entries"])


class _Unresolved(Exception):
    pass


# Modules whose attribute calls are candidate function patterns.
_KNOWN_ROOTS = {"PIL", "cv2", "numpy", "scipy", "matplotlib"}


class _Extractor(ast.NodeVisitor):
    def __init__(self, table: IdiomTable):
        self.table = table
        self.aliases: dict[str, str] = {}  # local name -> dotted module/object path
        self.assign_counts: dict[str, int] = {}
        self.assign_values: dict[str, ast.expr] = {}
        self.found: list[tuple[tuple[int, int], ExtractedOp]] = []
        self._depth = 0  # >0 inside loop/conditional/function body

    # -- pre-pass: imports and single assignments --------------------------

    def scan_bindings(self, tree: ast.AST) -> None:
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for a in node.names:
                    self.aliases[a.asname or a.name.split(".")[0]] = a.name if a.asname else a.name.split(".")[0]
            elif isinstance(node, ast.ImportFrom) and node.module:
                for a in node.names:
                    self.aliases[a.asname or a.name] = f"{node.module}.{a.name}"
            elif isinstance(node, ast.Assign) and len(node.targets) == 1 and isinstance(node.targets[0], ast.Name):
                name = node.targets[0].id
                self.assign_counts[name] = self.assign_counts.get(name, 0) + 1
                self.assign_values[name] = node.value
            elif isinstance(node, (ast.AugAssign, ast.AnnAssign)) and isinstance(getattr(node, "target", None), ast.Name):
                self.assign_counts[node.target.id] = self.assign_counts.get(node.target.id, 0) + 2

    def _value_of(self, name: str) -> ast.expr:
        if self.assign_counts.get(name) == 1:
            return self.assign_values[name]
        raise _Unresolved(name)

    # -- name / qual resolution -------------------------------------------

    def _resolve_qual(self, node: ast.expr) -> str | None:
        """Dotted path for Name/Attribute chains rooted at an imported module."""
        parts: list[str] = []
        cur = node
        while isinstance(cur, ast.Attribute):
            parts.append(cur.attr)
            cur = cur.value
        if not isinstance(cur, ast.Name):
            return None
        root = self.aliases.get(cur.id)
        if root is None:
            return None
        return ".".join([root, *reversed(parts)]) if parts else root

    def _is_module_path(self, node: ast.expr) -> bool:
        qual = self._resolve_qual(node)
        return qual is not None and qual.split(".")[0] in _KNOWN_ROOTS

    # -- constant folding ---------------------------------------------------

    def _const(self, node: ast.expr, depth: int = 0) -> Any:
        if depth > 8:
            raise _Unresolved("depth")
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, (ast.Tuple, ast.List)):
            return [self._const(e, depth + 1) for e in node.elts]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self._const(node.operand, depth + 1)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                return -v if isinstance(node.op, ast.USub) else v
            raise _Unresolved("unary")
        if isinstance(node, ast.Name):
            return self._const(self._value_of(node.id), depth + 1)
        raise _Unresolved(ast.dump(node)[:40])

    def _dispatch_key(self, node: ast.expr) -> tuple[str, ast.Call | None]:
        """Key for dispatch maps: last attribute segment, constant repr, or inner call name."""
        if isinstance(node, ast.Call):
            inner = self._dispatch_key(node.func)[0]
            return inner, node
        if isinstance(node, ast.Attribute):
            return node.attr, None
        if isinstance(node, ast.Name):
            if node.id in self.aliases:
                return self.aliases[node.id].split(".")[-1], None
            try:
                return self._dispatch_key(self._value_of(node.id))
            except _Unresolved:
                return node.id, None
        try:
            value = self._const(node)
        except _Unresolved:
            raise
        if isinstance(value, str):
            return value, None
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return str(int(value)) if float(value).is_integer() else str(value), None
        raise _Unresolved("dispatch")

    # -- argument extraction -------------------------------------------------

    def _find_arg(self, call: ast.Call, spec: dict[str, Any]) -> ast.expr | None:
        kw = spec.get("kw")
        if kw:
            for k in call.keywords:
                if k.arg == kw:
                    return k.value
        pos = spec.get("pos")
        if pos is not None and pos < len(call.args):
            return call.args[pos]
        return None

    def _convert(self, value: Any, typ: str, out: dict[str, Any], to: str) -> None:
        if typ == "box4":
            if not (isinstance(value, list) and len(value) == 4 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
                raise _Unresolved("box4")
            out[to] = [v if isinstance(v, int) else float(v) for v in value]
        elif typ == "size2":
            if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
                raise _Unresolved("size2")
            out["width"], out["height"] = value
        elif typ == "rot90_k":
            if not isinstance(value, int) or isinstance(value, bool):
                raise _Unresolved("rot90_k")
            out[to] = (90 * value) % 360
        elif typ == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise _Unresolved("number")
            out[to] = value
        elif typ == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise _Unresolved("int")
            out[to] = value
        elif typ == "bool":
            if not isinstance(value, bool):
                raise _Unresolved("bool")
            out[to] = value
        else:
            out[to] = value

    def _extract_args(self, call: ast.Call, specs: list[dict[str, Any]], inner: ast.Call | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for spec in specs:
            target = inner if spec.get("from_inner") else call
            node = self._find_arg(target, spec) if target is not None else None
            if node is None:
                if "default" in spec:
                    self._convert(spec["default"], spec.get("type", "any"), out, spec["to"])
                continue
            self._convert(self._const(node), spec.get("type", "any"), out, spec["to"])
        return out

    # -- entry matching --------------------------------------------------------

    def _receiver_matches(self, call: ast.Call, receiver_qual: str) -> bool:
        assert isinstance(call.func, ast.Attribute)
        recv = call.func.value
        if isinstance(recv, ast.Name):
            try:
                recv = self._value_of(recv.id)
            except _Unresolved:
                return False
        if not isinstance(recv, ast.Call):
            return False
        qual = self._resolve_qual(recv.func)
        if qual is None:
            return False
        return qual == receiver_qual or qual.split(".")[-1] == receiver_qual.split(".")[-1]

    def _match_call(self, call: ast.Call) -> tuple[dict[str, Any], ast.Call | None] | None:
        """Return (resolved entry view, inner dispatch call) or None."""
        func = call.func
        if isinstance(func, ast.Attribute) and not self._is_module_path(func.value):
            entries = self.table.method_entries.get(func.attr, [])
            for entry in entries:
                receiver = entry.get("receiver")
                if receiver and not self._receiver_matches(call, receiver):
                    continue
                return self._resolve_dispatch(entry, call)
            return None
        qual = self._resolve_qual(func)
        if qual and qual in self.table.function_entries:
            return self._resolve_dispatch(self.table.function_entries[qual], call)
        return None

    def _resolve_dispatch(self, entry: dict[str, Any], call: ast.Call) -> tuple[dict[str, Any], ast.Call | None] | None:
        dispatch = entry.get("dispatch")
        if not dispatch:
            return entry, None
        node = self._find_arg(call, dispatch)
        if node is None:
            return None
        try:
            key, inner = self._dispatch_key(node)
        except _Unresolved:
            return None
        target = dispatch["map"].get(key)
        if target is None:
            return None
        view = dict(entry)
        view.pop("dispatch", None)
        view.update(target)
        if "inner_args" in target:
            view["args"] = [dict(spec, from_inner=True) for spec in target["inner_args"]]
        return view, inner

    # -- traversal ----------------------------------------------------------------

    _DYNAMIC_SCOPES = (
        ast.For,
        ast.AsyncFor,
        ast.While,
        ast.If,
        ast.Try,
        ast.With,
        ast.FunctionDef,
        ast.AsyncFunctionDef,
        ast.ListComp,
        ast.SetComp,
        ast.DictComp,
        ast.GeneratorExp,
        ast.Lambda,
    )

    def generic_visit(self, node: ast.AST) -> None:
        dynamic = isinstance(node, self._DYNAMIC_SCOPES)
        if dynamic:
            self._depth += 1
        super().generic_visit(node)
        if dynamic:
            self._depth -= 1

    def visit_Call(self, node: ast.Call) -> None:
        matched = self._match_call(node)
        if matched is not None:
            view, inner = matched
            confidence = "static" if self._depth == 0 else "dynamic"
            args: dict[str, Any] = dict(view.get("set", {}))
            try:
                args.update(self._extract_args(node, view.get("args", []), inner))
            except _Unresolved:
                confidence = "dynamic"
            span = (node.lineno, node.col_offset, node.end_lineno or node.lineno, node.end_col_offset or 0)
            self.found.append(
                (
                    (node.lineno, node.col_offset),
                    ExtractedOp(
                        op=CanonicalOp(view["canonical"], args),
                        confidence=confidence,
                        span=span,
                        pixel_args=bool(view.get("pixel_args", False)),
                    ),
                )
            )
        self.generic_visit(node)


def extract_ops(source: str, table: IdiomTable | None = None) -> ExtractionResult:
    """Extract canonical ops from one guest code block, in source order.

    Parse failures yield an empty op list with ``parse_error=True``; the
    scorer treats such a block as tool-absent, never as a crash.
    """
    table = table or IdiomTable.default()
    try:
        tree = ast.parse(source)
    except SyntaxError:
        return ExtractionResult(ops=[], parse_error=True)
    extractor = _Extractor(table)
    extractor.scan_bindings(tree)
    extractor.visit(tree)
    extractor.found.sort(key=lambda item: item[0])
    return ExtractionResult(ops=[op for _pos, op in extractor.found], parse_error=False)


def normalize_extracted(ex: ExtractedOp, image_dims: tuple[int, int] | None) -> CanonicalOp:
    """Map pixel-space spatial args onto the 0-1000 canonical convention.

    With unknown dims the op is returned unnormalized (still pixel-space).
    """
    if not ex.pixel_args or "bbox" not in ex.op.args:
        return ex.op
    if not image_dims:
        return ex.op
    width, height = image_dims
    args = {k: v for k, v in ex.op.args.items() if k != "bbox"}
    args["bbox_2d"] = normalize_bbox(ex.op.args["bbox"], width, height)
    return CanonicalOp(ex.op.name, args)
