"""Reference CPU evaluation: the fallback execution path and the oracle
against which the shader routes are checked.

Evaluation is dynamic: operator overloads are resolved against runtime
types through the same registry the static inference uses, and arguments
are embedded upward exactly as the cast descriptors prescribe, so dynamic
semantics agree with the typed semantics wherever both are defined.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import builtins as bi
from .errors import RuntimeTypeError, UnboundVariable, UnknownTexture
from .syntax import (
    Apply, Assign, AstNode, BoolLit, FunCall, If, Index, ListLit, NumberLit,
    Program, Repeat, Sequence, UserFunDef, VarRef, walk,
)
from .values import (
    VBool, VComplex, VInt, VList, VReal, Value, as_real, dynamic_type,
    make_vlist, upcast,
)

Rect = tuple  # (xmin, ymin, xmax, ymax)


@dataclass
class PixelBuffer:
    """Float RGBA image; row 0 is the bottom row, matching GL conventions.

    `rect` maps the buffer onto the plot rectangle so textures can be
    sampled in plot coordinates.
    """

    width: int
    height: int
    rect: Rect
    data: np.ndarray  # (height, width, 4) float32

    @classmethod
    def blank(cls, width: int, height: int, rect: Rect) -> "PixelBuffer":
        return cls(width, height, rect, np.zeros((height, width, 4), dtype=np.float32))

    def copy(self) -> "PixelBuffer":
        return PixelBuffer(self.width, self.height, self.rect, self.data.copy())

    def pixel_centers(self):
        xmin, ymin, xmax, ymax = self.rect
        xs = xmin + (np.arange(self.width) + 0.5) * (xmax - xmin) / self.width
        ys = ymin + (np.arange(self.height) + 0.5) * (ymax - ymin) / self.height
        return xs, ys

    def sample(self, x: float, y: float):
        """Bilinear, clamp-to-edge lookup at plot coordinates; returns r, g, b."""
        xmin, ymin, xmax, ymax = self.rect
        u = (x - xmin) / (xmax - xmin)
        v = (y - ymin) / (ymax - ymin)
        return bilinear_rgb(self.data, u, v)

    def to_f32_bytes(self) -> bytes:
        return self.data.astype("<f4").tobytes()

    def meta(self) -> dict:
        return {"width": self.width, "height": self.height, "rect": list(self.rect)}

    def to_png_bytes(self) -> bytes:
        from PIL import Image
        quant = np.floor(np.clip(self.data, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
        img = Image.fromarray(quant[::-1], mode="RGBA")  # PNG rows run top-down
        out = io.BytesIO()
        img.save(out, format="PNG")
        return out.getvalue()


def bilinear_rgb(data: np.ndarray, u: float, v: float):
    height, width = data.shape[:2]
    if not (math.isfinite(u) and math.isfinite(v)):
        u = v = 0.0
    px = u * width - 0.5
    py = v * height - 0.5
    x0 = math.floor(px)
    y0 = math.floor(py)
    fx = px - x0
    fy = py - y0
    x0c = min(max(x0, 0), width - 1)
    x1c = min(max(x0 + 1, 0), width - 1)
    y0c = min(max(y0, 0), height - 1)
    y1c = min(max(y0 + 1, 0), height - 1)
    top = data[y1c, x0c, :3] * (1 - fx) + data[y1c, x1c, :3] * fx
    bot = data[y0c, x0c, :3] * (1 - fx) + data[y0c, x1c, :3] * fx
    rgb = bot * (1 - fy) + top * fy
    return float(rgb[0]), float(rgb[1]), float(rgb[2])


class TextureStore:
    def __init__(self):
        self.buffers: dict = {}

    def get(self, name: str) -> PixelBuffer:
        buf = self.buffers.get(name)
        if buf is None:
            raise UnknownTexture(f"texture {name!r} does not exist")
        return buf

    def put(self, name: str, buf: PixelBuffer) -> None:
        self.buffers[name] = buf

    def sample(self, name: str, x: float, y: float):
        return self.get(name).sample(x, y)


@dataclass
class Environment:
    bindings: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    textures: TextureStore = field(default_factory=TextureStore)
    clock: "object" = lambda: 0.0

    @classmethod
    def for_program(cls, program: Program, bindings=None, textures=None, clock=None):
        return cls(
            bindings=dict(bindings or {}),
            functions=dict(program.functions),
            textures=textures or TextureStore(),
            clock=clock or (lambda: 0.0),
        )


class _Unset(Value):
    """Value of an untaken one-armed if; consuming it is an error."""


UNSET = _Unset()


class _Scope:
    __slots__ = ("parent", "vars", "locals")

    def __init__(self, parent, local_names):
        self.parent = parent
        self.vars: dict = {}
        self.locals = local_names

    def get(self, name: str) -> Value:
        scope = self
        while scope is not None:
            if name in scope.vars:
                return scope.vars[name]
            scope = scope.parent
        raise UnboundVariable(f"variable {name!r} is not bound")

    def set(self, name: str, value: Value) -> None:
        scope = self
        while scope.parent is not None and name not in scope.locals and name not in scope.vars:
            scope = scope.parent
        scope.vars[name] = value


class _Services:
    """Clock and texture access handed to impure builtins."""

    def __init__(self, env: Environment, texture_name=None):
        self.env = env
        self.texture_name = texture_name

    def clock(self):
        return self.env.clock()

    def sample(self, name, x, y):
        return self.env.textures.sample(name, x, y)


def _require(value: Value, what: str) -> Value:
    if isinstance(value, _Unset):
        raise RuntimeTypeError(f"{what} has no value (untaken one-armed if)")
    return value


class Evaluator:
    def __init__(self, env: Environment):
        self.env = env

    def eval(self, node: AstNode, scope: _Scope) -> Value:
        if isinstance(node, FunCall):
            return self._eval_call(node, scope)
        if isinstance(node, VarRef):
            return scope.get(node.name)
        if isinstance(node, NumberLit):
            v = node.value
            if isinstance(v, int):
                return VInt(v)
            if isinstance(v, complex):
                return VComplex(v.real, v.imag)
            return VReal(v)
        if isinstance(node, BoolLit):
            return VBool(node.value)
        if isinstance(node, ListLit):
            return make_vlist(
                _require(self.eval(e, scope), "list element") for e in node.elements
            )
        if isinstance(node, Assign):
            value = _require(self.eval(node.rhs, scope), "assigned value")
            scope.set(node.target, value)
            return value
        if isinstance(node, Sequence):
            out: Value = UNSET
            for e in node.exprs:
                out = self.eval(e, scope)
            return out
        if isinstance(node, If):
            cond = _require(self.eval(node.cond, scope), "condition")
            if not isinstance(cond, VBool):
                raise RuntimeTypeError(
                    f"condition must be boolean, got {dynamic_type(cond)}"
                )
            if cond.flag:
                return self.eval(node.then, scope)
            if node.orelse is not None:
                return self.eval(node.orelse, scope)
            return UNSET
        if isinstance(node, Repeat):
            return self._eval_repeat(node, scope)
        if isinstance(node, Apply):
            return self._eval_apply(node, scope)
        if isinstance(node, Index):
            return self._eval_index(node, scope)
        raise RuntimeTypeError(f"cannot evaluate node kind {node.kind}")

    def _eval_repeat(self, node: Repeat, scope: _Scope) -> Value:
        count = _require(self.eval(node.count, scope), "repeat count")
        if isinstance(count, VBool):
            count = VInt(1 if count.flag else 0)
        if not isinstance(count, VInt):
            raise RuntimeTypeError(f"repeat count must be an integer, got {dynamic_type(count)}")
        inner = _Scope(scope, frozenset((node.counter,)))
        out: Value = UNSET
        for k in range(1, count.num + 1):
            inner.vars[node.counter] = VInt(k)
            out = self.eval(node.body, inner)
        return out

    def _eval_apply(self, node: Apply, scope: _Scope) -> Value:
        source = _require(self.eval(node.source, scope), "apply source")
        if not isinstance(source, VList):
            raise RuntimeTypeError(f"apply source must be a list, got {dynamic_type(source)}")
        inner = _Scope(scope, frozenset((node.var,)))
        results = []
        for item in source.items:
            inner.vars[node.var] = item
            results.append(_require(self.eval(node.body, inner), "apply result"))
        return make_vlist(results)

    def _eval_index(self, node: Index, scope: _Scope) -> Value:
        base = _require(self.eval(node.base, scope), "indexed value")
        idx = _require(self.eval(node.index, scope), "index")
        if isinstance(idx, VBool):
            idx = VInt(1 if idx.flag else 0)
        if not isinstance(base, VList):
            raise RuntimeTypeError(f"only lists can be indexed, got {dynamic_type(base)}")
        if not isinstance(idx, VInt):
            raise RuntimeTypeError(f"index must be an integer, got {dynamic_type(idx)}")
        if not 1 <= idx.num <= len(base.items):
            raise RuntimeTypeError(
                f"index {idx.num} out of bounds for list of length {len(base.items)}"
            )
        return base.items[idx.num - 1]

    def _eval_call(self, node: FunCall, scope: _Scope) -> Value:
        fn = self.env.functions.get((node.name, len(node.args)))
        if fn is not None:
            return self._eval_user_call(fn, node, scope)
        args = [_require(self.eval(a, scope), "argument") for a in node.args]
        arg_types = tuple(dynamic_type(a) for a in args)
        sig = bi.min_sign(node.name, arg_types)
        if sig is None:
            pretty_args = ", ".join(str(t) for t in arg_types)
            raise RuntimeTypeError(f"{node.name} is not applicable to ({pretty_args})")
        cast_args = [upcast(a, t) for a, t in zip(args, sig.args)]
        services = _Services(self.env, node.texture)
        return bi.cpu_call(node.name, sig, cast_args, services)

    def _eval_user_call(self, fn: UserFunDef, node: FunCall, scope: _Scope) -> Value:
        args = [_require(self.eval(a, scope), "argument") for a in node.args]
        local_names = frozenset(fn.params) | {
            n.target for n in walk(fn.body) if isinstance(n, Assign)
        }
        inner = _Scope(scope, local_names)
        for p, a in zip(fn.params, args):
            inner.vars[p] = a
        return self.eval(fn.body, inner)


def eval_expr(node: AstNode, env: Environment) -> Value:
    """Evaluate one expression in the environment (pre: free vars bound)."""
    scope = _Scope(None, frozenset())
    scope.vars.update(env.bindings)
    return Evaluator(env).eval(node, scope)


def assigned_names(statements) -> frozenset:
    return frozenset(
        n.target for s in statements for n in walk(s) if isinstance(n, Assign)
    )


def run_statements(statements, env: Environment, extra_bindings=None,
                   locals_=None) -> Value:
    """Evaluate a statement list in a fresh local scope over the environment."""
    if locals_ is None:
        locals_ = assigned_names(statements)
    base = _Scope(None, frozenset())
    base.vars.update(env.bindings)
    scope = _Scope(base, locals_ | frozenset(extra_bindings or {}))
    scope.vars.update(extra_bindings or {})
    ev = Evaluator(env)
    out: Value = UNSET
    for stmt in statements:
        out = ev.eval(stmt, scope)
    return out


def value_to_rgba(value: Value) -> tuple:
    """The color mapping: real -> gray, list<3> -> rgb, list<4> -> rgba."""
    if isinstance(value, (VReal, VInt, VBool)):
        g = as_real(value)
        return (g, g, g, 1.0)
    if isinstance(value, VList) and len(value.items) in (3, 4):
        channels = [as_real(c) for c in value.items]
        if len(channels) == 3:
            channels.append(1.0)
        return tuple(channels)
    raise RuntimeTypeError(
        f"plotted value must be real or a 3/4-component list, got {dynamic_type(value)}"
    )


def _clamp_channel(c: float) -> float:
    if math.isnan(c):
        return 0.0
    return min(1.0, max(0.0, c))


def colorplot_cpu(program_or_stmts, binding_for_pixel, rect: Rect,
                  resolution: tuple, env: Environment) -> PixelBuffer:
    """Evaluate a program per pixel; the running variable is bound to the
    pixel-center coordinate by `binding_for_pixel(x, y) -> dict`."""
    if isinstance(program_or_stmts, Program):
        statements = program_or_stmts.statements
    else:
        statements = list(program_or_stmts)
    width, height = resolution
    buf = PixelBuffer.blank(width, height, rect)
    xs, ys = buf.pixel_centers()
    locals_ = assigned_names(statements)
    for j in range(height):
        for i in range(width):
            bindings = binding_for_pixel(float(xs[i]), float(ys[j]))
            try:
                value = run_statements(statements, env, extra_bindings=bindings,
                                       locals_=locals_)
                rgba = value_to_rgba(_require(value, "plotted value"))
            except (RuntimeTypeError, UnboundVariable, UnknownTexture) as exc:
                raise type(exc)(
                    f"{exc} [pixel ({i},{j}), coordinate ({xs[i]:.6g},{ys[j]:.6g})]"
                ) from exc
            buf.data[j, i] = [_clamp_channel(c) for c in rgba]
    return buf


def buffers_close(a: PixelBuffer, b: PixelBuffer, tol: float) -> bool:
    return bool(np.all(np.abs(a.data - b.data) <= tol))
