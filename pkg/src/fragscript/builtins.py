"""Builtin function registry: overload signatures, CPU and GLSL implementations.

For every builtin and argument-type tuple, `min_sign` returns the weakest
applicable overload (or None when no overload applies, which callers record
as the error type).  The induced return-type map is monotone; the registry
self-check in the tests sweeps a probe grid to verify overload tables are
unambiguous.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import ArityMismatch, RuntimeTypeError, UnknownBuiltin
from .lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, ListType, TypeTerm,
    is_scalar, is_subtype, join, make_list,
)
from .values import (
    VBool, VComplex, VInt, VList, VReal, Value, as_complex, as_real,
)


@dataclass(frozen=True)
class Signature:
    args: tuple
    ret: TypeTerm

    def __str__(self) -> str:
        return "(" + ", ".join(str(a) for a in self.args) + ") -> " + str(self.ret)


@dataclass
class BuiltinEntry:
    name: str
    arity: int
    exact: list = field(default_factory=list)       # concrete Signatures, weakest first
    rules: list = field(default_factory=list)       # fns argtypes -> Signature | None
    pure: bool = True
    doc: list = field(default_factory=list)         # human-readable overload lines


REGISTRY: dict = {}


def _register(name, arity, exact=(), rules=(), pure=True, doc=()):
    REGISTRY[(name, arity)] = BuiltinEntry(
        name, arity, list(exact), list(rules), pure, list(doc) or [str(s) for s in exact]
    )


def _num(t: TypeTerm) -> TypeTerm:
    """Collapse const<k> to int for arithmetic purposes."""
    return INT if isinstance(t, ConstInt) else t


def _chain(t: TypeTerm) -> bool:
    return is_scalar(t)


def _leaf(t: TypeTerm) -> TypeTerm:
    while isinstance(t, ListType):
        t = t.elem
    return t


def _with_leaf(t: TypeTerm, leaf: TypeTerm) -> TypeTerm:
    if isinstance(t, ListType):
        return make_list(t.length, _with_leaf(t.elem, leaf))
    return leaf


def _flat_scalar_list(t: TypeTerm) -> bool:
    return isinstance(t, ListType) and _chain(t.elem)


# -- parametric overload rules ----------------------------------------------

def _rule_add(args):
    a, b = args
    t = _elem_add(a, b)
    return Signature((t, t), t) if t is not None else None


def _elem_add(a, b):
    if _chain(a) and _chain(b):
        return join(join(_num(a), _num(b)), INT)
    if isinstance(a, ListType) and isinstance(b, ListType) and a.length == b.length:
        e = _elem_add(a.elem, b.elem)
        return make_list(a.length, e) if e is not None else None
    return None


def _rule_mul(args):
    a, b = args
    if _chain(a) and _chain(b):
        t = join(join(_num(a), _num(b)), INT)
        return Signature((t, t), t)
    if _chain(a) and isinstance(b, ListType) and _chain(_leaf(b)):
        g = join(join(_num(a), _num(_leaf(b))), INT)
        lifted = _with_leaf(b, g)
        return Signature((g, lifted), lifted)
    if _chain(b) and isinstance(a, ListType) and _chain(_leaf(a)):
        g = join(join(_num(b), _num(_leaf(a))), INT)
        lifted = _with_leaf(a, g)
        return Signature((lifted, g), lifted)
    if (
        isinstance(a, ListType) and isinstance(b, ListType)
        and a.length == b.length and _chain(a.elem) and _chain(b.elem)
    ):
        g = join(join(_num(a.elem), _num(b.elem)), INT)
        lst = make_list(a.length, g)
        return Signature((lst, lst), g)  # dot product
    return None


def _rule_div(args):
    a, b = args
    if _chain(b):
        if _chain(a):
            g = join(join(_num(a), _num(b)), REAL)
            return Signature((g, g), g)
        if isinstance(a, ListType) and _chain(_leaf(a)):
            g = join(join(_num(_leaf(a)), _num(b)), REAL)
            lifted = _with_leaf(a, g)
            return Signature((lifted, g), lifted)
        return None
    t = _eq_shape_div(a, b)
    return Signature((t, t), t) if t is not None else None


def _eq_shape_div(a, b):
    """Element-wise division needs recursively equal shapes."""
    if _chain(a) and _chain(b):
        return join(join(_num(a), _num(b)), REAL)
    if isinstance(a, ListType) and isinstance(b, ListType) and a.length == b.length:
        e = _eq_shape_div(a.elem, b.elem)
        return make_list(a.length, e) if e is not None else None
    return None


def _rule_neg(args):
    (a,) = args
    t = _elem_neg(a)
    return Signature((t,), t) if t is not None else None


def _elem_neg(a):
    if _chain(a):
        return join(_num(a), INT)
    if isinstance(a, ListType):
        e = _elem_neg(a.elem)
        return make_list(a.length, e) if e is not None else None
    return None


def _rule_norm(args):
    (a,) = args
    if _flat_scalar_list(a):
        g = join(_num(a.elem), REAL)
        return Signature((make_list(a.length, g),), REAL)
    return None


def _rule_minmax_list(args):
    (a,) = args
    if _flat_scalar_list(a):
        g = join(_num(a.elem), INT)
        if g is COMPLEX:
            return None
        return Signature((make_list(a.length, g),), g)
    return None


def _sig(*parts):
    return Signature(tuple(parts[:-1]), parts[-1])


_register("+", 2, rules=[_rule_add], doc=[
    "(int, int) -> int  /  (real, real) -> real  /  (complex, complex) -> complex",
    "(list<n, t>, list<n, t>) -> list<n, t>   element-wise",
])
_register("-", 2, rules=[_rule_add], doc=[
    "(int, int) -> int  /  (real, real) -> real  /  (complex, complex) -> complex",
    "(list<n, t>, list<n, t>) -> list<n, t>   element-wise",
])
_register("*", 2, rules=[_rule_mul], doc=[
    "(int, int) -> int  /  (real, real) -> real  /  (complex, complex) -> complex",
    "(t, list<n, t>) -> list<n, t>  and symmetric   scaling",
    "(list<n, t>, list<n, t>) -> t   dot product",
])
_register("/", 2, rules=[_rule_div], doc=[
    "(real, real) -> real  /  (complex, complex) -> complex",
    "(list<n, t>, t) -> list<n, t>  and element-wise on equal shapes",
])
_register("^", 2, exact=[
    _sig(REAL, INT, REAL),
    _sig(REAL, REAL, COMPLEX),
    _sig(COMPLEX, INT, COMPLEX),
    _sig(COMPLEX, REAL, COMPLEX),
    _sig(COMPLEX, COMPLEX, COMPLEX),
])
_register("neg", 1, rules=[_rule_neg], doc=[
    "(int) -> int  /  (real) -> real  /  (complex) -> complex  /  element-wise on lists",
])
_register("abs", 1, exact=[
    _sig(INT, INT), _sig(REAL, REAL), _sig(COMPLEX, REAL),
], rules=[_rule_norm], doc=[
    "(int) -> int  /  (real) -> real  /  (complex) -> real",
    "(list<n, real|complex>) -> real   Euclidean norm",
])
_register("sqrt", 1, exact=[_sig(REAL, COMPLEX), _sig(COMPLEX, COMPLEX)])
for _name in ("sin", "cos", "exp", "log"):
    _register(_name, 1, exact=[_sig(REAL, REAL), _sig(COMPLEX, COMPLEX)])
_register("floor", 1, exact=[_sig(REAL, INT)])
_register("mod", 2, exact=[_sig(INT, INT, INT), _sig(REAL, REAL, REAL)])
for _name in ("<", "<=", ">", ">=", "==", "!="):
    _register(_name, 2, exact=[_sig(REAL, REAL, BOOLEAN)])
_register("&", 2, exact=[_sig(BOOLEAN, BOOLEAN, BOOLEAN)])
_register("%", 2, exact=[_sig(BOOLEAN, BOOLEAN, BOOLEAN)])
_register("!", 1, exact=[_sig(BOOLEAN, BOOLEAN)])
for _name in ("min", "max"):
    _register(_name, 2, exact=[_sig(INT, INT, INT), _sig(REAL, REAL, REAL)])
    _register(_name, 1, rules=[_rule_minmax_list], doc=[
        "(list<n, int|real>) -> int|real   element minimum/maximum",
    ])
_register("re", 1, exact=[_sig(COMPLEX, REAL)])
_register("im", 1, exact=[_sig(COMPLEX, REAL)])
_register("conjugate", 1, exact=[_sig(COMPLEX, COMPLEX)])
_register("seconds", 0, exact=[Signature((), REAL)], pure=False)
_register("imagergb", 1, exact=[
    _sig(make_list(2, REAL), make_list(3, REAL)),
    _sig(COMPLEX, make_list(3, REAL)),
], doc=[
    '("name", list<2, real>) -> list<3, real>',
    '("name", complex) -> list<3, real>',
])
for _name in ("red", "green", "blue", "gray", "hue"):
    _register(_name, 1, exact=[_sig(REAL, make_list(3, REAL))])


def lookup(name: str, arity: int) -> BuiltinEntry:
    entry = REGISTRY.get((name, arity))
    if entry is None:
        if any(key[0] == name for key in REGISTRY):
            raise ArityMismatch(f"{name} does not take {arity} argument(s)")
        raise UnknownBuiltin(f"unknown function {name!r} with {arity} argument(s)")
    return entry


@lru_cache(maxsize=4096)
def min_sign(name: str, arg_types: tuple) -> "Signature | None":
    """The minimal applicable overload, or None (the error-type marker)."""
    entry = lookup(name, len(arg_types))
    if any(t is BOT or t is TOP for t in arg_types):
        return None
    candidates = []
    for sig in entry.exact:
        if all(is_subtype(a, p) for a, p in zip(arg_types, sig.args)):
            candidates.append(sig)
    for rule in entry.rules:
        sig = rule(arg_types)
        if sig is not None:
            assert all(is_subtype(a, p) for a, p in zip(arg_types, sig.args)), (name, arg_types, sig)
            candidates.append(sig)
    if not candidates:
        return None
    minimal = [
        c for c in candidates
        if not any(
            d.args != c.args and all(is_subtype(x, y) for x, y in zip(d.args, c.args))
            for d in candidates
        )
    ]
    distinct = {m.args: m for m in minimal}
    if len(distinct) != 1:
        raise AssertionError(f"ambiguous overloads for {name}{arg_types}: {sorted(map(str, distinct))}")
    return next(iter(distinct.values()))


def is_pure(name: str) -> bool:
    return all(e.pure for (n, _), e in REGISTRY.items() if n == name)


def overload_table() -> list:
    """Rows for the CLI `builtins` command, stable order."""
    rows = []
    for (name, arity), entry in sorted(REGISTRY.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        rows.append({"name": name, "arity": arity, "pure": entry.pure, "overloads": list(entry.doc)})
    return rows


# ---------------------------------------------------------------------------
# CPU implementations (arguments arrive already upcast to the signature)

def _ieee_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0:
            return math.nan
        return math.copysign(math.inf, a)


def _ieee_cdiv(a: complex, b: complex) -> complex:
    try:
        return a / b
    except ZeroDivisionError:
        return complex(math.nan, math.nan)


def _cfun(fn, z: complex) -> complex:
    try:
        return fn(z)
    except (OverflowError, ValueError):
        return complex(math.inf, math.nan)


def cpu_call(name: str, sig: Signature, args: list, services=None) -> Value:
    if name in ("+", "-"):
        return _cpu_addsub(name, args[0], args[1])
    if name == "*":
        return _cpu_mul(sig, args[0], args[1])
    if name == "/":
        return _cpu_div(args[0], args[1])
    if name == "^":
        return _cpu_pow(sig, args[0], args[1])
    if name == "neg":
        return _cpu_neg(args[0])
    if name == "abs":
        return _cpu_abs(args[0])
    if name == "sqrt":
        if isinstance(args[0], VComplex):
            return _complex(_cfun(cmath.sqrt, args[0].num))
        x = args[0].num
        return VComplex(math.sqrt(x), 0.0) if x >= 0 else VComplex(0.0, math.sqrt(-x))
    if name in ("sin", "cos", "exp", "log"):
        if isinstance(args[0], VComplex):
            return _complex(_cfun(getattr(cmath, name), args[0].num))
        return VReal(_real_unary(name, args[0].num))
    if name == "floor":
        return VInt(math.floor(args[0].num))
    if name == "mod":
        return _cpu_mod(args[0], args[1])
    if name in ("<", "<=", ">", ">=", "==", "!="):
        a, b = args[0].num, args[1].num
        return VBool({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                      "==": a == b, "!=": a != b}[name])
    if name == "&":
        return VBool(args[0].flag and args[1].flag)
    if name == "%":
        return VBool(args[0].flag or args[1].flag)
    if name == "!":
        return VBool(not args[0].flag)
    if name in ("min", "max"):
        return _cpu_minmax(name, args)
    if name == "re":
        return VReal(args[0].re)
    if name == "im":
        return VReal(args[0].im)
    if name == "conjugate":
        return VComplex(args[0].re, -args[0].im)
    if name == "seconds":
        return VReal(float(services.clock()))
    if name == "imagergb":
        return _cpu_imagergb(args[0], services)
    if name in ("red", "green", "blue", "gray", "hue"):
        return _cpu_color(name, args[0].num)
    raise UnknownBuiltin(name)


def _complex(z: complex) -> VComplex:
    return VComplex(z.real, z.imag)


def _real_unary(name: str, x: float) -> float:
    try:
        return getattr(math, name)(x)
    except OverflowError:
        return math.inf
    except ValueError:
        return math.nan  # log of non-positive: GLSL leaves it undefined


def _cpu_addsub(name, a, b):
    if isinstance(a, VList):
        return VList(tuple(_cpu_addsub(name, x, y) for x, y in zip(a.items, b.items)))
    if isinstance(a, VComplex):
        z = a.num + b.num if name == "+" else a.num - b.num
        return _complex(z)
    r = a.num + b.num if name == "+" else a.num - b.num
    return VInt(r) if isinstance(a, VInt) else VReal(r)


def _scale(s, v):
    if isinstance(v, VList):
        return VList(tuple(_scale(s, x) for x in v.items))
    if isinstance(v, VComplex):
        return _complex(as_complex(s) * v.num)
    r = s.num * v.num
    return VInt(r) if isinstance(v, VInt) and isinstance(s, VInt) else VReal(r)


def _cpu_mul(sig, a, b):
    if isinstance(a, VList) and isinstance(b, VList):  # dot product
        total = None
        for x, y in zip(a.items, b.items):
            term = _cpu_mul(sig, x, y)
            total = term if total is None else _cpu_addsub("+", total, term)
        return total
    if isinstance(a, VList):
        return _scale(b, a)
    if isinstance(b, VList):
        return _scale(a, b)
    if isinstance(a, VComplex):
        return _complex(a.num * b.num)
    r = a.num * b.num
    return VInt(r) if isinstance(a, VInt) else VReal(r)


def _cpu_div(a, b):
    if isinstance(a, VList) and isinstance(b, VList):
        return VList(tuple(_cpu_div(x, y) for x, y in zip(a.items, b.items)))
    if isinstance(a, VList):
        return VList(tuple(_cpu_div(x, b) for x in a.items))
    if isinstance(a, VComplex):
        return _complex(_ieee_cdiv(a.num, b.num))
    return VReal(_ieee_div(a.num, b.num))


def _cpu_pow(sig, a, b):
    if sig.args == (REAL, INT):
        try:
            return VReal(float(a.num ** b.num))
        except (ZeroDivisionError, OverflowError):
            return VReal(math.inf)
    if sig.args == (REAL, REAL):
        try:
            return _complex(complex(a.num) ** complex(b.num))
        except (ZeroDivisionError, OverflowError):
            return VComplex(math.inf, math.nan)
    try:
        return _complex(a.num ** as_complex(b))
    except (ZeroDivisionError, OverflowError):
        return VComplex(math.inf, math.nan)


def _cpu_neg(a):
    if isinstance(a, VList):
        return VList(tuple(_cpu_neg(x) for x in a.items))
    if isinstance(a, VComplex):
        return VComplex(-a.re, -a.im)
    return VInt(-a.num) if isinstance(a, VInt) else VReal(-a.num)


def _cpu_abs(a):
    if isinstance(a, VList):
        return VReal(math.sqrt(sum(abs(as_complex(x)) ** 2 for x in a.items)))
    if isinstance(a, VComplex):
        return VReal(abs(a.num))
    return VInt(abs(a.num)) if isinstance(a, VInt) else VReal(abs(a.num))


def _cpu_mod(a, b):
    if isinstance(a, VInt):
        if b.num == 0:
            raise RuntimeTypeError("mod by zero")
        return VInt(a.num - int(a.num / b.num) * b.num)
    if b.num == 0:
        return VReal(math.nan)
    return VReal(a.num - b.num * math.floor(a.num / b.num))  # GLSL mod definition


def _cpu_minmax(name, args):
    fn = min if name == "min" else max
    if len(args) == 1:
        items = [x.num for x in args[0].items]
        r = fn(items)
        return VInt(r) if isinstance(args[0].items[0], VInt) else VReal(r)
    r = fn(args[0].num, args[1].num)
    return VInt(r) if isinstance(args[0], VInt) else VReal(r)


def _cpu_imagergb(coord, services):
    if isinstance(coord, VComplex):
        x, y = coord.re, coord.im
    else:
        x, y = as_real(coord.items[0]), as_real(coord.items[1])
    r, g, b = services.sample(services.texture_name, x, y)
    return VList((VReal(r), VReal(g), VReal(b)))


def _cpu_color(name, v):
    if name == "red":
        rgb = (v, 0.0, 0.0)
    elif name == "green":
        rgb = (0.0, v, 0.0)
    elif name == "blue":
        rgb = (0.0, 0.0, v)
    elif name == "gray":
        rgb = (v, v, v)
    else:  # hue: clamp(|mod(h*6+(0,4,2), 6)-3|-1, 0, 1), same arithmetic as the shader
        rgb = tuple(
            min(1.0, max(0.0, abs((v * 6.0 + s) % 6.0 - 3.0) - 1.0)) for s in (0.0, 4.0, 2.0)
        )
    return VList(tuple(VReal(c) for c in rgb))


# ---------------------------------------------------------------------------
# GLSL implementations.  Helper sources are GLSL ES 1.00; emitters receive a
# context with: lower(type)->str, helper(name)->str, gen_helper(name, src)->str,
# mangle(type)->str, float_lit(x)->str.

HELPERS: dict = {
    "_cmul": ((), "vec2 _cmul(vec2 a, vec2 b) {\n  return vec2(a.x*b.x - a.y*b.y, a.x*b.y + a.y*b.x);\n}"),
    "_cdiv": ((), "vec2 _cdiv(vec2 a, vec2 b) {\n  float d = dot(b, b);\n  return vec2(a.x*b.x + a.y*b.y, a.y*b.x - a.x*b.y) / d;\n}"),
    "_csqrt": ((), "vec2 _csqrt(vec2 z) {\n  float r = length(z);\n  float s = z.y >= 0.0 ? 1.0 : -1.0;\n  return vec2(sqrt(max((r + z.x)*0.5, 0.0)), s*sqrt(max((r - z.x)*0.5, 0.0)));\n}"),
    "_rsqrtc": ((), "vec2 _rsqrtc(float x) {\n  if (x >= 0.0) return vec2(sqrt(x), 0.0);\n  return vec2(0.0, sqrt(-x));\n}"),
    "_cexp": ((), "vec2 _cexp(vec2 z) {\n  return exp(z.x) * vec2(cos(z.y), sin(z.y));\n}"),
    "_clog": ((), "vec2 _clog(vec2 z) {\n  return vec2(log(length(z)), atan(z.y, z.x));\n}"),
    "_csin": ((), "vec2 _csin(vec2 z) {\n  float ep = exp(z.y);\n  float em = exp(-z.y);\n  return vec2(sin(z.x)*(ep + em)*0.5, cos(z.x)*(ep - em)*0.5);\n}"),
    "_ccos": ((), "vec2 _ccos(vec2 z) {\n  float ep = exp(z.y);\n  float em = exp(-z.y);\n  return vec2(cos(z.x)*(ep + em)*0.5, -sin(z.x)*(ep - em)*0.5);\n}"),
    "_cpow": (("_cexp", "_clog", "_cmul"), "vec2 _cpow(vec2 z, vec2 w) {\n  if (z.x == 0.0 && z.y == 0.0) return vec2(0.0, 0.0);\n  return _cexp(_cmul(w, _clog(z)));\n}"),
    "_cpowr": (("_cexp", "_clog"), "vec2 _cpowr(vec2 z, float e) {\n  if (z.x == 0.0 && z.y == 0.0) return vec2(0.0, 0.0);\n  return _cexp(e * _clog(z));\n}"),
    "_rpowc": (("_cexp",), "vec2 _rpowc(float b, float e) {\n  if (b == 0.0) return vec2(0.0, 0.0);\n  if (b > 0.0) return _cexp(e * vec2(log(b), 0.0));\n  return _cexp(e * vec2(log(-b), 3.14159265358979));\n}"),
    "_powri": ((), "float _powri(float b, int e) {\n  float r = 1.0;\n  float bb = b;\n  int ee = e < 0 ? -e : e;\n  for (int k = 0; k < 24; k++) {\n    if (ee > 0) {\n      if (ee - (ee/2)*2 == 1) r = r * bb;\n      bb = bb * bb;\n      ee = ee / 2;\n    }\n  }\n  return e < 0 ? 1.0 / r : r;\n}"),
    "_cpowi": (("_cmul", "_cdiv"), "vec2 _cpowi(vec2 z, int e) {\n  vec2 r = vec2(1.0, 0.0);\n  vec2 zz = z;\n  int ee = e < 0 ? -e : e;\n  for (int k = 0; k < 24; k++) {\n    if (ee > 0) {\n      if (ee - (ee/2)*2 == 1) r = _cmul(r, zz);\n      zz = _cmul(zz, zz);\n      ee = ee / 2;\n    }\n  }\n  return e < 0 ? _cdiv(vec2(1.0, 0.0), r) : r;\n}"),
    "_absi": ((), "int _absi(int x) {\n  if (x < 0) return -x;\n  return x;\n}"),
    "_modi": ((), "int _modi(int a, int b) {\n  return a - (a/b)*b;\n}"),
    "_mini": ((), "int _mini(int a, int b) {\n  if (a < b) return a;\n  return b;\n}"),
    "_maxi": ((), "int _maxi(int a, int b) {\n  if (a > b) return a;\n  return b;\n}"),
    "_cconj": ((), "vec2 _cconj(vec2 z) {\n  return vec2(z.x, -z.y);\n}"),
    "_hue": ((), "vec3 _hue(float t) {\n  vec3 k = mod(t*6.0 + vec3(0.0, 4.0, 2.0), 6.0);\n  return clamp(abs(k - 3.0) - 1.0, 0.0, 1.0);\n}"),
}

_VEC_FIELDS = ("x", "y", "z", "w")

_MINMAX_VEC = {
    ("min", 2): "float _minv2(vec2 v) {\n  return min(v.x, v.y);\n}",
    ("min", 3): "float _minv3(vec3 v) {\n  return min(min(v.x, v.y), v.z);\n}",
    ("min", 4): "float _minv4(vec4 v) {\n  return min(min(v.x, v.y), min(v.z, v.w));\n}",
    ("max", 2): "float _maxv2(vec2 v) {\n  return max(v.x, v.y);\n}",
    ("max", 3): "float _maxv3(vec3 v) {\n  return max(max(v.x, v.y), v.z);\n}",
    ("max", 4): "float _maxv4(vec4 v) {\n  return max(max(v.x, v.y), max(v.z, v.w));\n}",
}


def _is_vec(ctx, t) -> bool:
    name = ctx.lower(t)
    return name.startswith(("vec", "ivec", "bvec"))


def _fields(ctx, t: ListType):
    if _is_vec(ctx, t):
        return [f".{_VEC_FIELDS[k]}" for k in range(t.length)]
    return [f"._e{k + 1}" for k in range(t.length)]


def glsl_call(ctx, name: str, sig: Signature, arg_types: tuple, args: list) -> str:
    """Emit the shader expression for one builtin application.

    `args` are already up-cast to sig.args; `arg_types` are the pre-cast
    inferred types (used to spot constant integer exponents).
    """
    if name in ("+", "-"):
        return _glsl_elemwise(ctx, name, sig.ret, args[0], args[1])
    if name == "*":
        return _glsl_mul(ctx, sig, args)
    if name == "/":
        return _glsl_div(ctx, sig, args)
    if name == "^":
        return _glsl_pow(ctx, sig, arg_types, args)
    if name == "neg":
        return _glsl_neg(ctx, sig.ret, args[0])
    if name == "abs":
        return _glsl_abs(ctx, sig, args[0])
    if name == "sqrt":
        helper = "_csqrt" if sig.args[0] is COMPLEX else "_rsqrtc"
        return f"{ctx.helper(helper)}({args[0]})"
    if name in ("sin", "cos", "exp", "log"):
        if sig.args[0] is COMPLEX:
            return f"{ctx.helper('_c' + name)}({args[0]})"
        return f"{name}({args[0]})"
    if name == "floor":
        return f"int(floor({args[0]}))"
    if name == "mod":
        if sig.ret is INT:
            return f"{ctx.helper('_modi')}({args[0]}, {args[1]})"
        return f"mod({args[0]}, {args[1]})"
    if name in ("<", "<=", ">", ">=", "==", "!="):
        return f"({args[0]} {name} {args[1]})"
    if name == "&":
        return f"({args[0]} && {args[1]})"
    if name == "%":
        return f"({args[0]} || {args[1]})"
    if name == "!":
        return f"(!{args[0]})"
    if name in ("min", "max"):
        return _glsl_minmax(ctx, name, sig, args)
    if name == "re":
        return f"({args[0]}).x"
    if name == "im":
        return f"({args[0]}).y"
    if name == "conjugate":
        return f"{ctx.helper('_cconj')}({args[0]})"
    if name == "red":
        return f"vec3({args[0]}, 0.0, 0.0)"
    if name == "green":
        return f"vec3(0.0, {args[0]}, 0.0)"
    if name == "blue":
        return f"vec3(0.0, 0.0, {args[0]})"
    if name == "gray":
        return f"vec3({args[0]})"
    if name == "hue":
        return f"{ctx.helper('_hue')}({args[0]})"
    raise UnknownBuiltin(f"no shader implementation for {name}")


def _glsl_elemwise(ctx, op, t, a, b):
    """+ - / on scalars, native vectors, or generated per-struct helpers."""
    if t is COMPLEX and op == "/":
        return f"{ctx.helper('_cdiv')}({a}, {b})"
    if is_scalar(t) or _is_vec(ctx, t):
        return f"({a} {op} {b})"
    assert isinstance(t, ListType)
    opname = {"+": "add", "-": "sub", "/": "div"}[op]
    hname = f"_ew_{opname}_{ctx.mangle(t)}"
    tn = ctx.lower(t)
    lines = [f"{tn} {hname}({tn} a, {tn} b) {{", f"  return {tn}("]
    parts = [
        _glsl_elemwise(ctx, op, t.elem, f"a{f}", f"b{f}") for f in _fields(ctx, t)
    ]
    lines[-1] += ", ".join(parts) + ");"
    lines.append("}")
    return f"{ctx.gen_helper(hname, chr(10).join(lines))}({a}, {b})"


def _glsl_mul(ctx, sig, args):
    a, b = args
    ta, tb = sig.args
    if is_scalar(ta) and is_scalar(tb):
        if sig.ret is COMPLEX:
            return f"{ctx.helper('_cmul')}({a}, {b})"
        return f"({a} * {b})"
    if isinstance(ta, ListType) and isinstance(tb, ListType):
        return _glsl_dot(ctx, ta, a, b)
    if is_scalar(tb):  # swap so the scalar is first
        ta, tb, a, b = tb, ta, b, a
    return _glsl_scale(ctx, ta, tb, a, b)


def _glsl_scale(ctx, ts, tl: ListType, s, l):
    if ctx.lower(tl) in ("vec2", "vec3", "vec4") and ts is REAL:
        return f"({s} * {l})"
    if ctx.lower(tl).startswith("ivec") and ts is INT:
        return f"({s} * {l})"
    hname = f"_scale_{ctx.mangle(tl)}"
    tn, sn = ctx.lower(tl), ctx.lower(ts)
    parts = []
    for f in _fields(ctx, tl):
        if isinstance(tl.elem, ListType):
            parts.append(_glsl_scale(ctx, ts, tl.elem, "s", f"v{f}"))
        elif tl.elem is COMPLEX and ts is COMPLEX:
            parts.append(f"{ctx.helper('_cmul')}(s, v{f})")
        else:
            parts.append(f"(s * v{f})")
    src = f"{tn} {hname}({sn} s, {tn} v) {{\n  return {tn}(" + ", ".join(parts) + ");\n}"
    return f"{ctx.gen_helper(hname, src)}({s}, {l})"


def _glsl_dot(ctx, t: ListType, a, b):
    if ctx.lower(t) in ("vec2", "vec3", "vec4"):
        return f"dot({a}, {b})"
    hname = f"_dot_{ctx.mangle(t)}"
    tn = ctx.lower(t)
    rn = ctx.lower(t.elem)
    if t.elem is COMPLEX:
        terms = [f"{ctx.helper('_cmul')}(a{f}, b{f})" for f in _fields(ctx, t)]
    else:
        terms = [f"a{f} * b{f}" for f in _fields(ctx, t)]
    src = f"{rn} {hname}({tn} a, {tn} b) {{\n  return " + " + ".join(terms) + ";\n}"
    return f"{ctx.gen_helper(hname, src)}({a}, {b})"


def _glsl_div(ctx, sig, args):
    a, b = args
    ta, tb = sig.args
    if isinstance(ta, ListType) and is_scalar(tb):
        if ctx.lower(ta) in ("vec2", "vec3", "vec4") and tb is REAL:
            return f"({a} / {b})"
        hname = f"_divs_{ctx.mangle(ta)}"
        tn, sn = ctx.lower(ta), ctx.lower(tb)
        parts = [
            _glsl_elemwise(ctx, "/", ta.elem, f"v{f}", "s") if not isinstance(ta.elem, ListType)
            else _glsl_div(ctx, Signature((ta.elem, tb), ta.elem), [f"v{f}", "s"])
            for f in _fields(ctx, ta)
        ]
        src = f"{tn} {hname}({tn} v, {sn} s) {{\n  return {tn}(" + ", ".join(parts) + ");\n}"
        return f"{ctx.gen_helper(hname, src)}({a}, {b})"
    return _glsl_elemwise(ctx, "/", sig.ret, a, b)


def _glsl_pow(ctx, sig, arg_types, args):
    base, expo = args
    const_exp = arg_types[1] if isinstance(arg_types[1], ConstInt) else None
    if sig.args == (REAL, INT):
        if const_exp is not None and abs(const_exp.value) <= 8:
            return _unrolled_pow(ctx, "float", base, const_exp.value)
        return f"{ctx.helper('_powri')}({base}, {expo})"
    if sig.args == (REAL, REAL):
        return f"{ctx.helper('_rpowc')}({base}, {expo})"
    if sig.args == (COMPLEX, INT):
        if const_exp is not None and abs(const_exp.value) <= 8:
            return _unrolled_cpow(ctx, base, const_exp.value)
        return f"{ctx.helper('_cpowi')}({base}, {expo})"
    if sig.args == (COMPLEX, REAL):
        return f"{ctx.helper('_cpowr')}({base}, {expo})"
    return f"{ctx.helper('_cpow')}({base}, {expo})"


def _unrolled_pow(ctx, tn, base, k):
    if k == 0:
        return "1.0"
    name = f"_powr{'m' if k < 0 else ''}{abs(k)}"
    prod = " * ".join(["b"] * abs(k))
    body = f"1.0 / ({prod})" if k < 0 else prod
    src = f"float {name}(float b) {{\n  return {body};\n}}"
    return f"{ctx.gen_helper(name, src)}({base})"


def _unrolled_cpow(ctx, base, k):
    if k == 0:
        return "vec2(1.0, 0.0)"
    name = f"_cpowk{'m' if k < 0 else ''}{abs(k)}"
    cmul = ctx.helper("_cmul")
    expr = "z"
    for _ in range(abs(k) - 1):
        expr = f"{cmul}(z, {expr})"
    if k < 0:
        expr = f"{ctx.helper('_cdiv')}(vec2(1.0, 0.0), {expr})"
    src = f"vec2 {name}(vec2 z) {{\n  return {expr};\n}}"
    return f"{ctx.gen_helper(name, src)}({base})"


def _glsl_neg(ctx, t, a):
    if is_scalar(t) or _is_vec(ctx, t):
        return f"(-{a})"
    assert isinstance(t, ListType)
    hname = f"_neg_{ctx.mangle(t)}"
    tn = ctx.lower(t)
    parts = [_glsl_neg(ctx, t.elem, f"v{f}") for f in _fields(ctx, t)]
    src = f"{tn} {hname}({tn} v) {{\n  return {tn}(" + ", ".join(parts) + ");\n}"
    return f"{ctx.gen_helper(hname, src)}({a})"


def _glsl_abs(ctx, sig, a):
    t = sig.args[0]
    if t is INT:
        return f"{ctx.helper('_absi')}({a})"
    if t is REAL:
        return f"abs({a})"
    if t is COMPLEX:
        return f"length({a})"
    assert isinstance(t, ListType)
    if ctx.lower(t) in ("vec2", "vec3", "vec4"):
        return f"length({a})"
    hname = f"_norm_{ctx.mangle(t)}"
    tn = ctx.lower(t)
    if t.elem is COMPLEX:
        terms = [f"dot(v{f}, v{f})" for f in _fields(ctx, t)]
    else:
        terms = [f"v{f} * v{f}" for f in _fields(ctx, t)]
    src = f"float {hname}({tn} v) {{\n  return sqrt(" + " + ".join(terms) + ");\n}"
    return f"{ctx.gen_helper(hname, src)}({a})"


def _glsl_minmax(ctx, name, sig, args):
    if len(args) == 2:
        if sig.ret is INT:
            return f"{ctx.helper('_mini' if name == 'min' else '_maxi')}({args[0]}, {args[1]})"
        return f"{name}({args[0]}, {args[1]})"
    t = sig.args[0]
    assert isinstance(t, ListType)
    if ctx.lower(t) in ("vec2", "vec3", "vec4"):
        hname = f"_{name}v{t.length}"
        return f"{ctx.gen_helper(hname, _MINMAX_VEC[(name, t.length)])}({args[0]})"
    hname = f"_{name}_{ctx.mangle(t)}"
    tn, rn = ctx.lower(t), ctx.lower(sig.ret)
    scalar_fn = f"{name}" if sig.ret is REAL else ctx.helper("_mini" if name == "min" else "_maxi")
    fields = _fields(ctx, t)
    expr = f"v{fields[0]}"
    for f in fields[1:]:
        expr = f"{scalar_fn}({expr}, v{f})"
    src = f"{rn} {hname}({tn} v) {{\n  return {expr};\n}}"
    return f"{ctx.gen_helper(hname, src)}({args[0]})"
