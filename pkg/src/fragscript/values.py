"""Runtime values and the value-level side of the subtype embeddings."""

from __future__ import annotations

from dataclasses import dataclass

from . import lattice
from .errors import RuntimeTypeError
from .lattice import (
    BOOLEAN, COMPLEX, INT, REAL, CastDescriptor, ConstInt, ListType,
    TypeTerm, embed_cast, is_subtype, join,
)


@dataclass(frozen=True, slots=True)
class Value:
    pass


@dataclass(frozen=True, slots=True)
class VBool(Value):
    flag: bool


@dataclass(frozen=True, slots=True)
class VInt(Value):
    num: int


@dataclass(frozen=True, slots=True)
class VReal(Value):
    num: float


@dataclass(frozen=True, slots=True)
class VComplex(Value):
    re: float
    im: float

    @property
    def num(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True, slots=True)
class VList(Value):
    items: tuple


TRUE = VBool(True)
FALSE = VBool(False)


def from_py(obj) -> Value:
    if isinstance(obj, Value):
        return obj
    if isinstance(obj, bool):
        return VBool(obj)
    if isinstance(obj, int):
        return VInt(obj)
    if isinstance(obj, float):
        return VReal(obj)
    if isinstance(obj, complex):
        return VComplex(obj.real, obj.imag)
    if isinstance(obj, (list, tuple)):
        return make_vlist([from_py(x) for x in obj])
    raise RuntimeTypeError(f"cannot convert {obj!r} to a value")


def dynamic_type(v: Value) -> TypeTerm:
    if isinstance(v, VBool):
        return BOOLEAN
    if isinstance(v, VInt):
        return INT
    if isinstance(v, VReal):
        return REAL
    if isinstance(v, VComplex):
        return COMPLEX
    if isinstance(v, VList):
        return lattice.make_list(len(v.items), dynamic_type(v.items[0]))
    raise AssertionError(v)


def make_vlist(items) -> VList:
    """Build a list value, upcasting mixed elements to their join type."""
    items = list(items)
    if not items:
        raise RuntimeTypeError("lists cannot be empty")
    first = type(items[0])
    if all(type(x) is first for x in items) and first is not VList:
        return VList(tuple(items))
    kinds = [dynamic_type(x) for x in items]
    target = kinds[0]
    for k in kinds[1:]:
        target = join(target, k)
    if target is lattice.TOP:
        raise RuntimeTypeError("list elements have no common type")
    return VList(tuple(upcast(x, target) for x in items))


def upcast(v: Value, target: TypeTerm) -> Value:
    src = dynamic_type(v)
    if src == target:
        return v
    if not is_subtype(src, target):
        raise RuntimeTypeError(f"cannot upcast {src} value to {target}")
    return apply_cast(embed_cast(src, target), v)


def apply_cast(cast: CastDescriptor, v: Value) -> Value:
    if cast.elem is not None:
        assert isinstance(v, VList)
        return VList(tuple(apply_cast(cast.elem, x) for x in v.items))
    for step in cast.steps:
        if step.kind == "bool_to_int":
            v = VInt(1 if v.flag else 0)
        elif step.kind == "int_to_real":
            v = VReal(float(v.num))
        elif step.kind == "real_to_complex":
            v = VComplex(v.num, 0.0)
        elif step.kind == "const_to_int":
            v = VInt(v.num)
        else:
            raise AssertionError(step)
    return v


def as_real(v: Value) -> float:
    if isinstance(v, VBool):
        return 1.0 if v.flag else 0.0
    if isinstance(v, (VInt, VReal)):
        return float(v.num)
    raise RuntimeTypeError(f"expected a real value, got {dynamic_type(v)}")


def as_complex(v: Value) -> complex:
    if isinstance(v, VComplex):
        return v.num
    return complex(as_real(v))


def const_type_for(v: Value) -> TypeTerm:
    """Dynamic type, with integers narrowed to their singleton constant type."""
    if isinstance(v, VInt):
        return ConstInt(v.num)
    return dynamic_type(v)


def to_jsonable(v: Value):
    """Wire encoding used for uniform values: complex -> [re, im]."""
    if isinstance(v, VBool):
        return v.flag
    if isinstance(v, VInt):
        return v.num
    if isinstance(v, VReal):
        return v.num
    if isinstance(v, VComplex):
        return [v.re, v.im]
    if isinstance(v, VList):
        return [to_jsonable(x) for x in v.items]
    raise AssertionError(v)


def from_jsonable(obj, t: TypeTerm) -> Value:
    if t is BOOLEAN:
        return VBool(bool(obj))
    if t is INT or isinstance(t, ConstInt):
        return VInt(int(obj))
    if t is REAL:
        return VReal(float(obj))
    if t is COMPLEX:
        return VComplex(float(obj[0]), float(obj[1]))
    if isinstance(t, ListType):
        return VList(tuple(from_jsonable(x, t.elem) for x in obj))
    raise RuntimeTypeError(f"cannot decode value of type {t}")


def format_value(v: Value) -> str:
    if isinstance(v, VBool):
        return "true" if v.flag else "false"
    if isinstance(v, VInt):
        return str(v.num)
    if isinstance(v, VReal):
        return repr(v.num)
    if isinstance(v, VComplex):
        sign = "+" if v.im >= 0 else "-"
        return f"{v.re!r}{sign}{abs(v.im)!r}*i"
    if isinstance(v, VList):
        return "[" + ",".join(format_value(x) for x in v.items) + "]"
    raise AssertionError(v)
