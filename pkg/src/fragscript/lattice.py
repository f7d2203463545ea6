"""The static type lattice: terms, subtype test, computable join, and casts.

Scalar chain: bool < int < real < complex, with const<k> as a singleton
subtype of int per integer constant k.  Lists are covariant in the element
type and invariant in the length.  bot/top bound everything.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import NotASubtype


@dataclass(frozen=True)
class TypeTerm:
    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class _Bot(TypeTerm):
    pass


@dataclass(frozen=True)
class _Top(TypeTerm):
    pass


@dataclass(frozen=True)
class _Scalar(TypeTerm):
    rank: int
    name: str


@dataclass(frozen=True)
class ConstInt(TypeTerm):
    value: int


@dataclass(frozen=True)
class ListType(TypeTerm):
    length: int
    elem: TypeTerm

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("list length must be positive")
        if isinstance(self.elem, _Top):
            raise ValueError("list element may not be top; use make_list")


BOT = _Bot()
TOP = _Top()
BOOLEAN = _Scalar(1, "bool")
INT = _Scalar(2, "int")
REAL = _Scalar(3, "real")
COMPLEX = _Scalar(4, "complex")

_SCALARS_BY_NAME = {t.name: t for t in (BOOLEAN, INT, REAL, COMPLEX)}


def make_list(length: int, elem: TypeTerm) -> TypeTerm:
    """List constructor that collapses list(n, top) to top."""
    if isinstance(elem, _Top):
        return TOP
    return ListType(length, elem)


def is_scalar(t: TypeTerm) -> bool:
    return isinstance(t, (_Scalar, ConstInt))


def scalar_rank(t: TypeTerm) -> int:
    # const<k> sits strictly below int but above nothing else in the chain
    if isinstance(t, ConstInt):
        return 2
    assert isinstance(t, _Scalar)
    return t.rank


@lru_cache(maxsize=65536)
def is_subtype(s: TypeTerm, t: TypeTerm) -> bool:
    if s == t:
        return True
    if isinstance(s, _Bot) or isinstance(t, _Top):
        return True
    if isinstance(s, _Top) or isinstance(t, _Bot):
        return False
    if isinstance(s, ConstInt):
        # distinct constants are incomparable; const<k> embeds into int and up
        return isinstance(t, _Scalar) and t.rank >= INT.rank
    if isinstance(t, ConstInt):
        return False
    if isinstance(s, _Scalar) and isinstance(t, _Scalar):
        return s.rank <= t.rank
    if isinstance(s, ListType) and isinstance(t, ListType):
        return s.length == t.length and is_subtype(s.elem, t.elem)
    return False


@lru_cache(maxsize=65536)
def join(s: TypeTerm, t: TypeTerm) -> TypeTerm:
    """Least upper bound, computed recursively."""
    if isinstance(s, _Bot):
        return t
    if isinstance(t, _Bot):
        return s
    if isinstance(s, _Top) or isinstance(t, _Top):
        return TOP
    if s == t:
        return s
    if isinstance(s, ConstInt) and isinstance(t, ConstInt):
        return s if s.value == t.value else INT
    if is_scalar(s) and is_scalar(t):
        # a ConstInt joined with any other scalar lands at int or above
        hi = max(scalar_rank(s), scalar_rank(t))
        if isinstance(s, ConstInt) or isinstance(t, ConstInt):
            hi = max(hi, INT.rank)
        return {1: BOOLEAN, 2: INT, 3: REAL, 4: COMPLEX}[hi]
    if isinstance(s, ListType) and isinstance(t, ListType):
        if s.length != t.length:
            return TOP
        return make_list(s.length, join(s.elem, t.elem))
    return TOP


def join_all(terms) -> TypeTerm:
    out: TypeTerm = BOT
    for t in terms:
        out = join(out, t)
    return out


def list_depth(t: TypeTerm) -> int:
    if isinstance(t, ListType):
        return 1 + list_depth(t.elem)
    return 0


def contains_bot(t: TypeTerm) -> bool:
    if isinstance(t, _Bot):
        return True
    if isinstance(t, ListType):
        return contains_bot(t.elem)
    return False


# ---------------------------------------------------------------------------
# value-embedding casts

@dataclass(frozen=True)
class CastStep:
    kind: str  # one of: bool_to_int, int_to_real, real_to_complex, const_to_int


@dataclass(frozen=True)
class CastDescriptor:
    """A composition of embedding steps; elem describes a per-element cast."""

    steps: tuple[CastStep, ...] = ()
    elem: "CastDescriptor | None" = None
    length: int = 0

    @property
    def is_identity(self) -> bool:
        return not self.steps and self.elem is None


IDENTITY_CAST = CastDescriptor()

_CHAIN_STEPS = {
    (1, 2): "bool_to_int",
    (2, 3): "int_to_real",
    (3, 4): "real_to_complex",
}


@lru_cache(maxsize=2048)
def embed_cast(src: TypeTerm, dst: TypeTerm) -> CastDescriptor:
    """Descriptor of the injective value embedding from src into dst."""
    if isinstance(dst, _Top):
        raise NotASubtype("cannot cast to top")
    if not is_subtype(src, dst):
        raise NotASubtype(f"{src} is not a subtype of {dst}")
    if src == dst:
        return IDENTITY_CAST
    if isinstance(src, ConstInt):
        inner = embed_cast(INT, dst) if dst != INT else IDENTITY_CAST
        return CastDescriptor(steps=(CastStep("const_to_int"),) + inner.steps)
    if is_scalar(src) and is_scalar(dst):
        steps = []
        r = scalar_rank(src)
        while r < scalar_rank(dst):
            steps.append(CastStep(_CHAIN_STEPS[(r, r + 1)]))
            r += 1
        return CastDescriptor(steps=tuple(steps))
    if isinstance(src, ListType) and isinstance(dst, ListType):
        return CastDescriptor(elem=embed_cast(src.elem, dst.elem), length=src.length)
    raise NotASubtype(f"no embedding from {src} to {dst}")


# ---------------------------------------------------------------------------
# canonical text form: bot, top, bool, int, const<7>, real, complex, list<3, real>

def format_type(t: TypeTerm) -> str:
    if isinstance(t, _Bot):
        return "bot"
    if isinstance(t, _Top):
        return "top"
    if isinstance(t, _Scalar):
        return t.name
    if isinstance(t, ConstInt):
        return f"const<{t.value}>"
    if isinstance(t, ListType):
        return f"list<{t.length}, {format_type(t.elem)}>"
    raise AssertionError(t)


def parse_type(text: str) -> TypeTerm:
    text = text.strip()
    if text == "bot":
        return BOT
    if text == "top":
        return TOP
    if text in _SCALARS_BY_NAME:
        return _SCALARS_BY_NAME[text]
    if text.startswith("const<") and text.endswith(">"):
        return ConstInt(int(text[6:-1]))
    if text.startswith("list<") and text.endswith(">"):
        body = text[5:-1]
        n, elem = body.split(",", 1)
        return make_list(int(n), parse_type(elem))
    raise ValueError(f"unparseable type: {text!r}")
