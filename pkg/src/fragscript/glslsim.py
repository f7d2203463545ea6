"""Parser, static checker, and evaluator for the GLSL ES 1.00 subset the
code generator emits.

The checker enforces the strict parts of ES 1.00 this project relies on: no
implicit int/float conversions, constant loop bounds, declarations before
use, exact call signatures.  The evaluator executes `main` per fragment and
is deliberately independent of the CPU interpreter so the two can check
each other.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import GlslError

_TOKEN = re.compile(
    r"""(?P<ws>\s+|//[^\n]*|/\*.*?\*/)
      | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>\+\+|--|<=|>=|==|!=|&&|\|\||[-+*/<>=!?:;,.{}()\[\]])
    """,
    re.VERBOSE | re.DOTALL,
)

SCALAR_TYPES = {"float", "int", "bool"}
VEC_TYPES = {"vec2": 2, "vec3": 3, "vec4": 4}
IVEC_TYPES = {"ivec2": 2, "ivec3": 3, "ivec4": 4}
BVEC_TYPES = {"bvec2": 2, "bvec3": 3, "bvec4": 4}
ALL_VEC = {**VEC_TYPES, **IVEC_TYPES, **BVEC_TYPES}
BASIC_TYPES = SCALAR_TYPES | set(ALL_VEC) | {"sampler2D", "void"}

_SWIZZLE_INDEX = {"x": 0, "y": 1, "z": 2, "w": 3, "r": 0, "g": 1, "b": 2, "a": 3}

_VEC_ELEM = {"vec": "float", "ivec": "int", "bvec": "bool"}

BUILTIN_FUNCS = {
    # name -> list of (arg types, return); "genN" expands over float/vec sizes
    "sin": "gen1", "cos": "gen1", "exp": "gen1", "log": "gen1", "sqrt": "gen1",
    "abs": "gen1", "floor": "gen1", "sign": "gen1",
    "mod": "gen2", "min": "gen2", "max": "gen2", "pow": "gen2", "atan": "gen2",
    "clamp": "gen3",
    "length": None, "dot": None, "texture2D": None,
}

RESERVED = {"if", "else", "for", "return", "true", "false", "uniform",
            "precision", "struct", "highp", "mediump", "lowp", "void"}


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def _lex(src: str):
    out, pos = [], 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise GlslError(f"glsl: illegal character {src[pos]!r} at {pos}")
        pos = m.end()
        if m.lastgroup != "ws":
            out.append(Tok(m.lastgroup, m.group(), m.start()))
    out.append(Tok("eof", "", len(src)))
    return out


# -- expression AST ----------------------------------------------------------

@dataclass(eq=False)
class Expr:
    ty: str = field(default="", init=False)


@dataclass(eq=False)
class Num(Expr):
    text: str
    is_int: bool


@dataclass(eq=False)
class BoolE(Expr):
    value: bool


@dataclass(eq=False)
class Ident(Expr):
    name: str


@dataclass(eq=False)
class Unary(Expr):
    op: str
    operand: Expr


@dataclass(eq=False)
class Bin(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(eq=False)
class Ternary(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(eq=False)
class Call(Expr):
    name: str
    args: list


@dataclass(eq=False)
class Member(Expr):
    base: Expr
    field: str


# -- statements / declarations ----------------------------------------------

@dataclass
class Decl:
    ty: str
    name: str
    init: "Expr | None"


@dataclass
class AssignS:
    name: str
    expr: Expr


@dataclass
class IfS:
    cond: Expr
    then: list
    orelse: list


@dataclass
class ForS:
    var: str
    start: int
    cmp: str
    bound: int
    body: list


@dataclass
class ReturnS:
    expr: "Expr | None"


@dataclass
class FunDef:
    ret: str
    name: str
    params: list  # (type, name)
    body: list


@dataclass
class StructDef:
    name: str
    fields: list  # (type, name)


@dataclass
class Shader:
    precision: str
    structs: dict
    uniforms: dict  # name -> type
    functions: dict  # name -> FunDef
    order: list      # function definition order


class _P:
    def __init__(self, src: str):
        self.toks = _lex(src)
        self.i = 0
        self.struct_names: set = set()

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def eat(self, text):
        tok = self.next()
        if tok.text != text:
            raise GlslError(f"glsl: expected {text!r}, found {tok.text!r} at {tok.pos}")
        return tok

    def at(self, text):
        return self.peek().text == text

    def is_type(self, text):
        return text in BASIC_TYPES or text in self.struct_names

    # -- top level

    def parse(self) -> Shader:
        precision = ""
        structs: dict = {}
        uniforms: dict = {}
        functions: dict = {}
        order: list = []
        while not self.at(""):
            if self.at("precision"):
                self.next()
                precision = self.next().text
                if precision not in ("highp", "mediump"):
                    raise GlslError(f"glsl: unsupported precision {precision!r}")
                self.eat("float")
                self.eat(";")
                continue
            if self.at("struct"):
                sd = self.parse_struct()
                structs[sd.name] = sd
                self.struct_names.add(sd.name)
                continue
            if self.at("uniform"):
                self.next()
                ty = self.type_name()
                name = self.ident()
                self.eat(";")
                if name in uniforms:
                    raise GlslError(f"glsl: uniform {name!r} declared twice")
                uniforms[name] = ty
                continue
            fn = self.parse_function()
            if fn.name in functions:
                raise GlslError(f"glsl: function {fn.name!r} defined twice")
            functions[fn.name] = fn
            order.append(fn.name)
        if not precision:
            raise GlslError("glsl: missing precision declaration")
        return Shader(precision, structs, uniforms, functions, order)

    def type_name(self) -> str:
        tok = self.next()
        if not self.is_type(tok.text):
            raise GlslError(f"glsl: unknown type {tok.text!r} at {tok.pos}")
        return tok.text

    def ident(self) -> str:
        tok = self.next()
        if tok.kind != "ident" or tok.text in RESERVED or self.is_type(tok.text):
            raise GlslError(f"glsl: expected identifier, found {tok.text!r} at {tok.pos}")
        return tok.text

    def parse_struct(self) -> StructDef:
        self.eat("struct")
        name = self.ident()
        self.eat("{")
        fields = []
        while not self.at("}"):
            ty = self.type_name()
            fname = self.ident()
            self.eat(";")
            fields.append((ty, fname))
        self.eat("}")
        self.eat(";")
        if not fields:
            raise GlslError(f"glsl: struct {name!r} has no fields")
        return StructDef(name, fields)

    def parse_function(self) -> FunDef:
        ret = self.type_name()
        name = self.ident()
        self.eat("(")
        params = []
        if not self.at(")"):
            while True:
                pty = self.type_name()
                pname = self.ident()
                params.append((pty, pname))
                if self.at(","):
                    self.next()
                    continue
                break
        self.eat(")")
        body = self.parse_block()
        return FunDef(ret, name, params, body)

    def parse_block(self) -> list:
        self.eat("{")
        out = []
        while not self.at("}"):
            out.append(self.parse_statement())
        self.eat("}")
        return out

    def parse_block_or_statement(self) -> list:
        if self.at("{"):
            return self.parse_block()
        return [self.parse_statement()]

    def parse_statement(self):
        tok = self.peek()
        if tok.text == "if":
            self.next()
            self.eat("(")
            cond = self.parse_expr()
            self.eat(")")
            then = self.parse_block_or_statement()
            orelse = []
            if self.at("else"):
                self.next()
                orelse = self.parse_block_or_statement()
            return IfS(cond, then, orelse)
        if tok.text == "for":
            return self.parse_for()
        if tok.text == "return":
            self.next()
            if self.at(";"):
                self.next()
                return ReturnS(None)
            e = self.parse_expr()
            self.eat(";")
            return ReturnS(e)
        if self.is_type(tok.text):
            ty = self.type_name()
            name = self.ident()
            init = None
            if self.at("="):
                self.next()
                init = self.parse_expr()
            self.eat(";")
            return Decl(ty, name, init)
        name = self.next()
        if name.kind != "ident":
            raise GlslError(f"glsl: unexpected {name.text!r} at {name.pos}")
        self.eat("=")
        expr = self.parse_expr()
        self.eat(";")
        return AssignS(name.text, expr)

    def parse_for(self):
        self.eat("for")
        self.eat("(")
        self.eat("int")
        var = self.ident()
        self.eat("=")
        start = self.int_literal()
        self.eat(";")
        if self.ident() != var:
            raise GlslError("glsl: for-loop must test its own counter")
        cmp_tok = self.next()
        if cmp_tok.text not in ("<", "<="):
            raise GlslError("glsl: for-loop comparison must be < or <=")
        bound = self.int_literal()
        self.eat(";")
        if self.ident() != var:
            raise GlslError("glsl: for-loop must increment its own counter")
        self.eat("++")
        self.eat(")")
        body = self.parse_block()
        return ForS(var, start, cmp_tok.text, bound, body)

    def int_literal(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        tok = self.next()
        if tok.kind != "int":
            raise GlslError(f"glsl: loop bounds must be integer constants, found {tok.text!r}")
        return -int(tok.text) if neg else int(tok.text)

    # -- expressions (C precedence) ------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_ternary()

    def parse_ternary(self) -> Expr:
        cond = self.parse_or()
        if self.at("?"):
            self.next()
            then = self.parse_expr()
            self.eat(":")
            orelse = self.parse_ternary()
            return Ternary(cond, then, orelse)
        return cond

    def _binlevel(self, ops, sub):
        e = sub()
        while self.peek().text in ops:
            op = self.next().text
            e = Bin(op, e, sub())
        return e

    def parse_or(self):
        return self._binlevel(("||",), self.parse_and)

    def parse_and(self):
        return self._binlevel(("&&",), self.parse_eq)

    def parse_eq(self):
        return self._binlevel(("==", "!="), self.parse_rel)

    def parse_rel(self):
        return self._binlevel(("<", "<=", ">", ">="), self.parse_add)

    def parse_add(self):
        return self._binlevel(("+", "-"), self.parse_mul)

    def parse_mul(self):
        return self._binlevel(("*", "/"), self.parse_unary)

    def parse_unary(self):
        if self.at("-") or self.at("!"):
            op = self.next().text
            return Unary(op, self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        e = self.parse_primary()
        while self.at("."):
            self.next()
            fld = self.next()
            if fld.kind != "ident":
                raise GlslError(f"glsl: bad member access at {fld.pos}")
            e = Member(e, fld.text)
        return e

    def parse_primary(self):
        tok = self.next()
        if tok.kind == "float":
            return Num(tok.text, False)
        if tok.kind == "int":
            return Num(tok.text, True)
        if tok.text == "true":
            return BoolE(True)
        if tok.text == "false":
            return BoolE(False)
        if tok.text == "(":
            e = self.parse_expr()
            self.eat(")")
            return e
        if tok.kind == "ident":
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        self.next()
                        args.append(self.parse_expr())
                self.eat(")")
                return Call(tok.text, args)
            return Ident(tok.text)
        raise GlslError(f"glsl: unexpected {tok.text!r} at {tok.pos}")


# ---------------------------------------------------------------------------
# static checking

def _vec_kind(ty: str):
    for prefix in ("ivec", "bvec", "vec"):
        if ty.startswith(prefix) and ty in ALL_VEC:
            return prefix, ALL_VEC[ty]
    return None


class _Checker:
    def __init__(self, shader: Shader):
        self.sh = shader
        self.fn_sigs = {}

    def check(self):
        for sd in self.sh.structs.values():
            for ty, _ in sd.fields:
                self._known(ty)
        for name, ty in self.sh.uniforms.items():
            self._known(ty)
            if ty == "void":
                raise GlslError("glsl: uniform cannot be void")
        for name in self.sh.order:
            fn = self.sh.functions[name]
            if name in BUILTIN_FUNCS or name in BASIC_TYPES:
                raise GlslError(f"glsl: cannot redefine builtin {name!r}")
            self.fn_sigs[name] = ([p[0] for p in fn.params], fn.ret)
            self._check_fn(fn)
        main = self.sh.functions.get("main")
        if main is None or main.ret != "void" or main.params:
            raise GlslError("glsl: missing void main()")

    def _known(self, ty):
        if ty not in BASIC_TYPES and ty not in self.sh.structs:
            raise GlslError(f"glsl: unknown type {ty!r}")

    def _check_fn(self, fn: FunDef):
        scope = [dict(self.sh.uniforms)]
        scope[0]["gl_FragCoord"] = "vec4"
        if fn.name == "main":
            scope[0]["gl_FragColor"] = "vec4"
        params = {}
        for ty, name in fn.params:
            self._known(ty)
            if name in params:
                raise GlslError(f"glsl: duplicate parameter {name!r}")
            params[name] = ty
        scope.append(params)
        returned = self._check_block(fn.body, [*scope, {}], fn)
        if fn.ret != "void" and not returned:
            raise GlslError(f"glsl: function {fn.name!r} may not return a value")

    def _lookup(self, scope, name):
        for frame in reversed(scope):
            if name in frame:
                return frame[name]
        raise GlslError(f"glsl: {name!r} used before declaration")

    def _check_block(self, stmts, scope, fn) -> bool:
        returned = False
        for st in stmts:
            if isinstance(st, Decl):
                self._known(st.ty)
                if st.name in scope[-1]:
                    raise GlslError(f"glsl: {st.name!r} redeclared in the same scope")
                if st.init is not None:
                    ity = self._expr(st.init, scope)
                    if ity != st.ty:
                        raise GlslError(
                            f"glsl: cannot initialize {st.ty} {st.name} from {ity}"
                        )
                scope[-1][st.name] = st.ty
            elif isinstance(st, AssignS):
                ty = self._lookup(scope, st.name)
                if st.name == "gl_FragCoord":
                    raise GlslError("glsl: gl_FragCoord is read-only")
                ity = self._expr(st.expr, scope)
                if ity != ty:
                    raise GlslError(f"glsl: cannot assign {ity} to {ty} {st.name}")
            elif isinstance(st, IfS):
                if self._expr(st.cond, scope) != "bool":
                    raise GlslError("glsl: if condition must be bool")
                self._check_block(st.then, [*scope, {}], fn)
                self._check_block(st.orelse, [*scope, {}], fn)
            elif isinstance(st, ForS):
                inner: dict = {st.var: "int"}
                self._check_block(st.body, [*scope, inner], fn)
            elif isinstance(st, ReturnS):
                returned = True
                if st.expr is None:
                    if fn.ret != "void":
                        raise GlslError(f"glsl: {fn.name!r} must return {fn.ret}")
                else:
                    ty = self._expr(st.expr, scope)
                    if ty != fn.ret:
                        raise GlslError(f"glsl: {fn.name!r} returns {ty}, declared {fn.ret}")
            else:
                raise AssertionError(st)
        return returned

    # -- expression typing

    def _expr(self, e: Expr, scope) -> str:
        ty = self._expr_inner(e, scope)
        e.ty = ty
        return ty

    def _expr_inner(self, e: Expr, scope) -> str:
        if isinstance(e, Num):
            return "int" if e.is_int else "float"
        if isinstance(e, BoolE):
            return "bool"
        if isinstance(e, Ident):
            return self._lookup(scope, e.name)
        if isinstance(e, Unary):
            ty = self._expr(e.operand, scope)
            if e.op == "!":
                if ty != "bool":
                    raise GlslError("glsl: ! needs a bool")
                return "bool"
            if ty == "bool" or ty.startswith("bvec") or ty in self.sh.structs or ty == "sampler2D":
                raise GlslError(f"glsl: cannot negate {ty}")
            return ty
        if isinstance(e, Bin):
            return self._binop(e, scope)
        if isinstance(e, Ternary):
            if self._expr(e.cond, scope) != "bool":
                raise GlslError("glsl: ?: condition must be bool")
            t1 = self._expr(e.then, scope)
            t2 = self._expr(e.orelse, scope)
            if t1 != t2:
                raise GlslError(f"glsl: ?: branches differ: {t1} vs {t2}")
            return t1
        if isinstance(e, Member):
            return self._member(e, scope)
        if isinstance(e, Call):
            return self._call(e, scope)
        raise AssertionError(e)

    def _binop(self, e: Bin, scope) -> str:
        a = self._expr(e.lhs, scope)
        b = self._expr(e.rhs, scope)
        op = e.op
        if op in ("&&", "||"):
            if a == b == "bool":
                return "bool"
            raise GlslError(f"glsl: {op} needs bools")
        if op in ("==", "!="):
            if a == b and a != "sampler2D":
                return "bool"
            raise GlslError(f"glsl: cannot compare {a} and {b}")
        if op in ("<", "<=", ">", ">="):
            if a == b and a in ("float", "int"):
                return "bool"
            raise GlslError(f"glsl: relational operators need matching scalars, got {a}, {b}")
        # arithmetic
        if a == b and a in ("float", "int"):
            return a
        ka, kb = _vec_kind(a), _vec_kind(b)
        if ka and a == b and ka[0] != "bvec":
            return a
        if ka and b == _VEC_ELEM[ka[0]] and ka[0] != "bvec":
            return a
        if kb and a == _VEC_ELEM[kb[0]] and kb[0] != "bvec":
            return b
        raise GlslError(f"glsl: no implicit conversion in {a} {op} {b}")

    def _member(self, e: Member, scope) -> str:
        base = self._expr(e.base, scope)
        if base in self.sh.structs:
            for ty, name in self.sh.structs[base].fields:
                if name == e.field:
                    return ty
            raise GlslError(f"glsl: struct {base} has no field {e.field!r}")
        kind = _vec_kind(base)
        if kind is None:
            raise GlslError(f"glsl: cannot access member of {base}")
        prefix, size = kind
        if not e.field or not all(c in _SWIZZLE_INDEX for c in e.field):
            raise GlslError(f"glsl: bad swizzle .{e.field}")
        if any(_SWIZZLE_INDEX[c] >= size for c in e.field):
            raise GlslError(f"glsl: swizzle .{e.field} out of range for {base}")
        n = len(e.field)
        if n == 1:
            return _VEC_ELEM[prefix]
        if n > 4:
            raise GlslError("glsl: swizzle too long")
        return f"{prefix}{n}"

    def _call(self, e: Call, scope) -> str:
        args = [self._expr(a, scope) for a in e.args]
        name = e.name
        if name in SCALAR_TYPES:
            if len(args) != 1 or args[0] not in ("float", "int", "bool"):
                raise GlslError(f"glsl: bad {name}() conversion from {args}")
            return name
        if name in ALL_VEC:
            return self._vec_ctor(name, args)
        if name in self.sh.structs:
            fields = [f[0] for f in self.sh.structs[name].fields]
            if args != fields:
                raise GlslError(f"glsl: {name} constructor needs {fields}, got {args}")
            return name
        if name in self.fn_sigs:
            sig, ret = self.fn_sigs[name]
            if args != sig:
                raise GlslError(f"glsl: {name} expects {sig}, got {args}")
            return ret
        return self._builtin_call(name, args)

    def _vec_ctor(self, name, args) -> str:
        prefix, size = _vec_kind(name)
        elem = _VEC_ELEM[prefix]
        if len(args) == 1 and args[0] == elem:
            return name
        if len(args) == 1 and _vec_kind(args[0]) and _vec_kind(args[0])[1] == size:
            return name  # component-wise conversion constructor
        total = 0
        for a in args:
            if a == elem:
                total += 1
            else:
                kind = _vec_kind(a)
                if kind is None or _VEC_ELEM[kind[0]] != elem:
                    raise GlslError(f"glsl: bad component {a} in {name}()")
                total += kind[1]
        if total != size:
            raise GlslError(f"glsl: {name}() needs {size} components, got {total}")
        return name

    def _builtin_call(self, name, args) -> str:
        gen = BUILTIN_FUNCS.get(name)
        if gen is None and name not in BUILTIN_FUNCS:
            raise GlslError(f"glsl: unknown function {name!r}")
        float_like = lambda t: t == "float" or t in VEC_TYPES
        if gen in ("gen1", "gen2", "gen3"):
            want = int(gen[-1])
            if len(args) != want:
                # mod/min/max/clamp also accept (vec, float...) tails
                pass
            if len(args) == want and all(float_like(a) for a in args):
                vecs = {a for a in args if a != "float"}
                if len(vecs) <= 1:
                    if not vecs:
                        return "float"
                    if name in ("mod", "min", "max", "clamp") and args[0] != "float":
                        return args[0]  # vec op with scalar tail
                    if all(a == args[0] for a in args):
                        return args[0]
            raise GlslError(f"glsl: {name}{tuple(args)} is not a valid call")
        if name == "length":
            if len(args) == 1 and args[0] in VEC_TYPES:
                return "float"
            raise GlslError("glsl: length() needs one float vector")
        if name == "dot":
            if len(args) == 2 and args[0] == args[1] and args[0] in VEC_TYPES:
                return "float"
            raise GlslError("glsl: dot() needs two matching float vectors")
        if name == "texture2D":
            if args == ["sampler2D", "vec2"]:
                return "vec4"
            raise GlslError("glsl: texture2D(sampler2D, vec2)")
        raise GlslError(f"glsl: unknown function {name!r}")


def validate(source: str) -> Shader:
    """Parse + type-check; raises GlslError on any violation."""
    shader = _P(source).parse()
    _Checker(shader).check()
    return shader


# ---------------------------------------------------------------------------
# evaluation

def _c_div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        if b == 0:
            return 0  # ES 1.00 leaves this undefined
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b >= 0) else -q
    try:
        return a / b
    except ZeroDivisionError:
        return math.nan if a == 0 else math.copysign(math.inf, a)


def _glsl_mod(a, b):
    if b == 0:
        return math.nan
    return a - b * math.floor(_c_div(a, b))


def _glsl_pow(a, b):
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        return math.nan


def _guard(fn, *xs):
    try:
        return fn(*xs)
    except OverflowError:
        return math.inf
    except ValueError:
        return math.nan


_BUILTIN_SCALAR = {
    "sin": math.sin, "cos": math.cos,
    "exp": lambda x: _guard(math.exp, x), "log": lambda x: _guard(math.log, x),
    "sqrt": lambda x: math.sqrt(x) if x >= 0 else math.nan,
    "abs": abs, "floor": math.floor,
    "sign": lambda x: (x > 0) - (x < 0),
    "mod": _glsl_mod, "pow": _glsl_pow, "atan": math.atan2,
    "min": min, "max": max,
    "clamp": lambda x, lo, hi: min(max(x, lo), hi),
}

_SCALAR_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _c_div,
}


class _CompiledFn:
    __slots__ = ("nparams", "nslots", "body")

    def __init__(self, nparams, nslots, body):
        self.nparams = nparams
        self.nslots = nslots
        self.body = body

    def call(self, args, glob):
        loc = [None] * self.nslots
        loc[: self.nparams] = args
        for st in self.body:
            r = st(loc, glob)
            if r is not None:
                return r[0]
        return None


def _is_vec_ty(ty: str) -> bool:
    return ty in ALL_VEC


class _FnCompiler:
    """Compiles one checked function into slot-addressed closures.

    Static scope resolution happens here (each declaration gets its own
    slot), so shadowed names stay distinct at run time.
    """

    def __init__(self, runner: "ShaderRunner", fn: FunDef):
        self.runner = runner
        self.sh = runner.sh
        self.fn = fn
        self.scopes = [dict()]
        self.nslots = 0
        for ty, name in fn.params:
            self._declare(name)

    def _declare(self, name: str) -> int:
        slot = self.nslots
        self.nslots += 1
        self.scopes[-1][name] = slot
        return slot

    def _resolve(self, name: str):
        for frame in reversed(self.scopes):
            if name in frame:
                return frame[name]
        return None  # a global: uniform, sampler, or gl_* variable

    def compile(self) -> _CompiledFn:
        body = self._block(self.fn.body)
        return _CompiledFn(len(self.fn.params), self.nslots, body)

    def _block(self, stmts) -> list:
        return [self._stmt(st) for st in stmts]

    def _stmt(self, st):
        if isinstance(st, Decl):
            slot = self._declare(st.name)
            if st.init is None:
                return lambda loc, g: None
            f = self._expr(st.init)

            def run_decl(loc, g, i=slot, f=f):
                loc[i] = f(loc, g)
                return None
            return run_decl
        if isinstance(st, AssignS):
            f = self._expr(st.expr)
            slot = self._resolve(st.name)
            if slot is not None:
                def run_set(loc, g, i=slot, f=f):
                    loc[i] = f(loc, g)
                    return None
                return run_set

            def run_setg(loc, g, n=st.name, f=f):
                g[n] = f(loc, g)
                return None
            return run_setg
        if isinstance(st, IfS):
            cond = self._expr(st.cond)
            self.scopes.append({})
            then = self._block(st.then)
            self.scopes.pop()
            self.scopes.append({})
            orelse = self._block(st.orelse)
            self.scopes.pop()

            def run_if(loc, g, cond=cond, then=then, orelse=orelse):
                for s in (then if cond(loc, g) else orelse):
                    r = s(loc, g)
                    if r is not None:
                        return r
                return None
            return run_if
        if isinstance(st, ForS):
            self.scopes.append({})
            slot = self._declare(st.var)
            body = self._block(st.body)
            self.scopes.pop()
            last = st.bound if st.cmp == "<=" else st.bound - 1

            def run_for(loc, g, i=slot, body=body, start=st.start, last=last):
                for k in range(start, last + 1):
                    loc[i] = k
                    for s in body:
                        r = s(loc, g)
                        if r is not None:
                            return r
                return None
            return run_for
        if isinstance(st, ReturnS):
            if st.expr is None:
                return lambda loc, g: (None,)
            f = self._expr(st.expr)
            return lambda loc, g, f=f: (f(loc, g),)
        raise AssertionError(st)

    # -- expressions ----------------------------------------------------------

    def _expr(self, e: Expr):
        if isinstance(e, Num):
            v = int(e.text) if e.is_int else float(e.text)
            return lambda loc, g, v=v: v
        if isinstance(e, BoolE):
            return lambda loc, g, v=e.value: v
        if isinstance(e, Ident):
            slot = self._resolve(e.name)
            if slot is not None:
                return lambda loc, g, i=slot: loc[i]
            return lambda loc, g, n=e.name: g[n]
        if isinstance(e, Unary):
            f = self._expr(e.operand)
            if e.op == "!":
                return lambda loc, g, f=f: not f(loc, g)
            if _is_vec_ty(e.operand.ty):
                return lambda loc, g, f=f: tuple(-c for c in f(loc, g))
            return lambda loc, g, f=f: -f(loc, g)
        if isinstance(e, Bin):
            return self._bin(e)
        if isinstance(e, Ternary):
            c = self._expr(e.cond)
            a = self._expr(e.then)
            b = self._expr(e.orelse)
            return lambda loc, g, c=c, a=a, b=b: a(loc, g) if c(loc, g) else b(loc, g)
        if isinstance(e, Member):
            return self._member(e)
        if isinstance(e, Call):
            return self._call(e)
        raise AssertionError(e)

    def _bin(self, e: Bin):
        op = e.op
        a = self._expr(e.lhs)
        b = self._expr(e.rhs)
        if op == "&&":
            return lambda loc, g, a=a, b=b: a(loc, g) and b(loc, g)
        if op == "||":
            return lambda loc, g, a=a, b=b: a(loc, g) or b(loc, g)
        if op == "==":
            return lambda loc, g, a=a, b=b: a(loc, g) == b(loc, g)
        if op == "!=":
            return lambda loc, g, a=a, b=b: a(loc, g) != b(loc, g)
        if op in ("<", "<=", ">", ">="):
            cmp = {"<": lambda x, y: x < y, "<=": lambda x, y: x <= y,
                   ">": lambda x, y: x > y, ">=": lambda x, y: x >= y}[op]
            return lambda loc, g, a=a, b=b, c=cmp: c(a(loc, g), b(loc, g))
        fn = _SCALAR_OPS[op]
        va, vb = _is_vec_ty(e.lhs.ty), _is_vec_ty(e.rhs.ty)
        if va and vb:
            def run_vv(loc, g, a=a, b=b, fn=fn):
                return tuple(fn(x, y) for x, y in zip(a(loc, g), b(loc, g)))
            return run_vv
        if va:
            def run_vs(loc, g, a=a, b=b, fn=fn):
                s = b(loc, g)
                return tuple(fn(x, s) for x in a(loc, g))
            return run_vs
        if vb:
            def run_sv(loc, g, a=a, b=b, fn=fn):
                s = a(loc, g)
                return tuple(fn(s, y) for y in b(loc, g))
            return run_sv
        if op == "/":
            if e.lhs.ty == "int":
                return lambda loc, g, a=a, b=b: _c_div(a(loc, g), b(loc, g))
            def run_div(loc, g, a=a, b=b):
                x, y = a(loc, g), b(loc, g)
                try:
                    return x / y
                except ZeroDivisionError:
                    return math.nan if x == 0 else math.copysign(math.inf, x)
            return run_div
        if op == "+":
            return lambda loc, g, a=a, b=b: a(loc, g) + b(loc, g)
        if op == "-":
            return lambda loc, g, a=a, b=b: a(loc, g) - b(loc, g)
        return lambda loc, g, a=a, b=b: a(loc, g) * b(loc, g)

    def _member(self, e: Member):
        base = self._expr(e.base)
        if e.base.ty in self.sh.structs:
            return lambda loc, g, base=base, k=e.field: base(loc, g)[k]
        if len(e.field) == 1:
            idx = _SWIZZLE_INDEX[e.field]
            return lambda loc, g, base=base, i=idx: base(loc, g)[i]
        idxs = tuple(_SWIZZLE_INDEX[c] for c in e.field)

        def run_swz(loc, g, base=base, idxs=idxs):
            v = base(loc, g)
            return tuple(v[i] for i in idxs)
        return run_swz

    def _call(self, e: Call):
        name = e.name
        args = [self._expr(a) for a in e.args]
        if name == "float":
            f = args[0]
            return lambda loc, g, f=f: float(f(loc, g))
        if name == "int":
            f = args[0]
            return lambda loc, g, f=f: int(f(loc, g))
        if name == "bool":
            f = args[0]
            return lambda loc, g, f=f: bool(f(loc, g))
        if name in ALL_VEC:
            return self._vec_ctor(e, args)
        if name in self.sh.structs:
            fields = tuple(f[1] for f in self.sh.structs[name].fields)

            def run_struct(loc, g, fields=fields, args=tuple(args)):
                return {k: f(loc, g) for k, f in zip(fields, args)}
            return run_struct
        if name in self.runner.fns:
            fn = self.runner.fns[name]

            def run_user(loc, g, fn=fn, args=tuple(args)):
                return fn.call([f(loc, g) for f in args], g)
            return run_user
        if name == "length":
            f = args[0]
            return lambda loc, g, f=f: math.sqrt(sum(c * c for c in f(loc, g)))
        if name == "dot":
            a, b = args
            return lambda loc, g, a=a, b=b: sum(
                x * y for x, y in zip(a(loc, g), b(loc, g))
            )
        if name == "texture2D":
            s, uv = args

            def run_tex(loc, g, s=s, uv=uv):
                u, v = uv(loc, g)
                return s(loc, g).sample_uv(u, v)
            return run_tex
        fn = _BUILTIN_SCALAR[name]
        if not _is_vec_ty(e.args[0].ty):
            if len(args) == 1:
                f = args[0]
                return lambda loc, g, f=f, fn=fn: fn(f(loc, g))
            if len(args) == 2:
                a, b = args
                return lambda loc, g, a=a, b=b, fn=fn: fn(a(loc, g), b(loc, g))
            a, b, c = args
            return lambda loc, g, a=a, b=b, c=c, fn=fn: fn(a(loc, g), b(loc, g), c(loc, g))
        tails_vec = tuple(_is_vec_ty(a.ty) for a in e.args[1:])

        def run_cw(loc, g, args=tuple(args), tails_vec=tails_vec, fn=fn):
            head = args[0](loc, g)
            tails = [f(loc, g) for f in args[1:]]
            out = []
            for k, c in enumerate(head):
                rest = (t[k] if isv else t for t, isv in zip(tails, tails_vec))
                out.append(fn(c, *rest))
            return tuple(out)
        return run_cw

    def _vec_ctor(self, e: Call, args):
        prefix, size = _vec_kind(e.name)
        conv = {"vec": float, "ivec": int, "bvec": bool}[prefix]
        arg_is_vec = tuple(_is_vec_ty(a.ty) for a in e.args)
        splat = len(args) == 1 and not arg_is_vec[0] and size > 1

        if splat:
            f = args[0]
            return lambda loc, g, f=f, conv=conv, n=size: (conv(f(loc, g)),) * n

        def run_ctor(loc, g, args=tuple(args), arg_is_vec=arg_is_vec, conv=conv, n=size):
            parts = []
            for f, isv in zip(args, arg_is_vec):
                v = f(loc, g)
                if isv:
                    parts.extend(v)
                else:
                    parts.append(v)
            return tuple(conv(p) for p in parts[:n])
        return run_ctor


class ShaderRunner:
    """Executes a validated shader, one fragment at a time.

    Functions are compiled to closures once; per-fragment execution only
    runs the closures against a fresh globals dict.
    """

    def __init__(self, shader: Shader):
        self.sh = shader
        self.fns: dict = {}
        for name in shader.order:
            self.fns[name] = _FnCompiler(self, shader.functions[name]).compile()
        self.main = self.fns["main"]

    def run(self, frag_coord, uniforms: dict, samplers: dict):
        """frag_coord: (x, y) window position; returns the gl_FragColor rgba."""
        glob = dict(uniforms)
        glob.update(samplers)
        glob["gl_FragCoord"] = (frag_coord[0], frag_coord[1], 0.0, 1.0)
        glob["gl_FragColor"] = (0.0, 0.0, 0.0, 0.0)
        self.main.call([], glob)
        return glob["gl_FragColor"]


class SimTexture:
    """Bilinear clamp-to-edge sampler over a float32 rgba array for texture2D."""

    def __init__(self, data):
        self.data = data  # numpy (h, w, 4)

    def sample_uv(self, u: float, v: float):
        h, w = self.data.shape[:2]
        if not (math.isfinite(u) and math.isfinite(v)):
            u = v = 0.0
        px, py = u * w - 0.5, v * h - 0.5
        x0, y0 = math.floor(px), math.floor(py)
        fx, fy = px - x0, py - y0

        def clamp(k, hi):
            return 0 if k < 0 else (hi - 1 if k >= hi else k)

        x0c, x1c = clamp(x0, w), clamp(x0 + 1, w)
        y0c, y1c = clamp(y0, h), clamp(y0 + 1, h)
        out = []
        for ch in range(4):
            d = self.data
            v0 = d[y0c, x0c, ch] * (1 - fx) + d[y0c, x1c, ch] * fx
            v1 = d[y1c, x0c, ch] * (1 - fx) + d[y1c, x1c, ch] * fx
            out.append(float(v0 * (1 - fy) + v1 * fy))
        return tuple(out)
