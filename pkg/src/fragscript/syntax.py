"""AST node types, the Program container, pretty-printing and free variables.

The language surface: number/bool/list literals, `=` assignment, `:=` user
function definitions, arithmetic (+ - * / ^, unary -), norm bars |x|,
comparisons, boolean `&`/`%`/`!`, if(c,a[,b]), repeat(n,expr), apply(l,v,expr),
1-based indexing `l_k` (with `.x/.y/.z` sugar for _1/_2/_3) and `;` sequencing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Span = tuple[int, int]

#: variables `repeat` binds inside its body
LOOP_VAR = "#"

#: names that are literals, not variables
BUILTIN_CONSTANTS = ("i", "pi", "true", "false")


@dataclass(eq=False)
class AstNode:
    nid: int
    span: Span

    @property
    def kind(self) -> str:
        return type(self).__name__


@dataclass(eq=False)
class NumberLit(AstNode):
    value: "int | float | complex"


@dataclass(eq=False)
class BoolLit(AstNode):
    value: bool


@dataclass(eq=False)
class ListLit(AstNode):
    elements: list[AstNode]


@dataclass(eq=False)
class VarRef(AstNode):
    name: str


@dataclass(eq=False)
class Assign(AstNode):
    target: str
    rhs: AstNode


@dataclass(eq=False)
class FunCall(AstNode):
    name: str
    args: list[AstNode]
    # texture name consumed from a string literal first argument (imagergb)
    texture: "str | None" = None


@dataclass(eq=False)
class UserFunDef(AstNode):
    name: str
    params: list[str]
    body: AstNode


@dataclass(eq=False)
class If(AstNode):
    cond: AstNode
    then: AstNode
    orelse: "AstNode | None"


@dataclass(eq=False)
class Repeat(AstNode):
    count: AstNode
    body: AstNode
    counter: str = LOOP_VAR  # renamed apart during analysis


@dataclass(eq=False)
class Apply(AstNode):
    source: AstNode
    var: str
    body: AstNode


@dataclass(eq=False)
class Sequence(AstNode):
    exprs: list[AstNode]


@dataclass(eq=False)
class Index(AstNode):
    base: AstNode
    index: AstNode


@dataclass
class Program:
    statements: list[AstNode]
    functions: dict[tuple[str, int], UserFunDef] = field(default_factory=dict)
    source: str = ""
    next_id: int = 0

    def fresh_id(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid


def children(node: AstNode) -> list[AstNode]:
    if isinstance(node, ListLit):
        return list(node.elements)
    if isinstance(node, Assign):
        return [node.rhs]
    if isinstance(node, FunCall):
        return list(node.args)
    if isinstance(node, UserFunDef):
        return [node.body]
    if isinstance(node, If):
        return [node.cond, node.then] + ([node.orelse] if node.orelse else [])
    if isinstance(node, Repeat):
        return [node.count, node.body]
    if isinstance(node, Apply):
        return [node.source, node.body]
    if isinstance(node, Sequence):
        return list(node.exprs)
    if isinstance(node, Index):
        return [node.base, node.index]
    return []


def walk(node: AstNode):
    yield node
    for c in children(node):
        yield from walk(c)


def iter_program(program: Program):
    for fn in program.functions.values():
        yield from walk(fn)
    for stmt in program.statements:
        yield from walk(stmt)


def assert_unique_ids(program: Program) -> None:
    seen = set()
    for node in iter_program(program):
        assert node.nid not in seen, f"duplicate node id {node.nid}"
        seen.add(node.nid)


# ---------------------------------------------------------------------------
# free variables

def _free_vars(node: AstNode, bound: frozenset, assigned: frozenset, out: set) -> None:
    if isinstance(node, VarRef):
        if node.name not in bound and node.name not in assigned:
            out.add(node.name)
    elif isinstance(node, Repeat):
        _free_vars(node.count, bound, assigned, out)
        _free_vars(node.body, bound | {LOOP_VAR}, assigned, out)
    elif isinstance(node, Apply):
        _free_vars(node.source, bound, assigned, out)
        _free_vars(node.body, bound | {node.var}, assigned, out)
    elif isinstance(node, UserFunDef):
        inner_assigned = assigned | {a.target for a in walk(node.body) if isinstance(a, Assign)}
        _free_vars(node.body, bound | set(node.params), inner_assigned, out)
    else:
        for c in children(node):
            _free_vars(c, bound, assigned, out)


def free_variables(program: Program) -> set:
    """Names referenced but never assigned and not builtin constants."""
    assigned = frozenset(
        node.target for node in iter_program(program) if isinstance(node, Assign)
    )
    out: set = set()
    for fn in program.functions.values():
        _free_vars(fn, frozenset(), assigned, out)
    for stmt in program.statements:
        _free_vars(stmt, frozenset(), assigned, out)
    return out


# ---------------------------------------------------------------------------
# pretty printer (canonical compact source form)

_BINOP_PREC = {
    "%": 4, "&": 5,
    "<": 8, "<=": 8, ">": 8, ">=": 8, "==": 8, "!=": 8,
    "+": 10, "-": 10,
    "*": 20, "/": 20,
    "^": 30,
}
_UNARY_PREC = 25
_BINOPS = set(_BINOP_PREC)


def _fmt_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, complex):
        if value == 1j:
            return "i"
        raise AssertionError("only the unit imaginary constant is a literal")
    return repr(float(value))


def pretty(node: AstNode, prec: int = 0) -> str:
    text, my_prec = _pretty_inner(node)
    if my_prec < prec:
        return f"({text})"
    return text


def _pretty_inner(node: AstNode) -> tuple[str, int]:
    if isinstance(node, NumberLit):
        text = _fmt_number(node.value)
        return text, (_UNARY_PREC if text.startswith("-") else 100)
    if isinstance(node, BoolLit):
        return ("true" if node.value else "false"), 100
    if isinstance(node, VarRef):
        return node.name, 100
    if isinstance(node, ListLit):
        return "[" + ",".join(pretty(e) for e in node.elements) + "]", 100
    if isinstance(node, Assign):
        return f"{node.target}={pretty(node.rhs, 2)}", 2
    if isinstance(node, UserFunDef):
        return f"{node.name}({','.join(node.params)}):={pretty(node.body, 2)}", 2
    if isinstance(node, If):
        parts = [pretty(node.cond), pretty(node.then)]
        if node.orelse is not None:
            parts.append(pretty(node.orelse))
        return "if(" + ",".join(parts) + ")", 100
    if isinstance(node, Repeat):
        return f"repeat({pretty(node.count)},{pretty(node.body)})", 100
    if isinstance(node, Apply):
        return f"apply({pretty(node.source)},{node.var},{pretty(node.body)})", 100
    if isinstance(node, Sequence):
        return "(" + ";".join(pretty(e) for e in node.exprs) + ")", 100
    if isinstance(node, Index):
        return f"{pretty(node.base, 40)}_{pretty(node.index, 41)}", 40
    if isinstance(node, FunCall):
        return _pretty_call(node)
    raise AssertionError(node)


def _pretty_call(node: FunCall) -> tuple[str, int]:
    name, args = node.name, node.args
    if name == "abs" and len(args) == 1:
        return f"|{pretty(args[0])}|", 100
    if name == "neg" and len(args) == 1:
        return f"-{pretty(args[0], _UNARY_PREC)}", _UNARY_PREC
    if name == "!" and len(args) == 1:
        return f"!{pretty(args[0], _UNARY_PREC)}", _UNARY_PREC
    if name in _BINOPS and len(args) == 2:
        p = _BINOP_PREC[name]
        right_assoc = name == "^"
        lhs = pretty(args[0], p + (1 if right_assoc else 0))
        rhs = pretty(args[1], p + (0 if right_assoc else 1))
        # avoid gluing an infix minus onto a negative literal: 3--2 -> 3-(-2)
        if name in ("-", "+") and (rhs.startswith("-") or rhs.startswith("!")):
            rhs = f"({rhs})"
        return f"{lhs}{name}{rhs}", p
    inner = ",".join(pretty(a) for a in args)
    if node.texture is not None:
        inner = f'"{node.texture}"' + ("," + inner if inner else "")
    return f"{name}({inner})", 100


def pretty_program(program: Program) -> str:
    parts = [pretty(fn) for fn in program.functions.values()]
    parts += [pretty(s) for s in program.statements]
    return ";".join(parts) + ";"


# ---------------------------------------------------------------------------
# structural equality and hashing (ids and spans ignored)

def struct_key(node: AstNode):
    if isinstance(node, NumberLit):
        payload = ("num", repr(node.value))
    elif isinstance(node, BoolLit):
        payload = ("bool", node.value)
    elif isinstance(node, VarRef):
        payload = ("var", node.name)
    elif isinstance(node, Assign):
        payload = ("assign", node.target)
    elif isinstance(node, FunCall):
        payload = ("call", node.name, node.texture)
    elif isinstance(node, UserFunDef):
        payload = ("fundef", node.name, tuple(node.params))
    elif isinstance(node, Apply):
        payload = ("apply", node.var)
    elif isinstance(node, If):
        payload = ("if", node.orelse is not None)
    else:
        payload = (node.kind,)
    return payload + tuple(struct_key(c) for c in children(node))


def struct_eq(a: AstNode, b: AstNode) -> bool:
    return struct_key(a) == struct_key(b)


def program_key(program: Program):
    return tuple(struct_key(fn) for fn in program.functions.values()) + tuple(
        struct_key(s) for s in program.statements
    )


# ---------------------------------------------------------------------------
# JSON dump for the CLI `graph --ast` output

def node_json(node: AstNode) -> dict:
    extra = {}
    if isinstance(node, (NumberLit, BoolLit)):
        extra["value"] = _fmt_number(node.value)
    if isinstance(node, VarRef):
        extra["name"] = node.name
    if isinstance(node, Assign):
        extra["target"] = node.target
    if isinstance(node, FunCall):
        extra["name"] = node.name
        if node.texture is not None:
            extra["texture"] = node.texture
    if isinstance(node, UserFunDef):
        extra["name"] = node.name
        extra["params"] = list(node.params)
    if isinstance(node, Apply):
        extra["var"] = node.var
    return {
        "id": node.nid,
        "kind": node.kind,
        "children": [node_json(c) for c in children(node)],
        "span": list(node.span),
        **extra,
    }


def program_json(program: Program) -> dict:
    return {
        "functions": [node_json(fn) for fn in program.functions.values()],
        "statements": [node_json(s) for s in program.statements],
    }
