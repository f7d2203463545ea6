"""Tokenizer and Pratt parser producing a Program.

Precedence (loosest to tightest): `;`  `=`/`:=`  `%`  `&`  comparisons
`+ -`  `* /`  unary `-`/`!`  `^` (right-assoc)  indexing `_` and `.xyz`.
Norm bars disambiguate by position: a `|` where an operand is expected
opens, any other `|` closes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import LexError, ParseError
from .syntax import (
    Apply, Assign, AstNode, BoolLit, FunCall, If, Index, ListLit, NumberLit,
    Program, Repeat, Sequence, Span, UserFunDef, VarRef,
)

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|//[^\n]*)
      | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z][A-Za-z0-9]*|\#)
      | (?P<string>"[^"\n]*")
      | (?P<op>:=|<=|>=|==|!=|[-+*/^|()\[\],;=<>&%!._])
    """,
    re.VERBOSE,
)

KEYWORD_CALLS = ("if", "repeat", "apply")


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | string | op | eof
    text: str
    span: Span


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"illegal character {source[pos]!r}", (pos, pos + 1))
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append(Token(m.lastgroup, m.group(), (m.start(), m.end())))
    tokens.append(Token("eof", "", (len(source), len(source))))
    return tokens


_BIN_LEFT = {
    "%": 4, "&": 5,
    "<": 8, "<=": 8, ">": 8, ">=": 8, "==": 8, "!=": 8,
    "+": 10, "-": 10, "*": 20, "/": 20,
}
_UNARY_BP = 25
_POW_BP = 30
_INDEX_BP = 40


class _Parser:
    def __init__(self, tokens: list[Token], source: str):
        self.tokens = tokens
        self.pos = 0
        self.program = Program(statements=[], source=source)

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.span)
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def node(self, cls, span, *args, **kw):
        return cls(self.program.fresh_id(), span, *args, **kw)

    # -- grammar ------------------------------------------------------------

    def parse_program(self) -> Program:
        stmts = self.parse_statements(("eof",))
        if self.peek().kind != "eof":
            tok = self.peek()
            raise ParseError(f"unexpected {tok.text!r}", tok.span)
        self.program.statements = stmts
        if not stmts:
            raise ParseError("empty program", (0, 0))
        return self.program

    def parse_statements(self, stop_texts) -> list[AstNode]:
        stmts: list[AstNode] = []
        while True:
            while self.at(";"):
                self.next()
            if self.peek().text in stop_texts or self.peek().kind == "eof":
                break
            expr = self.parse_expr(0)
            if isinstance(expr, UserFunDef):
                key = (expr.name, len(expr.params))
                if key in self.program.functions:
                    raise ParseError(f"function {expr.name!r} redefined", expr.span)
                self.program.functions[key] = expr
            else:
                stmts.append(expr)
            if self.at(";"):
                self.next()
            else:
                break
        return stmts

    def parse_expr(self, min_bp: int) -> AstNode:
        lhs = self.parse_prefix()
        while True:
            tok = self.peek()
            text = tok.text
            if text in ("=", ":=") and min_bp <= 2:
                self.next()
                rhs = self.parse_expr(2)  # right-assoc
                lhs = self.make_binding(lhs, rhs, text, tok.span)
                continue
            if text == "^" and min_bp <= _POW_BP:
                self.next()
                rhs = self.parse_expr(_POW_BP)  # right-assoc
                lhs = self.node(FunCall, (lhs.span[0], rhs.span[1]), "^", [lhs, rhs])
                continue
            if text in _BIN_LEFT and _BIN_LEFT[text] >= min_bp:
                self.next()
                rhs = self.parse_expr(_BIN_LEFT[text] + 1)
                lhs = self.node(FunCall, (lhs.span[0], rhs.span[1]), text, [lhs, rhs])
                lhs = self.fold_neg(lhs)
                continue
            if text in ("_", ".") and min_bp <= _INDEX_BP:
                lhs = self.parse_index(lhs)
                continue
            break
        return lhs

    def parse_index(self, base: AstNode) -> AstNode:
        tok = self.next()
        if tok.text == "_":
            idx = self.parse_expr(_INDEX_BP + 1)
            return self.node(Index, (base.span[0], idx.span[1]), base, idx)
        field = self.next()
        comp = {"x": 1, "y": 2, "z": 3}.get(field.text)
        if field.kind != "ident" or comp is None:
            raise ParseError("expected .x, .y or .z", field.span)
        idx = self.node(NumberLit, field.span, comp)
        return self.node(Index, (base.span[0], field.span[1]), base, idx)

    def make_binding(self, lhs: AstNode, rhs: AstNode, op: str, span: Span) -> AstNode:
        full = (lhs.span[0], rhs.span[1])
        if op == "=":
            if not isinstance(lhs, VarRef):
                raise ParseError("left side of = must be a variable", span)
            return self.node(Assign, full, lhs.name, rhs)
        if not isinstance(lhs, FunCall) or lhs.texture is not None:
            raise ParseError("left side of := must look like f(x,...)", span)
        params = []
        for arg in lhs.args:
            if not isinstance(arg, VarRef):
                raise ParseError("function parameters must be plain names", arg.span)
            params.append(arg.name)
        if len(set(params)) != len(params):
            raise ParseError("duplicate parameter name", span)
        return self.node(UserFunDef, full, lhs.name, params, rhs)

    def parse_prefix(self) -> AstNode:
        tok = self.next()
        if tok.kind == "number":
            text = tok.text
            if re.fullmatch(r"\d+", text):
                return self.node(NumberLit, tok.span, int(text))
            return self.node(NumberLit, tok.span, float(text))
        if tok.kind == "string":
            raise ParseError("string literals are only allowed as texture names", tok.span)
        if tok.text == "-":
            operand = self.parse_expr(_UNARY_BP)
            return self.fold_neg(self.node(FunCall, (tok.span[0], operand.span[1]), "neg", [operand]))
        if tok.text == "!":
            operand = self.parse_expr(_UNARY_BP)
            return self.node(FunCall, (tok.span[0], operand.span[1]), "!", [operand])
        if tok.text == "|":
            inner = self.parse_expr(0)
            end = self.expect("|")
            return self.node(FunCall, (tok.span[0], end.span[1]), "abs", [inner])
        if tok.text == "(":
            return self.parse_parens(tok)
        if tok.text == "[":
            return self.parse_list(tok, "]")
        if tok.kind == "ident":
            return self.parse_ident(tok)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.span)

    def fold_neg(self, node: AstNode) -> AstNode:
        """Collapse unary minus on a bare numeric literal into the literal."""
        if isinstance(node, FunCall) and node.name == "neg":
            inner = node.args[0]
            if isinstance(inner, NumberLit) and not isinstance(inner.value, complex):
                return self.node(NumberLit, node.span, -inner.value)
        return node

    def parse_parens(self, open_tok: Token) -> AstNode:
        first = self.parse_expr(0)
        if self.at(","):  # vector written with parentheses
            elems = [first]
            while self.at(","):
                self.next()
                elems.append(self.parse_expr(0))
            end = self.expect(")")
            return self.node(ListLit, (open_tok.span[0], end.span[1]), elems)
        if self.at(";"):
            exprs = [first] if not isinstance(first, UserFunDef) else []
            if isinstance(first, UserFunDef):
                self.register_fun(first)
            self.next()
            exprs += self.parse_statements((")",))
            end = self.expect(")")
            if not exprs:
                raise ParseError("sequence has no value", (open_tok.span[0], end.span[1]))
            return self.node(Sequence, (open_tok.span[0], end.span[1]), exprs)
        self.expect(")")
        return first

    def register_fun(self, fn: UserFunDef) -> None:
        key = (fn.name, len(fn.params))
        if key in self.program.functions:
            raise ParseError(f"function {fn.name!r} redefined", fn.span)
        self.program.functions[key] = fn

    def parse_list(self, open_tok: Token, close: str) -> AstNode:
        if self.at(close):
            raise ParseError("empty list literal", open_tok.span)
        elems = [self.parse_expr(0)]
        while self.at(","):
            self.next()
            elems.append(self.parse_expr(0))
        end = self.expect(close)
        return self.node(ListLit, (open_tok.span[0], end.span[1]), elems)

    def parse_ident(self, tok: Token) -> AstNode:
        name = tok.text
        if name == "true":
            return self.node(BoolLit, tok.span, True)
        if name == "false":
            return self.node(BoolLit, tok.span, False)
        if name == "i" and not self.at("("):
            return self.node(NumberLit, tok.span, 1j)
        if name == "pi" and not self.at("("):
            return self.node(NumberLit, tok.span, math.pi)
        if not self.at("("):
            return self.node(VarRef, tok.span, name)
        self.next()  # consume (
        if name == "colorplot":
            raise ParseError("colorplot cannot be nested inside a plotted expression", tok.span)
        if name == "if":
            return self.finish_if(tok)
        if name == "repeat":
            return self.finish_repeat(tok)
        if name == "apply":
            return self.finish_apply(tok)
        texture = None
        if self.peek().kind == "string":
            tex_tok = self.next()
            texture = tex_tok.text[1:-1]
            if self.at(","):
                self.next()
        args = []
        if not self.at(")"):
            args.append(self.parse_expr(0))
            while self.at(","):
                self.next()
                args.append(self.parse_expr(0))
        end = self.expect(")")
        if texture is not None and name != "imagergb":
            raise ParseError(f"{name!r} does not take a texture name", tok.span)
        return self.node(FunCall, (tok.span[0], end.span[1]), name, args, texture=texture)

    def finish_if(self, tok: Token) -> AstNode:
        cond = self.parse_expr(0)
        self.expect(",")
        then = self.parse_branch()
        orelse = None
        if self.at(","):
            self.next()
            orelse = self.parse_branch()
        end = self.expect(")")
        return self.node(If, (tok.span[0], end.span[1]), cond, then, orelse)

    def parse_branch(self) -> AstNode:
        """A branch may be a `;`-separated statement list, like a paren body."""
        start = self.peek()
        first = self.parse_expr(0)
        if not self.at(";"):
            return first
        exprs = [first] if not isinstance(first, UserFunDef) else []
        if isinstance(first, UserFunDef):
            self.register_fun(first)
        self.next()
        exprs += self.parse_statements((",", ")"))
        if not exprs:
            raise ParseError("branch has no value", start.span)
        if len(exprs) == 1:
            return exprs[0]
        return self.node(Sequence, (start.span[0], exprs[-1].span[1]), exprs)

    def finish_repeat(self, tok: Token) -> AstNode:
        count = self.parse_expr(0)
        self.expect(",")
        body = self.parse_branch()
        end = self.expect(")")
        return self.node(Repeat, (tok.span[0], end.span[1]), count, body)

    def finish_apply(self, tok: Token) -> AstNode:
        source = self.parse_expr(0)
        self.expect(",")
        var = self.next()
        if var.kind != "ident":
            raise ParseError("apply needs a plain variable name", var.span)
        self.expect(",")
        body = self.parse_branch()
        end = self.expect(")")
        return self.node(Apply, (tok.span[0], end.span[1]), source, var.text, body)


def parse(source: str) -> Program:
    return _Parser(tokenize(source), source).parse_program()
