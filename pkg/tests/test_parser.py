"""Tokenizer and parser behaviour, including round-trip normalization."""

import pytest

from fragscript.errors import LexError, ParseError
from fragscript.parser import parse, tokenize
from fragscript.syntax import (
    Apply, Assign, FunCall, If, Index, ListLit, NumberLit, Repeat, Sequence,
    assert_unique_ids, free_variables, pretty, pretty_program, program_key,
)


def test_tokenize_simple():
    kinds = [(t.kind, t.text) for t in tokenize("1/2")]
    assert kinds == [("number", "1"), ("op", "/"), ("number", "2"), ("eof", "")]


def test_tokenize_call():
    texts = [t.text for t in tokenize("sqrt(a)")][:-1]
    assert texts == ["sqrt", "(", "a", ")"]


def test_tokenize_fundef_with_bars():
    texts = [t.text for t in tokenize("f(P) := |P|")][:-1]
    assert texts == ["f", "(", "P", ")", ":=", "|", "P", "|"]


def test_tokenize_spans_cover_input():
    source = "a = 1 + foo(2.5); b=|a|"
    toks = tokenize(source)
    for tok in toks[:-1]:
        assert source[tok.span[0]:tok.span[1]] == tok.text


def test_tokenize_comments_and_illegal():
    assert [t.text for t in tokenize("1 // x\n+2")][:-1] == ["1", "+", "2"]
    with pytest.raises(LexError):
        tokenize("a ~ b")


def test_parse_wave_shape():
    prog = parse("1/2+1/2*sin(|#|-seconds())")
    (root,) = prog.statements
    assert isinstance(root, FunCall) and root.name == "+"
    lhs, rhs = root.args
    assert pretty(lhs) == "1/2"
    assert isinstance(rhs, FunCall) and rhs.name == "*"
    assert pretty(rhs.args[1]) == "sin(|#|-seconds())"


def test_parse_assignment_sequence():
    prog = parse("a = -2; b = sqrt(a); a = b + 1;")
    assert [s.kind for s in prog.statements] == ["Assign", "Assign", "Assign"]
    first = prog.statements[0]
    assert isinstance(first.rhs, NumberLit) and first.rhs.value == -2


def test_power_right_associative():
    prog = parse("2^3^2")
    (root,) = prog.statements
    assert pretty(root) == "2^3^2"
    assert isinstance(root.args[1], FunCall) and root.args[1].name == "^"


def test_unary_minus_binds_looser_than_power():
    (root,) = parse("-2^2").statements
    assert isinstance(root, FunCall) and root.name == "neg"
    assert pretty(root) == "-2^2"


def test_precedence_comparison_and_bool():
    (root,) = parse("min(v) <= 0 & 0 <= max(v)").statements
    assert root.name == "&"
    assert root.args[0].name == "<="


def test_norm_bars_nest():
    (root,) = parse("|P-A|/|P-B|").statements
    assert root.name == "/"
    assert root.args[0].name == "abs"
    (root,) = parse("||x|-|y||").statements
    assert root.name == "abs"


def test_paren_vector_and_sequence():
    (root,) = parse("(x, y, -1)").statements
    assert isinstance(root, ListLit) and len(root.elements) == 3
    (root,) = parse("(a = 1; a + 2)").statements
    assert isinstance(root, Sequence)


def test_fundef_and_field_access():
    prog = parse("f(P) := (x = P.x; y = P.y; x^3 + a*x + b - y^2); f([1,2])")
    assert ("f", 1) in prog.functions
    body = prog.functions[("f", 1)].body
    assert isinstance(body, Sequence)
    first = body.exprs[0]
    assert isinstance(first.rhs, Index) and first.rhs.index.value == 1


def test_index_operator():
    (root,) = parse("values_2^2").statements
    assert root.name == "^"
    assert isinstance(root.args[0], Index)


def test_if_repeat_apply():
    (root,) = parse("if(a < 1, 2, 3)").statements
    assert isinstance(root, If) and root.orelse is not None
    (root,) = parse("if(a < 1, 2)").statements
    assert root.orelse is None
    (root,) = parse("repeat(5, s = s + #)").statements
    assert isinstance(root, Repeat)
    (root,) = parse("apply(l, v, v*2)").statements
    assert isinstance(root, Apply) and root.var == "v"


def test_branch_statement_lists():
    (root,) = parse("if(c, s = 1; s*2, 0)").statements
    assert isinstance(root.then, Sequence)


def test_imagergb_texture_name():
    (root,) = parse('imagergb("julia", z^2+c)').statements
    assert isinstance(root, FunCall) and root.texture == "julia" and len(root.args) == 1


def test_string_rejected_elsewhere():
    with pytest.raises(ParseError):
        parse('x = "oops"')
    with pytest.raises(ParseError):
        parse('foo("tex", 1)')


def test_colorplot_rejected():
    with pytest.raises(ParseError):
        parse('colorplot("t", 1)')


def test_constants_and_bools():
    (root,) = parse("2*i + pi").statements
    assert pretty(root.args[0].args[1]) == "i"
    (root,) = parse("true & false").statements
    assert root.name == "&"


def test_assign_to_literal_rejected():
    with pytest.raises(ParseError):
        parse("i = 5")
    with pytest.raises(ParseError):
        parse("1 = 5")


def test_parse_errors_have_spans():
    for bad in ["a = ", "f(1) := 2", "(a", "[" , "[]", "if(1,)"]:
        with pytest.raises((ParseError, LexError)) as exc:
            parse(bad)
        span = exc.value.span
        assert 0 <= span[0] <= span[1] <= len(bad) + 1


def test_unique_node_ids():
    prog = parse("f(x) := x + 1; f(1) + f(2); a = [1, 2]; a_1")
    assert_unique_ids(prog)


def test_roundtrip_programs():
    sources = [
        "1/2+1/2*sin(|#|-seconds())",
        "a=-2;b=sqrt(a);a=b+1;",
        "f(P):=(x=P_1;y=P_2;x^3+a*x+b-y^2);f(P+delta)",
        "if(1-x^2-y^2>=0,(s=[x,y,-|sqrt(1-x^2-y^2)|];(s*lightdir)*lightcolor),background)",
        'if(|z|<2,imagergb("julia",z^2+c)+[0.01,0.02,0.03],[0,0,0])',
        "repeat(5,s=s+#);apply(l,v,v*2)",
        "2^3^2;(2^3)^2;-2^2;3-(-2);a%b&c",
    ]
    for src in sources:
        prog = parse(src)
        printed = pretty_program(prog)
        again = parse(printed)
        assert program_key(prog) == program_key(again), src
        assert pretty_program(again) == printed  # idempotent normal form


def test_free_variables():
    assert free_variables(parse("1/2+1/2*sin(|#|-seconds())")) == {"#"}
    assert free_variables(parse("a=1; a+1")) == set()
    assert free_variables(parse("a=1;b=2; x^3 + a*x + b - y^2")) == {"x", "y"}
    assert free_variables(parse("repeat(5, s = s + #); s")) == set()
    assert free_variables(parse("apply(l, v, v*w)")) == {"l", "w"}
    assert free_variables(parse("f(P) := |P-A|/|P-B|-r; f(Q)")) == {"A", "B", "r", "Q"}
    assert free_variables(parse("2*i + pi")) == set()
