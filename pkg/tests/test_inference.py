"""Fixed-point inference: the published iterate table, compatibility,
minimality against exhaustive enumeration, and determinism."""

import itertools
import random

import pytest

from fragscript import builtins as bi
from fragscript.depgraph import build_graph, expand_program, split
from fragscript.inference import (
    apply_f, build_check_context, build_split_context,
    check_well_typed, infer, iteration_table,
)
from fragscript.lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, is_subtype, join,
    make_list,
)
from fragscript.parser import parse

L2R = make_list(2, REAL)


def check_ctx(src, tau0=None, running=None):
    analysis = expand_program(parse(src))
    graph = build_graph(analysis, running)
    return build_check_context(analysis, graph, tau0)


def gamma_by_label(ctx, assignment):
    return {ctx.graph.node(gid).label: t for gid, t in assignment.gamma.items()}


def test_paper_table_reproduced_exactly():
    ctx = check_ctx("a=-2; b=sqrt(a); a=b+1;")
    assignment = infer(ctx)
    table = iteration_table(ctx, assignment)
    rows = {r["term"]: r["types"] for r in table["rows"]}
    assert list(r["term"] for r in table["rows"]) == ["a", "b", "sqrt(a)", "b+1", "-2", "1"]
    assert rows["a"] == ["bot", "bot", "int", "int", "int", "int", "complex", "complex"]
    assert rows["b"] == ["bot", "bot", "bot", "bot", "complex", "complex", "complex", "complex"]
    assert rows["sqrt(a)"] == ["bot", "bot", "bot", "complex", "complex", "complex", "complex", "complex"]
    assert rows["b+1"] == ["bot", "bot", "bot", "bot", "bot", "complex", "complex", "complex"]
    assert rows["-2"] == ["bot", "int", "int", "int", "int", "int", "int", "int"]
    assert rows["1"] == ["bot", "int", "int", "int", "int", "int", "int", "int"]
    assert table["iterations"] == 7
    assert table["stationary"] == "F^6(bot) = F^7(bot)"


def test_fixed_point_is_stationary():
    ctx = check_ctx("a=-2; b=sqrt(a); a=b+1;")
    assignment = infer(ctx)
    assert apply_f(assignment.gamma, ctx) == assignment.gamma


def test_single_running_node():
    ctx = check_ctx("#", tau0=L2R, running="#")
    assignment = infer(ctx)
    assert assignment.gamma[ctx.graph.running_gid] == L2R
    assert assignment.iteration_count <= 2


def test_ill_typed_if_goes_top():
    ctx = check_ctx("if(booleanexp, 12, [0])")
    assignment = infer(ctx)
    by_label = gamma_by_label(ctx, assignment)
    assert by_label["if(booleanexp,12,[0])"] is TOP
    result = check_well_typed(assignment, None)
    assert not result.ok


def test_well_typed_example_passes():
    ctx = check_ctx("a=-2; b=sqrt(a); a=b+1;")
    result = check_well_typed(infer(ctx), None)
    assert result.ok


def test_monotone_chain_property():
    ctx = check_ctx("a = true; a = a + 1; a = a + 0.5; a = a + i; a")
    assignment = infer(ctx)
    by_label = gamma_by_label(ctx, assignment)
    assert by_label["a"] is COMPLEX
    for earlier, later in zip(assignment.history, assignment.history[1:]):
        for gid in earlier:
            assert is_subtype(earlier[gid], later[gid])


def test_order_does_not_change_result():
    ctx = check_ctx("a=-2; b=sqrt(a); a=b+1;")
    base = infer(ctx)
    rng = random.Random(3)
    order = list(ctx.rules)
    for _ in range(5):
        rng.shuffle(order)
        gamma = {gid: BOT for gid in ctx.rules}
        while True:
            nxt = apply_f(gamma, ctx, order=order)
            nxt = {gid: nxt[gid] for gid in ctx.rules}
            if nxt == gamma:
                break
            gamma = nxt
        assert gamma == base.gamma


def test_split_context_wave():
    analysis = expand_program(parse("1/2+1/2*sin(|#|-seconds())"))
    result = split(analysis, "#")
    uniform_types = {gid: REAL for gid in result.u}
    ctx = build_split_context(analysis, result, L2R, uniform_types)
    assignment = infer(ctx)
    assert assignment.gamma[result.graph.result_gid] is REAL
    assert check_well_typed(assignment, result).ok


def test_split_context_julia():
    analysis = expand_program(parse('if(|z|<2, imagergb("julia", z^2+c)+[0.01,0.02,0.03], [0,0,0])'))
    result = split(analysis, "z")
    graph = result.graph
    uniform_types = {}
    for gid in result.u:
        node = graph.node(gid)
        if node.name == "c":
            uniform_types[gid] = REAL
        elif node.label == "2" and _is_exponent(graph, gid):
            uniform_types[gid] = ConstInt(2)
        elif node.label in ("2", "0"):
            uniform_types[gid] = INT
        else:
            uniform_types[gid] = _uniform_guess(node)
    ctx = build_split_context(analysis, result, COMPLEX, uniform_types)
    assignment = infer(ctx)
    assert assignment.gamma[graph.result_gid] == make_list(3, REAL)
    assert check_well_typed(assignment, result).ok


def _is_exponent(graph, gid):
    from fragscript.syntax import FunCall
    for node in graph.nodes:
        if node.role == "expr" and isinstance(node.ast, FunCall) and node.ast.name == "^":
            if graph.node_of(node.ast.args[1]) == gid:
                return True
    return False


def _uniform_guess(node):
    from fragscript.inference import literal_type
    from fragscript.syntax import ListLit, NumberLit
    ast = node.ast
    if isinstance(ast, ListLit):
        return make_list(len(ast.elements), literal_type(ast.elements[0]))
    if isinstance(ast, NumberLit):
        return literal_type(ast)
    raise AssertionError(node.label)


def test_counter_and_binder_rules():
    ctx = check_ctx("s = 0; repeat(5, s = s + #); tinys = [[1,2],[3,4]]; apply(tinys, d, d_1*s)")
    assignment = infer(ctx)
    by_label = gamma_by_label(ctx, assignment)
    assert by_label["s"] is INT
    assert by_label["d"] == make_list(2, INT)
    assert by_label["apply(tinys,d,d_1*s)"] == make_list(2, INT)


def test_repeat_count_const_position():
    ctx = check_ctx("s = 0; repeat(5, s = s + 1); s")
    assignment = infer(ctx)
    by_label = gamma_by_label(ctx, assignment)
    assert by_label["5"] == ConstInt(5)
    assert by_label["s"] is INT


def test_exponent_const_position():
    ctx = check_ctx("x = 1.5; x^3")
    assignment = infer(ctx)
    by_label = gamma_by_label(ctx, assignment)
    assert by_label["3"] == ConstInt(3)
    assert by_label["x^3"] is REAL


def test_iteration_guard_trips_when_bound_is_too_small():
    from fragscript.errors import NonTermination
    # a long assignment chain needs one sweep per link; shrinking the bound
    # below that must trip the defensive guard rather than loop
    chain = "a0=1; " + "; ".join(f"a{k}=a{k - 1}" for k in range(1, 12)) + "; a11"
    ctx = check_ctx(chain)
    ctx.max_list_depth = -2  # forces bound = max(8, n * 0) = 8
    with pytest.raises(NonTermination):
        infer(ctx)


# ---------------------------------------------------------------------------
# minimality oracle: exhaustive enumeration over scalar assignments

SCALARS = (BOT, BOOLEAN, INT, REAL, COMPLEX, TOP)


def compatible(ctx, gamma):
    """Direct statement of the compatibility conditions, used as the oracle."""
    for gid, rule in ctx.rules.items():
        kind = rule[0]
        if kind == "uniform" and not is_subtype(rule[1], gamma[gid]):
            return False
        if kind == "running" and not is_subtype(rule[1], gamma[gid]):
            return False
        if kind == "counter" and not is_subtype(INT, gamma[gid]):
            return False
        if kind == "var":
            if any(not is_subtype(gamma[r], gamma[gid]) for r in rule[1]):
                return False
        if kind == "call":
            from fragscript.lattice import contains_bot
            args = tuple(gamma[a] for a in rule[2])
            if any(contains_bot(t) for t in args):
                ret = BOT
            else:
                sig = bi.min_sign(rule[1], args)
                ret = TOP if sig is None else sig.ret
            if not is_subtype(ret, gamma[gid]):
                return False
        if kind == "if":
            cond = gamma[rule[1]]
            branches = join(gamma[rule[2]], gamma[rule[3]] if rule[3] is not None else BOT)
            ret = branches if is_subtype(cond, BOOLEAN) else TOP
            if not is_subtype(ret, gamma[gid]):
                return False
    return True


SCALAR_PROGRAMS = [
    "a=-2; b=sqrt(a); a=b+1;",
    "a=1; b=a+0.5; b*2",
    "a=true; b=if(a, 1, 2); b+3",
    "x=2; y=x^2; y",
    "a=1; a=a+i; a",
    "p=0.5; sin(p)+cos(p)",
    "a=2; b=3; min(a,b)+max(a,b)",
    "c=i; re(c)+im(c)",
    "a=1; b=a<2; if(b, a, 0)",
    "t=1; t=t*2; t=t+0.5; t",
    "u=4; v=u/2; v",
    "b=true; c=b&false; if(c, 1.5, 2.5)",
    "n=3; m=mod(n, 2); m+1",
    "x=1.5; floor(x)+1",
]


@pytest.mark.parametrize("src", SCALAR_PROGRAMS)
def test_minimality_by_enumeration(src):
    ctx = check_ctx(src)
    gids = list(ctx.rules)
    assert len(gids) <= 11
    assignment = infer(ctx)
    assert compatible(ctx, assignment.gamma)
    found_smaller = False
    for combo in itertools.product(SCALARS, repeat=len(gids)):
        cand = dict(zip(gids, combo))
        if compatible(ctx, cand):
            if not all(is_subtype(assignment.gamma[g], cand[g]) for g in gids):
                found_smaller = True
                break
    assert not found_smaller, f"inference result not pointwise minimal for {src!r}"
