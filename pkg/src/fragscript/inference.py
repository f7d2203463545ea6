"""Minimal type assignment over the relevant expressions by fixed-point iteration.

The update F is applied as a full Jacobi sweep (every node recomputed from
the previous iterate), which makes the iteration order irrelevant and lets
the `check` command print the iterate table column by column.  Iteration
starts at bot and stops at the first stationary sweep; the result is the
least assignment compatible with the program.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import builtins as bi
from .depgraph import AnalyzedProgram, DependencyGraph, SplitResult
from .errors import NonTermination
from .lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, ListType, TypeTerm,
    contains_bot, is_subtype, join, join_all, list_depth, make_list,
)
from .syntax import (
    Apply, BoolLit, FunCall, If, Index, ListLit, NumberLit, Repeat, walk,
)


@dataclass
class InferenceContext:
    graph: DependencyGraph
    rules: dict                      # gid -> rule tuple
    order: list                      # row order for the printable table
    tau0: "TypeTerm | None" = None
    max_list_depth: int = 1


@dataclass
class TypeAssignment:
    gamma: dict
    history: list = field(default_factory=list)
    iteration_count: int = 0

    def of(self, gid: int) -> TypeTerm:
        return self.gamma[gid]


def literal_type(node) -> TypeTerm:
    if isinstance(node, BoolLit):
        return BOOLEAN
    v = node.value
    if isinstance(v, int):
        return INT
    if isinstance(v, complex):
        return COMPLEX
    return REAL


def const_position_nodes(analysis: AnalyzedProgram) -> set:
    """AST ids whose integer value is baked into the shader as a constant:
    repeat counts and integer exponents."""
    out = set()
    for stmt in analysis.statements:
        for node in walk(stmt):
            if isinstance(node, Repeat):
                out.add(node.count.nid)
            elif isinstance(node, FunCall) and node.name == "^":
                out.add(node.args[1].nid)
    return out


def _value_gid(graph: DependencyGraph, ast) -> int:
    return graph.node_of(ast)


def build_rules(graph: DependencyGraph, domain: set, uniform_types: dict,
                tau0: "TypeTerm | None") -> dict:
    rules = {}
    for gid in domain:
        node = graph.node(gid)
        if gid == graph.running_gid:
            rules[gid] = ("running", tau0)
        elif gid in uniform_types:
            rules[gid] = ("uniform", uniform_types[gid])
        elif node.role == "counter":
            rules[gid] = ("counter",)
        elif node.role == "binder":
            rules[gid] = ("binder", graph.binder_source[gid])
        elif node.role == "var":
            rhs = [_value_gid(graph, r) for r in graph.assignments.get(gid, [])]
            rules[gid] = ("var", tuple(rhs))
        else:
            rules[gid] = _expr_rule(graph, node.ast)
    for rule in rules.values():
        for ref in _rule_refs(rule):
            assert ref in domain, f"rule references node outside the domain: {rule}"
    return rules


def _expr_rule(graph: DependencyGraph, ast):
    g = graph.node_of
    if isinstance(ast, (NumberLit, BoolLit)):
        return ("uniform", literal_type(ast))
    if isinstance(ast, ListLit):
        return ("list", tuple(g(e) for e in ast.elements))
    if isinstance(ast, FunCall):
        return ("call", ast.name, tuple(g(a) for a in ast.args))
    if isinstance(ast, Index):
        const = ast.index.value if isinstance(ast.index, NumberLit) and isinstance(ast.index.value, int) else None
        return ("index", g(ast.base), g(ast.index), const)
    if isinstance(ast, If):
        return ("if", g(ast.cond), g(ast.then), g(ast.orelse) if ast.orelse else None)
    if isinstance(ast, Repeat):
        return ("repeat", g(ast.count), g(ast.body))
    if isinstance(ast, Apply):
        return ("apply", g(ast.source), g(ast.body))
    raise AssertionError(ast)


def _rule_refs(rule):
    kind = rule[0]
    if kind in ("var", "list", "call"):
        return [r for r in rule[-1]]
    if kind == "binder":
        return [rule[1]]
    if kind == "index":
        return [rule[1], rule[2]]
    if kind == "if":
        return [r for r in rule[1:] if r is not None]
    if kind in ("repeat", "apply"):
        return [rule[1], rule[2]]
    return []


def _elem_of(t: TypeTerm) -> TypeTerm:
    if t is BOT:
        return BOT
    if isinstance(t, ListType):
        return t.elem
    return TOP


def _update(rule, gamma, gid) -> TypeTerm:
    kind = rule[0]
    if kind == "uniform":
        return join(gamma[gid], rule[1])
    if kind == "running":
        return join(gamma[gid], rule[1])
    if kind == "counter":
        return join(gamma[gid], INT)
    if kind == "var":
        return join(gamma[gid], join_all(gamma[r] for r in rule[1]))
    if kind == "binder":
        return _elem_of(gamma[rule[1]])
    if kind == "call":
        args = tuple(gamma[a] for a in rule[2])
        if any(contains_bot(t) for t in args):
            return BOT  # wait for the arguments to become fully typed
        sig = bi.min_sign(rule[1], args)
        return TOP if sig is None else sig.ret
    if kind == "list":
        elems = [gamma[e] for e in rule[1]]
        return make_list(len(elems), join_all(elems))
    if kind == "index":
        base = gamma[rule[1]]
        if base is BOT:
            return BOT
        if not isinstance(base, ListType):
            return TOP
        if not is_subtype(gamma[rule[2]], INT):
            return TOP
        if rule[3] is not None and not (1 <= rule[3] <= base.length):
            return TOP
        return base.elem
    if kind == "if":
        cond = gamma[rule[1]]
        if not is_subtype(cond, BOOLEAN):
            return TOP
        then = gamma[rule[2]]
        return join(then, gamma[rule[3]]) if rule[3] is not None else then
    if kind == "repeat":
        if not is_subtype(gamma[rule[1]], INT):
            return TOP
        return gamma[rule[2]]
    if kind == "apply":
        src = gamma[rule[1]]
        if src is BOT:
            return BOT
        if not isinstance(src, ListType):
            return TOP
        return make_list(src.length, gamma[rule[2]])
    raise AssertionError(rule)


def apply_f(gamma: dict, ctx: InferenceContext, order=None) -> dict:
    """One full sweep of the monotone update, from the previous iterate."""
    gids = order if order is not None else list(ctx.rules)
    return {gid: _update(ctx.rules[gid], gamma, gid) for gid in gids}


def infer(ctx: InferenceContext) -> TypeAssignment:
    gamma = {gid: BOT for gid in ctx.rules}
    history = [dict(gamma)]
    bound = max(8, len(ctx.rules) * (4 + 2 * ctx.max_list_depth))
    changed_sweeps = 0
    while True:
        nxt = apply_f(gamma, ctx)
        for gid in gamma:
            assert is_subtype(gamma[gid], nxt[gid]), (
                f"non-monotone update at {ctx.graph.node(gid).label!r}: "
                f"{gamma[gid]} -> {nxt[gid]}"
            )
        if nxt == gamma:
            break
        changed_sweeps += 1
        if changed_sweeps > bound:
            raise NonTermination(
                f"type inference did not stabilize within {bound} sweeps"
            )
        history.append(dict(nxt))
        gamma = nxt
    history.append(dict(gamma))  # the confirming column: F^k = F^(k-1)
    return TypeAssignment(gamma=gamma, history=history, iteration_count=len(history) - 1)


@dataclass
class WellTypedResult:
    ok: bool
    offenders: list = field(default_factory=list)  # gids


def check_well_typed(assignment: TypeAssignment, split: "SplitResult | None") -> WellTypedResult:
    """Well typed iff no node is top and no GPU node is (or contains) bot."""
    offenders = []
    d = split.d if split is not None else set()
    for gid, t in assignment.gamma.items():
        if t is TOP:
            offenders.append(gid)
        elif gid in d and (t is BOT or contains_bot(t)):
            offenders.append(gid)
    return WellTypedResult(not offenders, sorted(offenders))


# ---------------------------------------------------------------------------
# context builders

def _max_depth(analysis: AnalyzedProgram, extra_types) -> int:
    depth = 1
    for stmt in analysis.statements:
        for node in walk(stmt):
            if isinstance(node, ListLit):
                d, cur = 0, node
                while isinstance(cur, ListLit):
                    d, cur = d + 1, cur.elements[0]
                depth = max(depth, d)
    for t in extra_types:
        if t is not None:
            depth = max(depth, list_depth(t))
    return depth


def build_split_context(analysis: AnalyzedProgram, split: SplitResult,
                        tau0: TypeTerm, uniform_types: dict) -> InferenceContext:
    """uniform_types: gid -> type of the CPU-computed value for every u in U."""
    assert set(uniform_types) == split.u, "every uniform needs a type"
    rules = build_rules(split.graph, split.relevant, uniform_types, tau0)
    order = _row_order(split.graph, split.relevant)
    depth = _max_depth(analysis, [tau0, *uniform_types.values()])
    return InferenceContext(split.graph, rules, order, tau0, depth)


def build_check_context(analysis: AnalyzedProgram, graph: DependencyGraph,
                        tau0: "TypeTerm | None" = None) -> InferenceContext:
    """Whole-program typing: every literal acts as a constant uniform."""
    const_pos = const_position_nodes(analysis)
    uniform_types = {}
    for node in graph.nodes:
        if node.role == "expr" and isinstance(node.ast, (NumberLit, BoolLit)):
            t = literal_type(node.ast)
            if t is INT and node.ast.nid in const_pos:
                t = ConstInt(node.ast.value)
            uniform_types[node.gid] = t
    domain = {node.gid for node in graph.nodes}
    rules = build_rules(graph, domain, uniform_types, tau0)
    order = _row_order(graph, domain)
    depth = _max_depth(analysis, [tau0])
    return InferenceContext(graph, rules, order, tau0, depth)


def _row_order(graph: DependencyGraph, domain: set) -> list:
    """Variables in first-occurrence order, then compound terms, then literals."""
    variables, compounds, literals = [], [], []
    for node in graph.nodes:  # creation order follows the statement walk
        if node.gid not in domain:
            continue
        if node.role != "expr":
            variables.append(node.gid)
        elif isinstance(node.ast, (NumberLit, BoolLit)):
            literals.append(node.gid)
        else:
            compounds.append(node.gid)
    return variables + compounds + literals


def iteration_table(ctx: InferenceContext, assignment: TypeAssignment) -> dict:
    """Rows (term label, one type per iterate) in the canonical text form."""
    rows = []
    for gid in ctx.order:
        label = ctx.graph.node(gid).label
        rows.append({
            "term": label,
            "types": [str(step[gid]) for step in assignment.history],
        })
    k = assignment.iteration_count
    return {
        "rows": rows,
        "iterations": k,
        "stationary": f"F^{k - 1}(bot) = F^{k}(bot)",
    }
