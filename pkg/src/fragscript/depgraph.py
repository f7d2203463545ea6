"""Dependency graph construction and the GPU/CPU split.

Before the graph is built, user-function calls are expanded per call site
(virtual assignments bind arguments to renamed parameters) and loop/apply
binders are renamed apart, so every variable name denotes one graph node.
Edges point from a node to what it depends on.  D is the set of nodes whose
value depends on the running variable; U is the frontier of immediate
dependencies of D outside D, evaluated on the CPU and passed as uniforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import FragscriptError, UnknownVariable
from .syntax import (
    Apply, Assign, AstNode, BoolLit, FunCall, If, Index, ListLit, LOOP_VAR,
    NumberLit, Program, Repeat, Sequence, UserFunDef, VarRef, pretty,
)

_RENAME_RE = re.compile(r"\$\d+|(?<=#)\d+")


def display_label(node: AstNode) -> str:
    """Compact source form with the analysis rename suffixes stripped."""
    return _RENAME_RE.sub("", pretty(node))


@dataclass
class AnalyzedProgram:
    statements: list
    source_program: Program
    next_id: int

    def fresh_id(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid


class _Expander:
    def __init__(self, program: Program):
        self.program = program
        self.next_id = program.next_id
        self.site = 0

    def fresh_id(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid

    def fresh_site(self) -> int:
        self.site += 1
        return self.site

    def copy(self, node: AstNode, subst: dict) -> AstNode:
        nid, span = self.fresh_id(), node.span
        if isinstance(node, NumberLit):
            return NumberLit(nid, span, node.value)
        if isinstance(node, BoolLit):
            return BoolLit(nid, span, node.value)
        if isinstance(node, VarRef):
            return VarRef(nid, span, subst.get(node.name, node.name))
        if isinstance(node, ListLit):
            return ListLit(nid, span, [self.copy(e, subst) for e in node.elements])
        if isinstance(node, Assign):
            return Assign(nid, span, subst.get(node.target, node.target), self.copy(node.rhs, subst))
        if isinstance(node, If):
            orelse = self.copy(node.orelse, subst) if node.orelse else None
            return If(nid, span, self.copy(node.cond, subst), self.copy(node.then, subst), orelse)
        if isinstance(node, Repeat):
            k = self.fresh_site()
            inner = dict(subst)
            inner[LOOP_VAR] = f"#{k}"
            return Repeat(nid, span, self.copy(node.count, subst), self.copy(node.body, inner),
                          counter=inner[LOOP_VAR])
        if isinstance(node, Apply):
            k = self.fresh_site()
            inner = dict(subst)
            inner[node.var] = f"{node.var}${k}"
            return Apply(nid, span, self.copy(node.source, subst), inner[node.var],
                         self.copy(node.body, inner))
        if isinstance(node, Sequence):
            return Sequence(nid, span, [self.copy(e, subst) for e in node.exprs])
        if isinstance(node, Index):
            return Index(nid, span, self.copy(node.base, subst), self.copy(node.index, subst))
        if isinstance(node, FunCall):
            args = [self.copy(a, subst) for a in node.args]
            fn = self.program.functions.get((node.name, len(args)))
            if fn is None:
                return FunCall(nid, span, node.name, args, texture=node.texture)
            return self.inline(fn, args, span)
        raise AssertionError(node)

    def inline(self, fn: UserFunDef, args: list, span) -> AstNode:
        k = self.fresh_site()
        subst = {p: f"{p}${k}" for p in fn.params}
        for sub in _assigned_names(fn.body):
            subst.setdefault(sub, f"{sub}${k}")
        bindings = [
            Assign(self.fresh_id(), span, subst[p], arg) for p, arg in zip(fn.params, args)
        ]
        body = self.copy(fn.body, subst)
        return Sequence(self.fresh_id(), span, bindings + [body])


def _assigned_names(node: AstNode) -> set:
    from .syntax import walk
    return {n.target for n in walk(node) if isinstance(n, Assign)}


def _check_no_recursion(program: Program) -> None:
    def callees(fn: UserFunDef) -> set:
        from .syntax import walk
        out = set()
        for n in walk(fn.body):
            if isinstance(n, FunCall) and (n.name, len(n.args)) in program.functions:
                out.add((n.name, len(n.args)))
        return out

    graph = {key: callees(fn) for key, fn in program.functions.items()}
    state: dict = {}

    def visit(key):
        if state.get(key) == "done":
            return
        if state.get(key) == "busy":
            raise FragscriptError(f"recursive function {key[0]!r} is not supported")
        state[key] = "busy"
        for nxt in graph.get(key, ()):
            visit(nxt)
        state[key] = "done"

    for key in graph:
        visit(key)


def expand_program(program: Program) -> AnalyzedProgram:
    """Monomorphize user-function calls and rename binders apart."""
    _check_no_recursion(program)
    ex = _Expander(program)
    stmts = [ex.copy(s, {}) for s in program.statements]
    return AnalyzedProgram(stmts, program, ex.next_id)


#: name of the synthetic node several running variables are packed into
PACKED_RUNNING = "@pos"


def pack_running_pair(analysis: AnalyzedProgram, names: tuple) -> None:
    """Prepend virtual assignments binding each name to a slot of one
    synthetic coordinate variable (several running variables become one
    array-valued node)."""
    span = (0, 0)
    prefix = []
    for k, name in enumerate(names, start=1):
        ref = VarRef(analysis.fresh_id(), span, PACKED_RUNNING)
        idx = NumberLit(analysis.fresh_id(), span, k)
        prefix.append(
            Assign(analysis.fresh_id(), span, name,
                   Index(analysis.fresh_id(), span, ref, idx))
        )
    analysis.statements[:0] = prefix


# ---------------------------------------------------------------------------
# the graph

@dataclass(eq=False)
class GNode:
    gid: int
    role: str  # 'var' | 'counter' | 'binder' | 'expr'
    label: str
    name: "str | None" = None
    ast: "AstNode | None" = None


@dataclass
class DependencyGraph:
    nodes: list = field(default_factory=list)
    edges: set = field(default_factory=set)
    var_gid: dict = field(default_factory=dict)
    ast_gid: dict = field(default_factory=dict)
    assignments: dict = field(default_factory=dict)
    binder_source: dict = field(default_factory=dict)
    counter_of: dict = field(default_factory=dict)   # repeat gid -> counter gid
    running_gid: "int | None" = None
    result_gid: int = -1

    def node(self, gid: int) -> GNode:
        return self.nodes[gid]

    def new_node(self, role, label, name=None, ast=None) -> int:
        gid = len(self.nodes)
        self.nodes.append(GNode(gid, role, label, name, ast))
        return gid

    def var_node(self, name: str, role: str = "var") -> int:
        gid = self.var_gid.get(name)
        if gid is None:
            gid = self.new_node(role, _RENAME_RE.sub("", name), name=name)
            self.var_gid[name] = gid
        return gid

    def add_edge(self, a: int, b: int) -> None:
        self.edges.add((a, b))

    def dependencies(self, gid: int):
        return [b for (a, b) in self.edges if a == gid]

    def node_of(self, ast: AstNode) -> int:
        """Graph node carrying the value of an AST node (refs coalesce to vars)."""
        if isinstance(ast, VarRef):
            return self.var_gid[ast.name]
        if isinstance(ast, Sequence):
            return self.node_of(ast.exprs[-1])
        if isinstance(ast, Assign):
            return self.node_of(ast.rhs)
        return self.ast_gid[ast.nid]


class _GraphBuilder:
    def __init__(self):
        self.graph = DependencyGraph()

    def build(self, analysis: AnalyzedProgram, running: "str | None") -> DependencyGraph:
        g = self.graph
        if running is not None:
            g.running_gid = g.var_node(running)
        for stmt in analysis.statements:
            self.visit(stmt, ())
        g.result_gid = g.node_of(analysis.statements[-1])
        return g

    def visit(self, node: AstNode, conds: tuple) -> int:
        """Create graph structure for `node`; returns its value node id."""
        g = self.graph
        if isinstance(node, VarRef):
            return g.var_node(node.name)
        if isinstance(node, Sequence):
            out = None
            for e in node.exprs:
                out = self.visit(e, conds)
            return out
        if isinstance(node, Assign):
            rhs = self.visit(node.rhs, conds)
            var = g.var_node(node.target)
            g.add_edge(var, rhs)
            g.assignments.setdefault(var, []).append(node.rhs)
            for cond in conds:
                g.add_edge(var, cond)
            return rhs
        gid = g.new_node("expr", display_label(node), ast=node)
        g.ast_gid[node.nid] = gid
        if isinstance(node, (NumberLit, BoolLit)):
            return gid
        if isinstance(node, ListLit):
            for e in node.elements:
                g.add_edge(gid, self.visit(e, conds))
            return gid
        if isinstance(node, FunCall):
            for a in node.args:
                g.add_edge(gid, self.visit(a, conds))
            return gid
        if isinstance(node, Index):
            g.add_edge(gid, self.visit(node.base, conds))
            g.add_edge(gid, self.visit(node.index, conds))
            return gid
        if isinstance(node, If):
            cond = self.visit(node.cond, conds)
            g.add_edge(gid, cond)
            g.add_edge(gid, self.visit(node.then, conds + (cond,)))
            if node.orelse is not None:
                g.add_edge(gid, self.visit(node.orelse, conds + (cond,)))
            return gid
        if isinstance(node, Repeat):
            count = self.visit(node.count, conds)
            g.add_edge(gid, count)
            counter = g.var_node(node.counter, role="counter")
            # the counter is materialized by the loop itself
            g.add_edge(counter, gid)
            g.counter_of[gid] = counter
            g.add_edge(gid, self.visit(node.body, conds + (count,)))
            return gid
        if isinstance(node, Apply):
            src = self.visit(node.source, conds)
            g.add_edge(gid, src)
            binder = g.var_node(node.var, role="binder")
            g.add_edge(binder, gid)
            g.add_edge(binder, src)
            g.binder_source[binder] = src
            g.add_edge(gid, self.visit(node.body, conds))
            return gid
        raise AssertionError(node)


def _occurs(analysis: AnalyzedProgram, name: str) -> bool:
    from .syntax import walk
    return any(
        isinstance(n, VarRef) and n.name == name
        for s in analysis.statements for n in walk(s)
    )


def build_graph(analysis: AnalyzedProgram, running: "str | None") -> DependencyGraph:
    if running is not None and not _occurs(analysis, running):
        raise UnknownVariable(f"running variable {running!r} does not occur in the program")
    return _GraphBuilder().build(analysis, running)


def compute_d(graph: DependencyGraph) -> set:
    """Nodes with a dependency path to the running variable (v0 included)."""
    if graph.running_gid is None:
        return set()
    rdeps: dict = {}
    for a, b in graph.edges:
        rdeps.setdefault(b, []).append(a)
    seen = {graph.running_gid}
    stack = [graph.running_gid]
    while stack:
        cur = stack.pop()
        for nxt in rdeps.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def compute_u(graph: DependencyGraph, d: set) -> set:
    return {b for (a, b) in graph.edges if a in d and b not in d}


@dataclass
class SplitResult:
    mode: str  # 'cpu' | 'gpu'
    graph: DependencyGraph
    d: set
    u: set

    @property
    def relevant(self) -> set:
        return self.d | self.u


def split(analysis: AnalyzedProgram, running: "str | None") -> SplitResult:
    if running is not None and not _occurs(analysis, running):
        running = None  # whole expression is uniform: evaluate on the CPU
    graph = build_graph(analysis, running)
    d = compute_d(graph)
    if graph.result_gid not in d:
        return SplitResult("cpu", graph, set(), set())
    return SplitResult("gpu", graph, d, compute_u(graph, d))


# ---------------------------------------------------------------------------
# DOT dump, D highlighted orange and U blue

def to_dot(result: SplitResult) -> str:
    graph = result.graph
    lines = ["digraph dependencies {", "  node [shape=box, style=filled, fillcolor=white];"]
    for node in graph.nodes:
        color = "white"
        if node.gid in result.d:
            color = "orange"
        elif node.gid in result.u:
            color = "lightblue"
        label = node.label.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  n{node.gid} [label="{label}", fillcolor={color}];')
    for a, b in sorted(graph.edges):
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines)
