"""Translates a well-typed split program into a GLSL ES 1.00 fragment shader.

Each builtin application is emitted by translating the arguments, up-casting
them to the resolved overload's parameter types, and applying that overload's
shader implementation (helper functions land in the header once).  Uniform
expressions become named uniforms `_u0, _u1, ...` in first-visit order, with
structurally identical subtrees sharing one slot; constant-typed uniforms
(loop bounds, integer exponents) are baked into the code instead, so a value
change shows up as a type change and forces recompilation.

Straight-line reassignments become fresh SSA-style locals; variables that
are assigned under a conditional or loop are hoisted to a mutable local
declared up front.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import builtins as bi
from .depgraph import AnalyzedProgram, SplitResult
from .errors import BadOutputType, CodegenError, NonConstLoopBound, UnsupportedNode
from .inference import TypeAssignment
from .lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, ListType, TypeTerm,
    embed_cast, format_type, is_subtype,
)
from .syntax import (
    Apply, Assign, AstNode, BoolLit, FunCall, If, Index, ListLit, NumberLit,
    Repeat, Sequence, VarRef, struct_key, walk,
)

PLUMBING_UNIFORMS = (("_vmin", "vec2"), ("_vspan", "vec2"), ("_res", "vec2"))


@dataclass
class ShaderArtifact:
    glsl_source: str
    uniforms: list            # [{"name", "type", "node"}]
    textures: list            # [{"sampler", "texture"}]
    type_key: str
    output_type: TypeTerm

    def to_json(self) -> dict:
        return {
            "glsl": self.glsl_source,
            "uniforms": self.uniforms,
            "textures": self.textures,
            "typeKey": self.type_key,
        }


def compute_type_key(analysis: AnalyzedProgram, split: SplitResult, gamma: dict) -> str:
    """Cache key: the expression identity plus the types of the running
    variable and every uniform (constant-typed parameters included)."""
    payload = {
        "expr": repr([struct_key(s) for s in analysis.statements]),
        "running": format_type(gamma[split.graph.running_gid]),
        "uniforms": sorted(
            (gid, format_type(gamma[gid])) for gid in split.u
        ),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt_float(x: float) -> str:
    text = repr(float(x))
    if "e" in text or "E" in text or "." in text:
        return text
    return text + ".0"


def _mangle(t: TypeTerm) -> str:
    if t is BOOLEAN:
        return "b"
    if t is INT or isinstance(t, ConstInt):
        return "i"
    if t is REAL:
        return "f"
    if t is COMPLEX:
        return "c"
    if isinstance(t, ListType):
        return f"l{t.length}{_mangle(t.elem)}"
    raise CodegenError(f"type {t} cannot appear in shader code")


class EmitCtx:
    """Helper/struct registries plus the statement stream under construction."""

    def __init__(self):
        self.structs: dict = {}
        self.helpers: dict = {}
        self.lines: list = []
        self.indent = 1
        self.temp_count = 0

    # -- builtins emitter protocol

    def lower(self, t: TypeTerm) -> str:
        if t is BOOLEAN:
            return "bool"
        if t is INT or isinstance(t, ConstInt):
            return "int"
        if t is REAL:
            return "float"
        if t is COMPLEX:
            return "vec2"
        if isinstance(t, ListType):
            return self._lower_list(t)
        raise CodegenError(f"no shader representation for type {t}")

    def _lower_list(self, t: ListType) -> str:
        depth, n, cur = 0, t.length, t
        while isinstance(cur, ListType):
            depth, cur = depth + 1, cur.elem
        if cur in (BOT, TOP):
            raise CodegenError(f"incomplete list type {t} survived inference")
        if t.length > 16 or depth > 2:
            raise CodegenError(f"list type {t} exceeds shader limits")
        if 2 <= t.length <= 4:
            if t.elem is REAL:
                return f"vec{t.length}"
            if t.elem is INT or isinstance(t.elem, ConstInt):
                return f"ivec{t.length}"
            if t.elem is BOOLEAN:
                return f"bvec{t.length}"
        name = f"_T_{_mangle(t)}"
        if name not in self.structs:
            fields = "".join(
                f"  {self.lower(t.elem)} _e{k + 1};\n" for k in range(t.length)
            )
            self.structs[name] = f"struct {name} {{\n{fields}}};"
        return name

    def helper(self, name: str) -> str:
        if name not in self.helpers:
            deps, source = bi.HELPERS[name]
            for dep in deps:
                self.helper(dep)
            self.helpers[name] = source
        return name

    def gen_helper(self, name: str, source: str) -> str:
        if name not in self.helpers:
            self.helpers[name] = source
        return name

    def mangle(self, t: TypeTerm) -> str:
        return _mangle(t)

    def float_lit(self, x: float) -> str:
        return _fmt_float(x)

    # -- statement stream

    def emit(self, line: str) -> None:
        self.lines.append("  " * self.indent + line)

    def open_block(self, header: str) -> None:
        self.emit(header + " {")
        self.indent += 1

    def close_block(self) -> None:
        self.indent -= 1
        self.emit("}")

    def temp(self) -> str:
        self.temp_count += 1
        return f"_t{self.temp_count}"


def _sanitize(name: str) -> str:
    return name.replace("#", "k").replace("$", "_").replace("@", "at")


def _zero_value(ctx: EmitCtx, t: TypeTerm) -> str:
    if t is BOOLEAN:
        return "false"
    if t is INT or isinstance(t, ConstInt):
        return "0"
    if t is REAL:
        return "0.0"
    if t is COMPLEX:
        return "vec2(0.0, 0.0)"
    if isinstance(t, ListType):
        tn = ctx.lower(t)
        if tn.startswith(("vec", "ivec", "bvec")):
            return f"{tn}({_zero_value(ctx, t.elem)})"
        inner = ", ".join(_zero_value(ctx, t.elem) for _ in range(t.length))
        return f"{tn}({inner})"
    raise CodegenError(f"no zero value for {t}")


def _cast(ctx: EmitCtx, expr: str, src: TypeTerm, dst: TypeTerm) -> str:
    if src == dst:
        return expr
    plan = embed_cast(src, dst)
    if plan.is_identity:
        return expr
    if isinstance(src, ListType):
        src_n, dst_n = ctx.lower(src), ctx.lower(dst)
        vecs = ("vec2", "vec3", "vec4")
        if dst_n in vecs and src_n.startswith(("ivec", "bvec")):
            return f"{dst_n}({expr})"
        name = f"_cast_{_mangle(src)}_{_mangle(dst)}"
        fields = []
        for k in range(src.length):
            part = f"v._e{k + 1}" if not src_n.startswith(("vec", "ivec", "bvec")) \
                else f"v.{'xyzw'[k]}"
            fields.append(_cast(ctx, part, src.elem, dst.elem))
        source = (
            f"{ctx.lower(dst)} {name}({src_n} v) {{\n"
            f"  return {ctx.lower(dst)}(" + ", ".join(fields) + ");\n}"
        )
        return f"{ctx.gen_helper(name, source)}({expr})"
    out = expr
    for step in plan.steps:
        if step.kind == "bool_to_int":
            out = f"int({out})"
        elif step.kind == "int_to_real":
            out = f"float({out})"
        elif step.kind == "real_to_complex":
            out = f"vec2({out}, 0.0)"
        elif step.kind == "const_to_int":
            pass  # same shader representation
    return out


class Emitter:
    def __init__(self, analysis: AnalyzedProgram, split: SplitResult,
                 assignment: TypeAssignment, precision: str = "highp"):
        self.analysis = analysis
        self.split = split
        self.graph = split.graph
        self.gamma = assignment.gamma
        self.precision = precision
        self.ctx = EmitCtx()
        self.uniform_slots: dict = {}    # dedup key -> slot name
        self.uniform_decl: list = []     # [(name, TypeTerm, gid)]
        self.samplers: dict = {}         # texture name -> sampler name
        self.versions: dict = {}         # var name -> current glsl name
        self.version_counts: dict = {}   # var name -> number of versions so far
        self.hoisted: set = set()

    # -- typing helpers

    def type_of(self, node: AstNode) -> TypeTerm:
        return self.gamma[self.graph.node_of(node)]

    def var_type(self, name: str) -> TypeTerm:
        return self.gamma[self.graph.var_gid[name]]

    def in_d(self, node: AstNode) -> bool:
        return self.graph.node_of(node) in self.split.d

    def in_u(self, node: AstNode) -> bool:
        return self.graph.node_of(node) in self.split.u

    # -- uniforms

    def uniform_ref(self, node: AstNode) -> str:
        gid = self.graph.node_of(node)
        t = self.gamma[gid]
        if isinstance(t, ConstInt):
            return str(t.value)  # baked: a value change is a type change
        if isinstance(node, VarRef):
            key = ("var", node.name, format_type(t))
        else:
            key = ("expr", struct_key(node), format_type(t))
        name = self.uniform_slots.get(key)
        if name is None:
            name = f"_u{len(self.uniform_slots)}"
            self.uniform_slots[key] = name
            self.uniform_decl.append((name, t, gid))
        return name

    def sampler_for(self, texture: str) -> str:
        name = self.samplers.get(texture)
        if name is None:
            name = f"_t{len(self.samplers)}"
            self.samplers[texture] = name
        return name

    # -- variables

    def read_var(self, name: str) -> str:
        glsl = self.versions.get(name)
        if glsl is None:
            raise UnsupportedNode(f"variable {name!r} read before any assignment")
        return glsl

    def assign_var(self, name: str, expr: str, expr_t: TypeTerm) -> str:
        """Emit the assignment; returns the GLSL name now holding the value."""
        t = self.var_type(name)
        cast = _cast(self.ctx, expr, expr_t, t)
        if name in self.hoisted:
            self.ctx.emit(f"{self.versions[name]} = {cast};")
            return self.versions[name]
        nth = self.version_counts.get(name, 0) + 1
        self.version_counts[name] = nth
        fresh = f"_v_{_sanitize(name)}_{nth}"
        self.ctx.emit(f"{self.ctx.lower(t)} {fresh} = {cast};")
        self.versions[name] = fresh
        return fresh

    def _collect_hoisted(self) -> None:
        """Variables assigned under a condition or loop body become mutable
        locals declared up front; everything else gets SSA-style versions."""
        def scan(node: AstNode, conditional: bool):
            if isinstance(node, Assign):
                if conditional and self.graph.var_gid.get(node.target) in self.split.d:
                    self.hoisted.add(node.target)
                scan(node.rhs, conditional)
            elif isinstance(node, If):
                scan(node.cond, conditional)
                scan(node.then, True)
                if node.orelse is not None:
                    scan(node.orelse, True)
            elif isinstance(node, Repeat):
                scan(node.count, conditional)
                scan(node.body, True)
            else:
                from .syntax import children
                for c in children(node):
                    scan(c, conditional)

        for stmt in self.analysis.statements:
            scan(stmt, False)

    # -- expression translation

    def transpile(self, node: AstNode) -> tuple:
        """Returns (glsl expression, its TypeTerm)."""
        gid = self.graph.node_of(node)
        if gid in self.split.u:
            return self.uniform_ref(node), self.gamma[gid]
        if gid not in self.split.d:
            raise UnsupportedNode(f"node {self.graph.node(gid).label!r} is outside the split")
        t = self.gamma[gid]
        if isinstance(node, VarRef):
            if gid == self.graph.running_gid:
                return "_rv", t
            return self.read_var(node.name), t
        if isinstance(node, Sequence):
            for e in node.exprs[:-1]:
                self.emit_statement(e)
            return self.transpile(node.exprs[-1])
        if isinstance(node, Assign):
            return self._assign_value(node)
        if isinstance(node, FunCall):
            return self._call(node, t)
        if isinstance(node, ListLit):
            return self._list_lit(node, t)
        if isinstance(node, Index):
            return self._index(node, t)
        if isinstance(node, If):
            return self._if_value(node, t)
        if isinstance(node, Repeat):
            return self._repeat(node, t, want_value=True)
        if isinstance(node, Apply):
            return self._apply(node, t)
        raise UnsupportedNode(f"cannot translate node kind {node.kind}")

    def cast_to(self, node: AstNode, target: TypeTerm) -> str:
        expr, t = self.transpile(node)
        return _cast(self.ctx, expr, t, target)

    def _assign_value(self, node: Assign) -> tuple:
        expr, t = self.transpile(node.rhs)
        tmp = self.ctx.temp()
        self.ctx.emit(f"{self.ctx.lower(t)} {tmp} = {expr};")
        self.assign_var(node.target, tmp, t)
        return tmp, t

    def _call(self, node: FunCall, t: TypeTerm) -> tuple:
        if node.texture is not None:
            return self._imagergb(node), t
        arg_types = tuple(self.type_of(a) for a in node.args)
        sig = bi.min_sign(node.name, arg_types)
        if sig is None:
            raise UnsupportedNode(f"no overload for {node.name} at {arg_types}")
        args = [self.cast_to(a, p) for a, p in zip(node.args, sig.args)]
        expr = bi.glsl_call(self.ctx, node.name, sig, arg_types, args)
        return expr, sig.ret

    def _imagergb(self, node: FunCall) -> str:
        sampler = self.sampler_for(node.texture)
        coord_t = self.type_of(node.args[0])
        target = COMPLEX if is_subtype(coord_t, COMPLEX) else coord_t
        coord = self.cast_to(node.args[0], target)
        uv = f"(({coord}) - {sampler}_or) / {sampler}_sp"
        return f"texture2D({sampler}, {uv}).rgb"

    def _list_lit(self, node: ListLit, t: ListType) -> tuple:
        parts = [self.cast_to(e, t.elem) for e in node.elements]
        return f"{self.ctx.lower(t)}(" + ", ".join(parts) + ")", t

    def _index(self, node: Index, t: TypeTerm) -> tuple:
        base_expr, base_t = self.transpile(node.base)
        if not isinstance(base_t, ListType):
            raise UnsupportedNode("indexing a non-list survived type checking")
        k = self._const_index(node.index)
        lowered = self.ctx.lower(base_t)
        native = lowered.startswith(("vec", "ivec", "bvec"))
        if k is not None:
            if native:
                return f"({base_expr}).{'xyzw'[k - 1]}", base_t.elem
            return f"({base_expr})._e{k}", base_t.elem
        if not native:
            raise CodegenError(
                "dynamic indexing is only supported on lists of 2..4 scalars"
            )
        idx = self.cast_to(node.index, INT)
        name = f"_idx_{lowered}"
        elem = self.ctx.lower(base_t.elem)
        branches = "".join(
            f"  if (k == {j + 1}) return v.{'xyzw'[j]};\n"
            for j in range(base_t.length - 1)
        )
        src = (f"{elem} {name}({lowered} v, int k) {{\n{branches}"
               f"  return v.{'xyzw'[base_t.length - 1]};\n}}")
        return f"{self.ctx.gen_helper(name, src)}({base_expr}, {idx})", base_t.elem

    def _const_index(self, idx: AstNode):
        if isinstance(idx, NumberLit) and isinstance(idx.value, int):
            return idx.value
        t = self.type_of(idx)
        if isinstance(t, ConstInt):
            return t.value
        return None

    def _if_value(self, node: If, t: TypeTerm) -> tuple:
        tmp = self.ctx.temp()
        if node.orelse is None:
            self.ctx.emit(f"{self.ctx.lower(t)} {tmp} = {_zero_value(self.ctx, t)};")
        else:
            self.ctx.emit(f"{self.ctx.lower(t)} {tmp};")
        cond = self.cast_to(node.cond, BOOLEAN)
        self.ctx.open_block(f"if ({cond})")
        then = self.cast_to(node.then, t)
        self.ctx.emit(f"{tmp} = {then};")
        self.ctx.close_block()
        if node.orelse is not None:
            self.ctx.open_block("else")
            orelse = self.cast_to(node.orelse, t)
            self.ctx.emit(f"{tmp} = {orelse};")
            self.ctx.close_block()
        return tmp, t

    def _loop_bound(self, node: Repeat) -> int:
        count_t = self.type_of(node.count)
        if isinstance(count_t, ConstInt):
            return count_t.value
        raise NonConstLoopBound(
            f"repeat count must be a constant, got type {count_t}"
        )

    def _repeat(self, node: Repeat, t: TypeTerm, want_value: bool):
        bound = self._loop_bound(node)
        tmp = None
        if want_value:
            tmp = self.ctx.temp()
            self.ctx.emit(f"{self.ctx.lower(t)} {tmp} = {_zero_value(self.ctx, t)};")
        counter = f"_v_{_sanitize(node.counter)}"
        self.versions[node.counter] = counter
        self.ctx.open_block(f"for (int {counter} = 1; {counter} <= {bound}; {counter}++)")
        if want_value:
            value = self.cast_to(node.body, t)
            self.ctx.emit(f"{tmp} = {value};")
        else:
            self.emit_statement(node.body)
        self.ctx.close_block()
        return (tmp, t) if want_value else (None, t)

    def _apply(self, node: Apply, t: ListType) -> tuple:
        src_expr, src_t = self.transpile(node.source)
        if not isinstance(src_t, ListType):
            raise UnsupportedNode("apply over a non-list survived type checking")
        src_tmp = self.ctx.temp()
        self.ctx.emit(f"{self.ctx.lower(src_t)} {src_tmp} = {src_expr};")
        lowered = self.ctx.lower(src_t)
        native = lowered.startswith(("vec", "ivec", "bvec"))
        results = []
        for k in range(src_t.length):
            accessor = f"{src_tmp}.{'xyzw'[k]}" if native else f"{src_tmp}._e{k + 1}"
            self.assign_var(node.var, accessor, src_t.elem)
            results.append(self.cast_to(node.body, t.elem))
        ctor = ", ".join(results)
        return f"{self.ctx.lower(t)}({ctor})", t

    # -- statements

    def emit_statement(self, node: AstNode) -> None:
        gid = self.graph.node_of(node)
        if isinstance(node, Assign):
            var_gid = self.graph.var_gid[node.target]
            if var_gid not in self.split.d:
                return  # evaluated on the CPU
            expr, t = self.transpile(node.rhs)
            self.assign_var(node.target, expr, t)
            return
        if gid not in self.split.d:
            return  # uniform statement: CPU side
        if isinstance(node, Sequence):
            for e in node.exprs:
                self.emit_statement(e)
            return
        if isinstance(node, If):
            has_assigns = any(isinstance(n, Assign) for n in walk(node))
            if not has_assigns:
                return  # pure expression statement: no effect
            cond = self.cast_to(node.cond, BOOLEAN)
            self.ctx.open_block(f"if ({cond})")
            self.emit_statement(node.then)
            self.ctx.close_block()
            if node.orelse is not None:
                self.ctx.open_block("else")
                self.emit_statement(node.orelse)
                self.ctx.close_block()
            return
        if isinstance(node, Repeat):
            if any(isinstance(n, Assign) for n in walk(node.body)):
                self._repeat(node, self.gamma[gid], want_value=False)
            return
        if isinstance(node, (Apply, FunCall, Index, ListLit)):
            if any(isinstance(n, Assign) for n in walk(node)):
                self.transpile(node)  # keeps side effects, discards the value
            return
        if isinstance(node, (NumberLit, BoolLit, VarRef)):
            return
        raise UnsupportedNode(f"cannot emit statement for {node.kind}")

    # -- whole program

    def emit_program(self, output_type: TypeTerm) -> ShaderArtifact:
        running = self.graph.node(self.graph.running_gid)
        self._collect_hoisted()
        ctx = self.ctx
        ctx.emit("vec2 _coord = _vmin + _vspan * (gl_FragCoord.xy / _res);")
        rv_t = self.gamma[self.graph.running_gid]
        ctx.emit(f"{ctx.lower(rv_t)} _rv = _coord;")
        for name in sorted(self.hoisted):
            t = self.var_type(name)
            glsl = f"_v_{_sanitize(name)}"
            ctx.emit(f"{ctx.lower(t)} {glsl} = {_zero_value(ctx, t)};")
            self.versions[name] = glsl
        for stmt in self.analysis.statements[:-1]:
            self.emit_statement(stmt)
        color = self._fragcolor(self.analysis.statements[-1], output_type)
        ctx.emit(f"gl_FragColor = clamp({color}, 0.0, 1.0);")
        return self._assemble(output_type)

    def _fragcolor(self, last: AstNode, output_type: TypeTerm) -> str:
        if is_subtype(output_type, REAL) and output_type is not BOT:
            g = self.cast_to(last, REAL)
            return f"vec4(vec3({g}), 1.0)"
        if isinstance(output_type, ListType) and output_type.length in (3, 4):
            from .lattice import make_list
            target = make_list(output_type.length, REAL)
            if is_subtype(output_type, target):
                vec = self.cast_to(last, target)
                if output_type.length == 3:
                    return f"vec4({vec}, 1.0)"
                return vec
        raise BadOutputType(
            f"cannot map {output_type} onto a color; plot a real or a 3/4 list"
        )

    def _assemble(self, output_type: TypeTerm) -> ShaderArtifact:
        header = [f"precision {self.precision} float;"]
        header += list(self.ctx.structs.values())
        manifest = []
        for name, glsl_t in PLUMBING_UNIFORMS:
            header.append(f"uniform {glsl_t} {name};")
            manifest.append({"name": name, "type": "list<2, real>", "node": None})
        for name, t, gid in self.uniform_decl:
            header.append(f"uniform {self.ctx.lower(t)} {name};")
            manifest.append({"name": name, "type": format_type(t), "node": gid})
        textures = []
        for tex, sampler in self.samplers.items():
            header.append(f"uniform sampler2D {sampler};")
            header.append(f"uniform vec2 {sampler}_or;")
            header.append(f"uniform vec2 {sampler}_sp;")
            textures.append({"sampler": sampler, "texture": tex})
            for suffix in ("_or", "_sp"):
                manifest.append({"name": sampler + suffix, "type": "list<2, real>",
                                 "node": None})
        header += list(self.ctx.helpers.values())
        body = "\n".join(["void main() {", *self.ctx.lines, "}"])
        source = "\n".join(header + [body]) + "\n"
        return ShaderArtifact(
            glsl_source=source,
            uniforms=manifest,
            textures=textures,
            type_key=compute_type_key(self.analysis, self.split, self.gamma),
            output_type=output_type,
        )


def emit_program(analysis: AnalyzedProgram, split: SplitResult,
                 assignment: TypeAssignment, output_type: "TypeTerm | None" = None,
                 precision: str = "highp") -> ShaderArtifact:
    if split.mode != "gpu":
        raise CodegenError("nothing to compile: the whole expression is uniform")
    if output_type is None:
        output_type = assignment.gamma[split.graph.result_gid]
    emitter = Emitter(analysis, split, assignment, precision)
    return emitter.emit_program(output_type)
