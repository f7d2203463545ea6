"""Session orchestration: split, infer, cache lookup, (re)compile, execute.

A Pipeline owns one rendering session: the compile cache, the texture
registry with lazy CPU/GPU residency, and an execution backend.  Uniform
expressions are evaluated on the CPU once per invocation (the frame clock is
frozen first) by walking the program in order: plain CPU statements execute,
GPU subtrees are scanned for their uniform frontier.  Feedback passes onto a
texture that is also sampled run with a read/write buffer pair that swaps
after the pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import codegen
from .codegen import ShaderArtifact, compute_type_key
from .depgraph import (
    PACKED_RUNNING, AnalyzedProgram, SplitResult, expand_program,
    pack_running_pair, split as compute_split, to_dot,
)
from .errors import (
    AmbiguousRunningVariable, CodegenError, FragscriptError, RuntimeTypeError,
    UnboundVariable, UnknownTexture,
)
from .glslsim import ShaderRunner, SimTexture, validate
from .inference import (
    TypeAssignment, build_split_context, check_well_typed,
    const_position_nodes, infer,
)
from .interpreter import (
    Environment, Evaluator, PixelBuffer, TextureStore, _Scope, colorplot_cpu,
    run_statements, value_to_rgba,
)
from .lattice import COMPLEX, REAL, ConstInt, TypeTerm, make_list, parse_type
from .parser import parse
from .syntax import (
    Assign, AstNode, Program, children, free_variables, walk,
)
from .values import VComplex, VInt, VList, VReal, Value, dynamic_type, to_jsonable

SCREEN = "@screen"


@dataclass(frozen=True)
class RunningVarSpec:
    kind: str            # 'vector' | 'pair' | 'complex' | 'none'
    names: tuple = ()
    tau0: "TypeTerm | None" = None

    @property
    def graph_name(self):
        if self.kind == "none":
            return None
        return PACKED_RUNNING if self.kind == "pair" else self.names[0]


def resolve_running_variable(program: Program, bound_names=()) -> RunningVarSpec:
    """Pick the per-pixel variable: `#`, the x/y pair, complex z, or any
    single other free name; environment-bound names are inputs, not
    candidates."""
    free = free_variables(program) - set(bound_names)
    if not free:
        return RunningVarSpec("none")
    if free == {"#"}:
        return RunningVarSpec("vector", ("#",), make_list(2, REAL))
    if free == {"x", "y"}:
        return RunningVarSpec("pair", ("x", "y"), make_list(2, REAL))
    if free == {"z"}:
        return RunningVarSpec("complex", ("z",), COMPLEX)
    if len(free) == 1:
        (name,) = free
        return RunningVarSpec("vector", (name,), make_list(2, REAL))
    raise AmbiguousRunningVariable(
        f"cannot choose a running variable among {sorted(free)}"
    )


def pixel_binding(spec: RunningVarSpec):
    if spec.kind == "vector":
        name = spec.names[0]
        return lambda x, y: {name: VList((VReal(x), VReal(y)))}
    if spec.kind == "pair":
        return lambda x, y: {"x": VReal(x), "y": VReal(y)}
    if spec.kind == "complex":
        name = spec.names[0]
        return lambda x, y: {name: VComplex(x, y)}
    return lambda x, y: {}


# ---------------------------------------------------------------------------
# execution backend: the simulated GPU

def sim_uniform_value(obj, t: TypeTerm):
    """Decode a wire uniform value into the simulator's representation,
    following the same vec/struct lowering the code generator uses."""
    from .lattice import BOOLEAN, INT, ListType
    if t is BOOLEAN:
        return bool(obj)
    if t is INT or isinstance(t, ConstInt):
        return int(obj)
    if t is REAL:
        return float(obj)
    if t is COMPLEX:
        return (float(obj[0]), float(obj[1]))
    assert isinstance(t, ListType)
    if 2 <= t.length <= 4 and (t.elem in (REAL, INT, BOOLEAN) or isinstance(t.elem, ConstInt)):
        if t.elem is REAL:
            return tuple(float(x) for x in obj)
        if t.elem is BOOLEAN:
            return tuple(bool(x) for x in obj)
        return tuple(int(x) for x in obj)
    return {f"_e{k + 1}": sim_uniform_value(x, t.elem) for k, x in enumerate(obj)}


class SimulationBackend:
    """Runs shader artifacts through the GLSL-subset evaluator; its buffers
    play the role of GPU-resident textures."""

    name = "sim"

    def __init__(self):
        self.buffers: dict = {}
        self.rects: dict = {}
        self._runners: dict = {}

    def create_texture(self, key: str, width: int, height: int, rect) -> None:
        self.buffers[key] = np.zeros((height, width, 4), dtype=np.float32)
        self.rects[key] = tuple(rect)

    def upload(self, key: str, data: np.ndarray, rect) -> None:
        self.buffers[key] = data.astype(np.float32).copy()
        self.rects[key] = tuple(rect)

    def download(self, key: str) -> np.ndarray:
        return self.buffers[key].copy()

    def _runner(self, artifact: dict) -> ShaderRunner:
        key = artifact["typeKey"]
        runner = self._runners.get(key)
        if runner is None:
            runner = ShaderRunner(validate(artifact["glsl"]))
            self._runners[key] = runner
        return runner

    def run_pass(self, artifact: dict, uniform_values: dict, viewport, resolution,
                 sampler_keys: dict, target_key: str) -> None:
        width, height = resolution
        xmin, ymin, xmax, ymax = viewport
        runner = self._runner(artifact)
        uniforms = {
            "_vmin": (float(xmin), float(ymin)),
            "_vspan": (float(xmax - xmin), float(ymax - ymin)),
            "_res": (float(width), float(height)),
        }
        for entry in artifact["uniforms"]:
            name = entry["name"]
            if entry["node"] is None:
                continue  # plumbing, filled above or per sampler below
            uniforms[name] = sim_uniform_value(uniform_values[name], parse_type(entry["type"]))
        samplers = {}
        for tex in artifact["textures"]:
            key = sampler_keys[tex["sampler"]]
            samplers[tex["sampler"]] = SimTexture(self.buffers[key])
            txmin, tymin, txmax, tymax = self.rects[key]
            uniforms[tex["sampler"] + "_or"] = (float(txmin), float(tymin))
            uniforms[tex["sampler"] + "_sp"] = (float(txmax - txmin), float(tymax - tymin))
        out = np.zeros((height, width, 4), dtype=np.float32)
        for j in range(height):
            fy = j + 0.5
            for i in range(width):
                rgba = runner.run((i + 0.5, fy), uniforms, samplers)
                out[j, i] = rgba
        self.buffers[target_key] = out
        self.rects[target_key] = tuple(viewport)


# ---------------------------------------------------------------------------
# texture registry with residency tracking

@dataclass
class TexturePair:
    logical: str
    read_key: str
    write_key: str
    width: int
    height: int
    rect: tuple
    residency: str = "gpu"        # 'gpu' | 'cpu' | 'both'

    def swap(self):
        self.read_key, self.write_key = self.write_key, self.read_key


@dataclass
class SessionStats:
    frames: int = 0
    compiles: int = 0
    cache_hits: int = 0
    cpu_fallbacks: int = 0
    cpu_const: int = 0
    downloads: int = 0
    uploads: int = 0
    swaps: int = 0

    def as_dict(self):
        return dict(self.__dict__)


class _PipelineTextures(TextureStore):
    """CPU-side texture view; reading a GPU-dirty texture forces a transfer."""

    def __init__(self, pipeline: "Pipeline"):
        super().__init__()
        self.pipeline = pipeline

    def get(self, name: str) -> PixelBuffer:
        return self.pipeline.readback(name)


# ---------------------------------------------------------------------------
# the compile cache

class CompileCache:
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.artifacts: dict = {}     # type_key -> ShaderArtifact
        self.last_key: dict = {}      # program structural key -> type_key

    def lookup(self, program_key, type_key):
        if not self.enabled:
            return None
        artifact = self.artifacts.get(type_key)
        self.last_key[program_key] = type_key
        return artifact

    def store(self, program_key, artifact: ShaderArtifact):
        if self.enabled:
            self.artifacts[artifact.type_key] = artifact
            self.last_key[program_key] = artifact.type_key


@dataclass
class FrameResult:
    mode: str                     # 'gpu' | 'cpu-fallback' | 'cpu-const' | 'cpu-uniform'
    target: str
    compiled: bool = False
    cache_hit: bool = False
    type_key: "str | None" = None
    pingpong: bool = False
    offenders: list = field(default_factory=list)
    notes: "str | None" = None
    artifact: "ShaderArtifact | None" = None
    slot_values: dict = field(default_factory=dict)


@dataclass
class _Prepared:
    program: Program
    analysis: AnalyzedProgram
    spec: RunningVarSpec
    split: SplitResult
    const_gids: set


class Pipeline:
    def __init__(self, backend=None, cache: bool = True, precision: str = "highp"):
        self.backend = backend or SimulationBackend()
        self.cache = CompileCache(cache)
        self.stats = SessionStats()
        self.textures: dict = {}           # logical name -> TexturePair
        self.cpu_textures = _PipelineTextures(self)
        self._prepared: dict = {}
        self.precision = precision

    # -- program preparation (cached per source text) -------------------------

    def prepare(self, source: str, bound_names) -> _Prepared:
        key = (source, tuple(sorted(bound_names)))
        prep = self._prepared.get(key)
        if prep is None:
            program = parse(source)
            spec = resolve_running_variable(program, bound_names)
            analysis = expand_program(program)
            if spec.kind == "pair":
                pack_running_pair(analysis, spec.names)
            split = compute_split(analysis, spec.graph_name)
            const_gids = self._const_gids(analysis, split)
            prep = _Prepared(program, analysis, spec, split, const_gids)
            self._prepared[key] = prep
        return prep

    @staticmethod
    def _const_gids(analysis: AnalyzedProgram, split: SplitResult) -> set:
        nids = const_position_nodes(analysis)
        out = set()
        for stmt in analysis.statements:
            for node in walk(stmt):
                if node.nid in nids:
                    out.add(split.graph.node_of(node))
        return out

    # -- texture registry ------------------------------------------------------

    def _ensure_texture(self, name: str, width: int, height: int, rect) -> TexturePair:
        pair = self.textures.get(name)
        if pair is None:
            pair = TexturePair(name, f"{name}@a", f"{name}@b", width, height, tuple(rect))
            self.backend.create_texture(pair.read_key, width, height, rect)
            self.backend.create_texture(pair.write_key, width, height, rect)
            pair.residency = "both"
            self.cpu_textures.put(name, PixelBuffer.blank(width, height, tuple(rect)))
            self.textures[name] = pair
        return pair

    def readback(self, name: str) -> PixelBuffer:
        pair = self.textures.get(name)
        if pair is None:
            buf = self.cpu_textures.buffers.get(name)
            if buf is None:
                raise UnknownTexture(f"texture {name!r} does not exist")
            return buf
        if pair.residency == "gpu":
            data = self.backend.download(pair.read_key)
            self.cpu_textures.put(name, PixelBuffer(pair.width, pair.height, pair.rect, data))
            pair.residency = "both"
            self.stats.downloads += 1
        return self.cpu_textures.buffers[name]

    def _sync_to_gpu(self, name: str) -> TexturePair:
        pair = self.textures[name]
        if pair.residency == "cpu":
            buf = self.cpu_textures.buffers[name]
            self.backend.upload(pair.read_key, buf.data, buf.rect)
            pair.residency = "both"
            self.stats.uploads += 1
        return pair

    # -- main entry ------------------------------------------------------------

    def colorplot(self, source: str, env_values=None, target: "str | None" = None,
                  viewport=(-4.0, -4.0, 4.0, 4.0), resolution=(64, 64),
                  clock: float = 0.0) -> FrameResult:
        if resolution[0] < 1 or resolution[1] < 1:
            raise FragscriptError(f"resolution must be positive, got {resolution}")
        if viewport[0] >= viewport[2] or viewport[1] >= viewport[3]:
            raise FragscriptError(f"viewport is degenerate: {viewport}")
        self.stats.frames += 1
        env_values = dict(env_values or {})
        target_name = target or SCREEN
        prep = self.prepare(source, env_values.keys())
        env = Environment.for_program(
            prep.program, bindings=env_values, textures=self.cpu_textures,
            clock=lambda: clock,
        )
        if prep.spec.kind == "none":
            return self._cpu_const(prep, env, target_name, viewport, resolution)
        if prep.split.mode == "cpu":
            return self._cpu_plot(prep, env, target_name, viewport, resolution,
                                  mode="cpu-uniform")
        try:
            uniform_values = self._evaluate_uniforms(prep, env)
        except (RuntimeTypeError, UnboundVariable) as exc:
            raise type(exc)(f"while evaluating uniform expressions: {exc}") from exc
        uniform_types = {
            gid: self._uniform_type(gid, value, prep)
            for gid, value in uniform_values.items()
        }
        ctx = build_split_context(prep.analysis, prep.split, prep.spec.tau0, uniform_types)
        assignment = infer(ctx)
        verdict = check_well_typed(assignment, prep.split)
        if not verdict.ok:
            result = self._cpu_plot(prep, env, target_name, viewport, resolution,
                                    mode="cpu-fallback")
            result.offenders = [prep.split.graph.node(g).label for g in verdict.offenders]
            return result
        try:
            return self._gpu_plot(prep, assignment, uniform_values, target_name,
                                  viewport, resolution)
        except CodegenError as exc:
            result = self._cpu_plot(prep, env, target_name, viewport, resolution,
                                    mode="cpu-fallback")
            result.notes = str(exc)
            return result

    def _uniform_type(self, gid, value: Value, prep: _Prepared) -> TypeTerm:
        t = dynamic_type(value)
        if gid in prep.const_gids and isinstance(value, VInt):
            return ConstInt(value.num)
        return t

    # -- uniform evaluation: ordered walk of the analysis statements -----------

    def _evaluate_uniforms(self, prep: _Prepared, env: Environment) -> dict:
        graph, d, u = prep.split.graph, prep.split.d, prep.split.u
        assigned = {
            n.target for s in prep.analysis.statements
            for n in walk(s) if isinstance(n, Assign)
        }
        base = _Scope(None, frozenset())
        base.vars.update(env.bindings)
        scope = _Scope(base, frozenset(assigned))
        ev = Evaluator(env)
        values: dict = {}

        def collect(node: AstNode) -> None:
            gid = graph.node_of(node)
            if gid in u:
                if gid not in values:
                    values[gid] = ev.eval(node, scope)
                return
            if gid in d:
                if isinstance(node, Assign):
                    collect(node.rhs)
                    return
                for child in children(node):
                    collect(child)

        for stmt in prep.analysis.statements:
            if isinstance(stmt, Assign) and graph.var_gid[stmt.target] in d:
                collect(stmt.rhs)
            elif graph.node_of(stmt) in d:
                collect(stmt)
            else:
                value = ev.eval(stmt, scope)
                gid = graph.node_of(stmt)
                if gid in u and gid not in values:
                    values[gid] = value
        # uniform variables not yet captured (assigned on the CPU, read by D)
        for gid in u:
            if gid not in values:
                node = graph.node(gid)
                if node.role != "expr":
                    values[gid] = scope.get(node.name)
                else:
                    values[gid] = ev.eval(node.ast, scope)
        return values

    # -- CPU paths --------------------------------------------------------------

    def _cpu_const(self, prep, env, target, viewport, resolution) -> FrameResult:
        value = run_statements(prep.program.statements, env)
        rgba = value_to_rgba(value)
        rgba = tuple(0.0 if c != c else min(1.0, max(0.0, c)) for c in rgba)
        width, height = resolution
        buf = PixelBuffer.blank(width, height, tuple(viewport))
        buf.data[:, :] = np.array(rgba, dtype=np.float32)
        self._store_cpu_result(target, buf)
        self.stats.cpu_const += 1
        return FrameResult(mode="cpu-const", target=target)

    def _cpu_plot(self, prep, env, target, viewport, resolution, mode) -> FrameResult:
        binding = pixel_binding(prep.spec)
        buf = colorplot_cpu(prep.program, binding, tuple(viewport), resolution, env)
        self._store_cpu_result(target, buf)
        if mode == "cpu-fallback":
            self.stats.cpu_fallbacks += 1
        return FrameResult(mode=mode, target=target)

    def _store_cpu_result(self, target: str, buf: PixelBuffer) -> None:
        pair = self._ensure_texture(target, buf.width, buf.height, buf.rect)
        self.cpu_textures.put(target, buf)
        pair.residency = "cpu"

    # -- GPU path ----------------------------------------------------------------

    def _gpu_plot(self, prep: _Prepared, assignment: TypeAssignment, uniform_values,
                  target, viewport, resolution) -> FrameResult:
        program_key = prep.program.source
        gamma = assignment.gamma
        type_key = compute_type_key(prep.analysis, prep.split, gamma)
        artifact = self.cache.lookup(program_key, type_key)
        compiled = False
        if artifact is None:
            artifact = codegen.emit_program(prep.analysis, prep.split, assignment,
                                            precision=self.precision)
            assert artifact.type_key == type_key
            self.cache.store(program_key, artifact)
            self.stats.compiles += 1
            compiled = True
        else:
            self.stats.cache_hits += 1
        slot_values = {}
        for entry in artifact.uniforms:
            if entry["node"] is not None:
                slot_values[entry["name"]] = to_jsonable(uniform_values[entry["node"]])
        width, height = resolution
        target_pair = self._ensure_texture(target, width, height, viewport)
        sampler_keys = {}
        pingpong = False
        for tex in artifact.textures:
            logical = tex["texture"]
            pair = self._ensure_texture(logical, width, height, viewport)
            self._sync_to_gpu(logical)
            sampler_keys[tex["sampler"]] = pair.read_key
            if logical == target:
                pingpong = True
        # a pass must never sample the buffer it renders into
        assert target_pair.write_key not in sampler_keys.values()
        self.backend.run_pass(
            artifact.to_json(), slot_values, tuple(viewport), resolution,
            sampler_keys, target_pair.write_key,
        )
        target_pair.swap()
        if pingpong:
            self.stats.swaps += 1
        target_pair.residency = "gpu"
        return FrameResult(
            mode="gpu", target=target, compiled=compiled, cache_hit=not compiled,
            type_key=type_key, pingpong=pingpong, artifact=artifact,
            slot_values=slot_values,
        )

    # -- diagnostics -------------------------------------------------------------

    def graph_dot(self, source: str, bound_names=()) -> str:
        prep = self.prepare(source, bound_names)
        return to_dot(prep.split)
