"""FastAPI service wrapping the compiler pipeline.

Stateless analysis endpoints (/ast, /check, /graph, /compile, /builtins)
plus stateful rendering sessions that own a pipeline each: compile cache,
texture registry, and transfer counters live for the session's lifetime.
"""

from __future__ import annotations

import base64
import threading
import uuid

from fastapi import FastAPI, HTTPException

from .. import builtins as bi
from .. import corpus
from ..depgraph import build_graph, expand_program, pack_running_pair, split, to_dot
from ..errors import FragscriptError
from ..inference import (
    build_check_context, check_well_typed, infer, iteration_table,
)
from ..interpreter import Environment, run_statements
from ..parser import parse
from ..pipeline import Pipeline, resolve_running_variable
from ..syntax import program_json
from . import schemas as s


def _parse_env(env: dict) -> dict:
    out = {}
    for name, text in env.items():
        prog = parse(text)
        out[name] = run_statements(prog.statements, Environment.for_program(prog))
    return out


class SessionStore:
    def __init__(self):
        self.lock = threading.Lock()
        self.sessions: dict = {}

    def create(self, pipeline: Pipeline) -> str:
        sid = uuid.uuid4().hex[:12]
        with self.lock:
            self.sessions[sid] = (pipeline, threading.Lock())
        return sid

    def get(self, sid: str):
        with self.lock:
            entry = self.sessions.get(sid)
        if entry is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return entry

    def drop(self, sid: str) -> None:
        with self.lock:
            self.sessions.pop(sid, None)


def create_app() -> FastAPI:
    app = FastAPI(title="fragscript", version="0.1.0")
    store = SessionStore()

    @app.exception_handler(FragscriptError)
    async def _domain_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/ast", response_model=s.AstResponse)
    def ast(req: s.ProgramRequest):
        return {"ast": program_json(parse(req.source))}

    @app.post("/check", response_model=s.CheckResponse)
    def check(req: s.ProgramRequest):
        program = parse(req.source)
        spec = resolve_running_variable(program, req.env.keys())
        analysis = expand_program(program)
        if spec.kind == "pair":
            pack_running_pair(analysis, spec.names)
        graph = build_graph(analysis, spec.graph_name)
        ctx = build_check_context(analysis, graph, spec.tau0)
        assignment = infer(ctx)
        verdict = check_well_typed(assignment, None)
        table = iteration_table(ctx, assignment)
        return {
            **table,
            "well_typed": verdict.ok,
            "offenders": [graph.node(g).label for g in verdict.offenders],
            "gamma": {
                graph.node(g).label: str(t) for g, t in assignment.gamma.items()
            },
        }

    @app.post("/graph", response_model=s.GraphResponse)
    def graph_endpoint(req: s.ProgramRequest):
        program = parse(req.source)
        spec = resolve_running_variable(program, req.env.keys())
        analysis = expand_program(program)
        if spec.kind == "pair":
            pack_running_pair(analysis, spec.names)
        result = split(analysis, spec.graph_name)
        g = result.graph
        return {
            "dot": to_dot(result),
            "mode": result.mode,
            "d_labels": sorted(g.node(x).label for x in result.d),
            "u_labels": sorted(g.node(x).label for x in result.u),
            "running": spec.graph_name,
        }

    @app.post("/compile", response_model=s.CompileResponse)
    def compile_endpoint(req: s.CompileRequest):
        pipeline = Pipeline(precision=req.precision)
        result = pipeline.colorplot(
            req.source, env_values=_parse_env(req.env), resolution=(4, 4),
            clock=req.clock,
        )
        if result.mode != "gpu":
            raise HTTPException(
                422,
                f"program is not compilable to a shader (mode: {result.mode}; "
                f"offenders: {result.offenders})",
            )
        return {
            "artifact": result.artifact.to_json(),
            "output_type": str(result.artifact.output_type),
            "mode": result.mode,
        }

    @app.get("/builtins", response_model=s.BuiltinsResponse)
    def builtins_endpoint():
        return {"entries": bi.overload_table()}

    @app.post("/sessions", response_model=s.SessionResponse)
    def create_session(req: s.SessionRequest):
        if req.backend == "sim":
            backend = None
        elif req.backend == "harness":
            from ..harness_client import HarnessBackend
            if not req.harness_url:
                raise HTTPException(422, "harness backend needs harness_url")
            backend = HarnessBackend(req.harness_url)
        else:
            raise HTTPException(422, f"unknown backend {req.backend!r}")
        pipeline = Pipeline(backend=backend, cache=req.cache)
        return {"session_id": store.create(pipeline)}

    @app.delete("/sessions/{sid}")
    def drop_session(sid: str):
        store.drop(sid)
        return {"ok": True}

    def _run_frames(pipeline: Pipeline, lock, req: s.FrameRequest):
        env = _parse_env(req.env)
        with lock:
            result = None
            for _ in range(max(1, req.iterations)):
                result = pipeline.colorplot(
                    req.source, env_values=env, target=req.target,
                    viewport=req.viewport, resolution=req.resolution,
                    clock=req.clock,
                )
        return result

    @app.post("/sessions/{sid}/frames", response_model=s.FrameResponse)
    def render_frame(sid: str, req: s.FrameRequest):
        pipeline, lock = store.get(sid)
        result = _run_frames(pipeline, lock, req)
        return _frame_response(result)

    @app.get("/sessions/{sid}/stats", response_model=s.StatsResponse)
    def session_stats(sid: str):
        pipeline, _ = store.get(sid)
        return pipeline.stats.as_dict()

    @app.get("/sessions/{sid}/textures/{name}", response_model=s.ReadbackResponse)
    def read_texture(sid: str, name: str, png: bool = False):
        pipeline, lock = store.get(sid)
        with lock:
            buf = pipeline.readback(name)
        return _readback_response(buf, png)

    @app.post("/run", response_model=s.RunResponse)
    def run_once(req: s.RunRequest):
        pipeline = Pipeline()
        result = _run_frames(pipeline, threading.Lock(), req)
        buf = pipeline.readback(req.target or "@screen")
        return {
            "frame": _frame_response(result),
            "image": _readback_response(buf, req.want_png),
        }

    @app.post("/corpus/check", response_model=s.CorpusCheckResponse)
    def corpus_check(name: "str | None" = None):
        entries = [corpus.by_name(name)] if name else corpus.ENTRIES
        results = [corpus.check_entry(e) for e in entries]
        return {
            "results": results,
            "ok": all(r["cpu_ok"] and r["sim_ok"] for r in results),
        }

    return app


def _frame_response(result) -> dict:
    return {
        "mode": result.mode,
        "target": result.target,
        "compiled": result.compiled,
        "cache_hit": result.cache_hit,
        "type_key": result.type_key,
        "pingpong": result.pingpong,
        "offenders": result.offenders,
        "notes": result.notes,
    }


def _readback_response(buf, want_png: bool) -> dict:
    return {
        "width": buf.width,
        "height": buf.height,
        "rect": tuple(buf.rect),
        "data_b64": base64.b64encode(buf.to_f32_bytes()).decode(),
        "png_b64": base64.b64encode(buf.to_png_bytes()).decode() if want_png else None,
    }


app = create_app()
