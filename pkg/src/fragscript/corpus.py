"""Bundled example programs and their golden renderings.

Each entry renders through both execution routes; `run_entry` produces the
buffers and `check_entry` compares them against the frozen golden dump
(float32, quantization-independent) at per-channel tolerances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .interpreter import Environment, PixelBuffer, TextureStore, colorplot_cpu
from .parser import parse
from .pipeline import Pipeline, pixel_binding, resolve_running_variable

CPU_TOLERANCE = 1e-6   # oracle vs golden: same code path, float32 storage
SIM_TOLERANCE = 1e-4   # shader route vs golden


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    source_file: str
    viewport: tuple
    resolution: tuple
    env: dict            # name -> literal source text
    clock: float = 0.0
    target: "str | None" = None
    iterations: int = 1

    def source(self) -> str:
        return resources.files("fragscript").joinpath(
            f"corpus_programs/{self.source_file}"
        ).read_text()


ENTRIES = (
    CorpusEntry("wave", "wave.fs", (-4.0, -4.0, 4.0, 4.0), (64, 64), {}),
    CorpusEntry("elliptic_corners", "elliptic_corners.fs", (-2.0, -2.0, 2.0, 2.0),
                (64, 64), {"a": "-1", "b": "1/2"}),
    CorpusEntry("sphere", "sphere.fs", (-1.2, -1.2, 1.2, 1.2), (64, 64), {}),
    CorpusEntry("julia", "julia.fs", (-2.0, -2.0, 2.0, 2.0), (64, 64),
                {"c": "-0.4+0.6*i"}, target="julia", iterations=50),
)


def by_name(name: str) -> CorpusEntry:
    for entry in ENTRIES:
        if entry.name == name:
            return entry
    raise KeyError(name)


def parse_env(env: dict) -> dict:
    """Evaluate the entry's literal environment values."""
    from .interpreter import run_statements
    out = {}
    for name, text in env.items():
        prog = parse(text)
        out[name] = run_statements(prog.statements, Environment.for_program(prog))
    return out


def run_cpu_source(source: str, env: dict, viewport, resolution, clock=0.0,
                   target=None, iterations=1) -> PixelBuffer:
    """Reference rendering through the interpreter (the oracle route)."""
    prog = parse(source)
    bindings = parse_env(env)
    spec = resolve_running_variable(prog, bindings.keys())
    store = TextureStore()
    if target is not None:
        w, h = resolution
        store.put(target, PixelBuffer.blank(w, h, tuple(viewport)))
    environment = Environment.for_program(prog, bindings=bindings, textures=store,
                                          clock=lambda: clock)
    out = None
    for _ in range(iterations):
        out = colorplot_cpu(prog, pixel_binding(spec), tuple(viewport),
                            tuple(resolution), environment)
        if target is not None:
            store.put(target, out)
    return out


def run_cpu(entry: CorpusEntry) -> PixelBuffer:
    return run_cpu_source(entry.source(), entry.env, entry.viewport,
                          entry.resolution, entry.clock, entry.target,
                          entry.iterations)


def run_sim(entry: CorpusEntry) -> tuple:
    """Rendering through split + inference + codegen + the shader simulator."""
    pipeline = Pipeline()
    bindings = parse_env(entry.env)
    result = None
    for _ in range(entry.iterations):
        result = pipeline.colorplot(
            entry.source(), env_values=bindings, target=entry.target,
            viewport=entry.viewport, resolution=entry.resolution, clock=entry.clock,
        )
    buf = pipeline.readback(entry.target or "@screen")
    return buf, result, pipeline


# -- golden files -------------------------------------------------------------

def _golden_dir():
    return resources.files("fragscript").joinpath("corpus_data")


def golden_paths(name: str):
    base = _golden_dir()
    return base.joinpath(f"{name}.f32"), base.joinpath(f"{name}.json"), base.joinpath(f"{name}.png")


def load_golden(name: str) -> PixelBuffer:
    f32, meta_path, _ = golden_paths(name)
    meta = json.loads(meta_path.read_text())
    data = np.frombuffer(f32.read_bytes(), dtype="<f4").reshape(
        meta["height"], meta["width"], 4
    ).copy()
    return PixelBuffer(meta["width"], meta["height"], tuple(meta["rect"]), data)


def write_golden(name: str, buf: PixelBuffer, directory=None) -> None:
    import pathlib
    base = pathlib.Path(directory) if directory else pathlib.Path(str(_golden_dir()))
    base.mkdir(parents=True, exist_ok=True)
    (base / f"{name}.f32").write_bytes(buf.to_f32_bytes())
    (base / f"{name}.json").write_text(json.dumps(buf.meta(), indent=1) + "\n")
    (base / f"{name}.png").write_bytes(buf.to_png_bytes())


def export_job(entry: CorpusEntry) -> dict:
    """A ready-to-run harness job for this entry: the compiled artifact plus
    the CPU-evaluated uniform values and the feedback schedule."""
    pipeline = Pipeline()
    bindings = parse_env(entry.env)
    result = pipeline.colorplot(
        entry.source(), env_values=bindings, target=entry.target,
        viewport=entry.viewport, resolution=entry.resolution, clock=entry.clock,
    )
    if result.mode != "gpu":
        raise RuntimeError(f"{entry.name} did not take the shader route")
    feedback = None
    if result.pingpong:
        feedback = result.artifact.textures[0]["sampler"]
    return {
        "artifact": result.artifact.to_json(),
        "uniformValues": result.slot_values,
        "width": entry.resolution[0],
        "height": entry.resolution[1],
        "viewport": list(entry.viewport),
        "textures": {},
        "iterations": entry.iterations,
        "feedback": feedback,
        "readback": True,
    }


def check_entry(entry: CorpusEntry) -> dict:
    golden = load_golden(entry.name)
    cpu = run_cpu(entry)
    sim_buf, result, pipeline = run_sim(entry)
    cpu_diff = float(np.abs(cpu.data - golden.data).max())
    sim_diff = float(np.abs(sim_buf.data - golden.data).max())
    return {
        "name": entry.name,
        "mode": result.mode,
        "cpu_max_diff": cpu_diff,
        "sim_max_diff": sim_diff,
        "cpu_ok": cpu_diff <= CPU_TOLERANCE,
        "sim_ok": sim_diff <= SIM_TOLERANCE,
        "compiles": pipeline.stats.compiles,
    }
