"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

Viewport = tuple[float, float, float, float]
Resolution = tuple[int, int]


class ProgramRequest(BaseModel):
    source: str
    env: dict[str, str] = Field(default_factory=dict,
                                description="literal source text per variable")


class AstResponse(BaseModel):
    ast: dict


class CheckResponse(BaseModel):
    rows: list[dict]
    iterations: int
    stationary: str
    well_typed: bool
    offenders: list[str]
    gamma: dict[str, str]


class GraphResponse(BaseModel):
    dot: str
    mode: str
    d_labels: list[str]
    u_labels: list[str]
    running: Optional[str]


class CompileRequest(ProgramRequest):
    clock: float = 0.0
    precision: str = "highp"


class CompileResponse(BaseModel):
    artifact: dict
    output_type: str
    mode: str


class BuiltinsResponse(BaseModel):
    entries: list[dict]


class SessionRequest(BaseModel):
    backend: str = "sim"
    cache: bool = True
    harness_url: Optional[str] = None


class SessionResponse(BaseModel):
    session_id: str


class FrameRequest(ProgramRequest):
    target: Optional[str] = None
    viewport: Viewport = (-4.0, -4.0, 4.0, 4.0)
    resolution: Resolution = (64, 64)
    clock: float = 0.0
    iterations: int = 1


class FrameResponse(BaseModel):
    mode: str
    target: str
    compiled: bool
    cache_hit: bool
    type_key: Optional[str]
    pingpong: bool
    offenders: list[str]
    notes: Optional[str]


class StatsResponse(BaseModel):
    frames: int
    compiles: int
    cache_hits: int
    cpu_fallbacks: int
    cpu_const: int
    downloads: int
    uploads: int
    swaps: int


class ReadbackResponse(BaseModel):
    width: int
    height: int
    rect: Viewport
    data_b64: str = Field(description="float32 little-endian rgba rows, bottom-up")
    png_b64: Optional[str] = None


class RunRequest(FrameRequest):
    want_png: bool = True


class RunResponse(BaseModel):
    frame: FrameResponse
    image: ReadbackResponse


class CorpusCheckResponse(BaseModel):
    results: list[dict]
    ok: bool
