"""Session behaviour: caching, ping-pong feedback, lazy transfers, fallback."""

import numpy as np
import pytest

from fragscript.errors import AmbiguousRunningVariable, UnknownTexture
from fragscript.interpreter import (
    Environment, PixelBuffer, TextureStore, colorplot_cpu,
)
from fragscript.parser import parse
from fragscript.pipeline import (
    Pipeline, pixel_binding, resolve_running_variable,
)
from fragscript.lattice import COMPLEX, REAL, make_list
from fragscript.values import VComplex, VInt, VReal

WAVE = "1/2+1/2*sin(|#|-seconds())"
JULIA = 'if(|z|<2, imagergb("julia", z^2+c)+[0.01,0.02,0.03], [0,0,0])'


def test_resolve_running_variable_cases():
    assert resolve_running_variable(parse(WAVE)).names == ("#",)
    assert resolve_running_variable(parse(WAVE)).tau0 == make_list(2, REAL)
    spec = resolve_running_variable(parse("a=1;b=2; x^3 + a*x + b - y^2"))
    assert spec.kind == "pair" and spec.names == ("x", "y")
    spec = resolve_running_variable(parse(JULIA), bound_names=("c",))
    assert spec.kind == "complex" and spec.tau0 is COMPLEX
    spec = resolve_running_variable(parse("f(P) := |P-A|/|P-B|-r; f(Q)"),
                                    bound_names=("A", "B", "r"))
    assert spec.kind == "vector" and spec.names == ("Q",)
    assert resolve_running_variable(parse("seconds()*2")).kind == "none"


def test_resolve_ambiguous():
    with pytest.raises(AmbiguousRunningVariable):
        resolve_running_variable(parse("|#| + z"))
    with pytest.raises(AmbiguousRunningVariable):
        resolve_running_variable(parse("p + q"))


def test_cpu_const_mode():
    p = Pipeline()
    result = p.colorplot("seconds()*0 + 0.25", resolution=(4, 4), clock=3.0)
    assert result.mode == "cpu-const"
    buf = p.readback("@screen")
    assert np.all(buf.data[:, :, 0] == 0.25)


def test_cpu_uniform_mode_unused_running_var():
    # `#` never occurs, so the expression is uniform even with env pixel var
    p = Pipeline()
    result = p.colorplot("k * 1.0", env_values={"k": VReal(0.5)}, resolution=(2, 2))
    assert result.mode == "cpu-const"


def test_cpu_uniform_mode_result_independent_of_pixel():
    # the running variable occurs, but the plotted value never depends on it
    p = Pipeline()
    result = p.colorplot("q = |#|; 0.25", resolution=(2, 2))
    assert result.mode == "cpu-uniform"
    assert np.all(p.readback("@screen").data[:, :, 0] == 0.25)


def test_analysis_keeps_node_ids_unique():
    from fragscript.depgraph import expand_program
    from fragscript.syntax import walk
    analysis = expand_program(parse("f(x) := x*x; f(1) + f(2) + |z|"))
    seen = set()
    for stmt in analysis.statements:
        for node in walk(stmt):
            assert node.nid not in seen
            seen.add(node.nid)


def test_wave_cache_one_compile_many_frames():
    p = Pipeline()
    for frame in range(20):
        r = p.colorplot(WAVE, resolution=(4, 4), clock=frame * 0.1)
    assert p.stats.compiles == 1
    assert p.stats.cache_hits == 19


def test_cache_soundness_identical_buffers():
    with_cache = Pipeline(cache=True)
    without_cache = Pipeline(cache=False)
    for frame in range(3):
        for p in (with_cache, without_cache):
            p.colorplot(JULIA, env_values={"c": VComplex(-0.4, 0.6)}, target="julia",
                        viewport=(-2, -2, 2, 2), resolution=(8, 8), clock=frame)
    a = with_cache.readback("julia").data
    b = without_cache.readback("julia").data
    assert np.array_equal(a, b)
    assert without_cache.stats.compiles == 3
    assert with_cache.stats.compiles == 1


def test_recompile_on_uniform_type_change():
    p = Pipeline()
    p.colorplot(JULIA, env_values={"c": VReal(0.0)}, target="julia", resolution=(4, 4))
    assert p.stats.compiles == 1
    p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia", resolution=(4, 4))
    assert p.stats.compiles == 2
    p.colorplot(JULIA, env_values={"c": VComplex(1, 1)}, target="julia", resolution=(4, 4))
    assert p.stats.compiles == 2  # value change only


def test_recompile_on_repeat_count_change():
    p = Pipeline()
    src = "s = 0; repeat(n, s = s + 1/(# + |z|)); s/3"
    p.colorplot(src, env_values={"n": VInt(5)}, resolution=(2, 2))
    p.colorplot(src, env_values={"n": VInt(5)}, resolution=(2, 2))
    assert p.stats.compiles == 1
    p.colorplot(src, env_values={"n": VInt(6)}, resolution=(2, 2))
    assert p.stats.compiles == 2


def test_pingpong_engaged_only_on_feedback():
    p = Pipeline()
    r = p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia", resolution=(4, 4))
    assert r.pingpong
    # reading julia while writing to the screen: no conflict
    r2 = p.colorplot('imagergb("julia", z) + [0,0,0.1]', resolution=(4, 4))
    assert not r2.pingpong
    # two distinct textures: no conflict
    r3 = p.colorplot('imagergb("julia", z)', target="copy", resolution=(4, 4))
    assert not r3.pingpong


def test_feedback_swap_count():
    p = Pipeline()
    for _ in range(7):
        p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia",
                    viewport=(-2, -2, 2, 2), resolution=(4, 4))
    assert p.stats.swaps == 7


def julia_cpu_reference(iterations, c, rect, res):
    """Pure-CPU feedback simulation through the reference interpreter."""
    prog = parse(JULIA)
    spec = resolve_running_variable(prog, ("c",))
    store = TextureStore()
    store.put("julia", PixelBuffer.blank(res[0], res[1], rect))
    env = Environment.for_program(prog, bindings={"c": c}, textures=store)
    for _ in range(iterations):
        out = colorplot_cpu(prog, pixel_binding(spec), rect, res, env)
        store.put("julia", out)
    return store.get("julia")


def test_julia_pingpong_matches_cpu_simulation():
    rect, res, iters = (-2.0, -2.0, 2.0, 2.0), (8, 8), 12
    c = VComplex(-0.4, 0.6)
    p = Pipeline()
    for _ in range(iters):
        p.colorplot(JULIA, env_values={"c": c}, target="julia",
                    viewport=rect, resolution=res)
    gpu = p.readback("julia").data
    cpu = julia_cpu_reference(iters, c, rect, res).data
    assert np.abs(gpu - cpu).max() <= 1e-4


def test_readback_laziness_counters():
    p = Pipeline()
    for _ in range(20):
        p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia",
                    viewport=(-2, -2, 2, 2), resolution=(4, 4))
    assert p.stats.downloads == 0
    p.readback("julia")
    assert p.stats.downloads == 1
    p.readback("julia")
    assert p.stats.downloads == 1  # no intervening write
    p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia",
                viewport=(-2, -2, 2, 2), resolution=(4, 4))
    p.readback("julia")
    assert p.stats.downloads == 2


def test_readback_after_cpu_write_costs_nothing():
    p = Pipeline()
    p.colorplot("if(|#|<9, 12, [0])", viewport=(-1, -1, 1, 1), resolution=(4, 4))
    assert p.stats.cpu_fallbacks == 1
    p.readback("@screen")
    assert p.stats.downloads == 0


def test_cpu_written_texture_uploads_before_gpu_read():
    p = Pipeline()
    # fallback writes `mask` on the CPU (ill-typed on purpose)
    p.colorplot("if(|#| < 1, 1, [0,0,0])", target="mask",
                viewport=(-2, -2, 2, 2), resolution=(4, 4))
    assert p.stats.cpu_fallbacks == 1
    r = p.colorplot('imagergb("mask", z)', viewport=(-2, -2, 2, 2), resolution=(4, 4))
    assert r.mode == "gpu"
    assert p.stats.uploads == 1


def test_uniform_evaluation_error_surfaces():
    p = Pipeline()
    with pytest.raises(Exception) as exc:
        # the uniform frontier contains an out-of-bounds index
        p.colorplot("l = [1, 2]; l_5 + |z|", resolution=(2, 2))
    assert "uniform" in str(exc.value)


def test_ambiguous_running_variable_raises():
    p = Pipeline()
    with pytest.raises(AmbiguousRunningVariable):
        p.colorplot("q + |z|", resolution=(2, 2))


def test_unknown_texture_readback():
    p = Pipeline()
    with pytest.raises(UnknownTexture):
        p.readback("ghost")


def test_invalid_render_parameters_rejected():
    from fragscript.errors import FragscriptError
    p = Pipeline()
    with pytest.raises(FragscriptError):
        p.colorplot(WAVE, resolution=(0, 4))
    with pytest.raises(FragscriptError):
        p.colorplot(WAVE, viewport=(1, 0, 1, 2))


def test_ill_typed_routes_to_fallback_and_still_renders():
    p = Pipeline()
    result = p.colorplot("if(|#|<2, 12, [0])", viewport=(-1, -1, 1, 1), resolution=(4, 4))
    assert result.mode == "cpu-fallback"
    assert result.offenders
    assert np.all(p.readback("@screen").data[:, :, :3] == 1.0)


def test_uniform_frontier_values_flow_in_program_order():
    p = Pipeline()
    src = "k = 1; q = k + 1; q * 1.0 + 0 * |z|"
    r = p.colorplot(src, resolution=(2, 2))
    assert r.mode == "gpu"
    assert np.all(p.readback("@screen").data[:, :, 0] == 1.0)  # q = 2, clamped
