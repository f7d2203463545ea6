"""Acceptance suite: every criterion at its stated tolerance and budget,
one PASS line printed per criterion."""

import itertools
import random
import time

import numpy as np

from fragscript import builtins as bi
from fragscript import corpus
from fragscript.depgraph import build_graph, expand_program, split
from fragscript.inference import (
    build_check_context, check_well_typed, infer, iteration_table,
)
from fragscript.interpreter import (
    Environment, PixelBuffer, TextureStore, colorplot_cpu,
)
from fragscript.lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, is_subtype, join,
    make_list,
)
from fragscript.parser import parse
from fragscript.pipeline import Pipeline, pixel_binding, resolve_running_variable
from fragscript.values import VBool, VComplex, VInt, VReal

JULIA = 'if(|z|<2, imagergb("julia", z^2+c)+[0.01,0.02,0.03], [0,0,0])'
WAVE = "1/2+1/2*sin(|#|-seconds())"


def _report(name: str, started: float, budget: float):
    elapsed = time.monotonic() - started
    assert elapsed < budget, f"{name}: {elapsed:.1f}s exceeded the {budget:.0f}s budget"
    print(f"PASS {name} ({elapsed:.2f}s)")


def test_acceptance_fixed_point_table():
    started = time.monotonic()
    analysis = expand_program(parse("a=-2; b=sqrt(a); a=b+1;"))
    ctx = build_check_context(analysis, build_graph(analysis, None))
    assignment = infer(ctx)
    table = iteration_table(ctx, assignment)
    rows = {r["term"]: r["types"] for r in table["rows"]}
    assert [r["term"] for r in table["rows"]] == ["a", "b", "sqrt(a)", "b+1", "-2", "1"]
    assert rows["a"] == ["bot", "bot", "int", "int", "int", "int", "complex", "complex"]
    assert rows["b"] == ["bot", "bot", "bot", "bot", "complex", "complex", "complex", "complex"]
    assert rows["sqrt(a)"] == ["bot", "bot", "bot", "complex", "complex", "complex", "complex", "complex"]
    assert rows["b+1"] == ["bot", "bot", "bot", "bot", "bot", "complex", "complex", "complex"]
    assert rows["-2"] == ["bot"] + ["int"] * 7
    assert rows["1"] == ["bot"] + ["int"] * 7
    assert table["stationary"] == "F^6(bot) = F^7(bot)"
    # the six-column table is also what the check command serves
    from fragscript.cli import make_client
    body = make_client(None).post("/check", json={"source": "a=-2; b=sqrt(a); a=b+1;"}).json()
    assert body["rows"] == table["rows"]
    _report("fixed-point table reproduction (a:int->complex at F^6, b at F^4, F^6=F^7)",
            started, 1.0)


def test_acceptance_join_table():
    started = time.monotonic()
    assert join(INT, REAL) is REAL
    assert join(BOT, COMPLEX) is COMPLEX
    assert join(make_list(5, COMPLEX), make_list(5, REAL)) == make_list(5, COMPLEX)
    assert join(make_list(2, REAL), make_list(3, REAL)) is TOP
    _report("join table (int|real, bot|complex, list joins)", started, 1.0)


def test_acceptance_min_sign_table():
    started = time.monotonic()
    assert bi.min_sign("+", (INT, INT)) == bi.Signature((INT, INT), INT)
    assert bi.min_sign("+", (COMPLEX, INT)) == bi.Signature((COMPLEX, COMPLEX), COMPLEX)
    assert bi.min_sign("sqrt", (INT,)) == bi.Signature((REAL,), COMPLEX)
    _report("minimal signature table (+ and sqrt)", started, 1.0)


def test_acceptance_fig2_split():
    started = time.monotonic()
    result = split(expand_program(parse(WAVE)), "#")
    assert result.mode == "gpu"
    d_labels = sorted(result.graph.node(g).label for g in result.d)
    assert d_labels == sorted([
        "#", "|#|", "|#|-seconds()", "sin(|#|-seconds())",
        "1/2*sin(|#|-seconds())", "1/2+1/2*sin(|#|-seconds())",
    ])
    assert len(result.d) == 6
    u_labels = sorted(result.graph.node(g).label for g in result.u)
    assert u_labels == ["1/2", "1/2", "seconds()"]
    assert len(result.u) == 3
    _report("wave split: |U| = 3 {seconds(), 1/2, 1/2}, D = the six marked nodes",
            started, 1.0)


def test_acceptance_ill_typed_rejection():
    started = time.monotonic()
    # static route: the if-node types to the error type
    analysis = expand_program(parse("if(booleanexp, 12, [0])"))
    ctx = build_check_context(analysis, build_graph(analysis, None))
    assignment = infer(ctx)
    if_gid = next(g for g in assignment.gamma
                  if ctx.graph.node(g).label.startswith("if("))
    assert assignment.gamma[if_gid] is TOP
    assert not check_well_typed(assignment, None).ok
    # pipeline route: falls back to the CPU and still renders
    p = Pipeline()
    result = p.colorplot("booleanexp = |#| < 2; if(booleanexp, 12, [0])",
                         viewport=(-1, -1, 1, 1), resolution=(8, 8))
    assert result.mode == "cpu-fallback"
    assert np.all(p.readback("@screen").data[:, :, :3] == 1.0)
    # and a concrete boolean from the environment evaluates fine
    p2 = Pipeline()
    result2 = p2.colorplot("if(booleanexp, 12, [0])",
                           env_values={"booleanexp": VBool(True)}, resolution=(4, 4))
    assert result2.mode == "cpu-const"
    assert np.all(p2.readback("@screen").data[:, :, :3] == 1.0)
    _report("ill-typed if(b, 12, [0]) infers top and falls back to the CPU",
            started, 1.0)


def _random_type(rng, depth=0):
    kinds = ["bool", "int", "real", "complex", "const", "bot", "top"]
    if depth < 3:
        kinds += ["list"] * 3
    pick = rng.choice(kinds)
    if pick == "list":
        return make_list(rng.randint(1, 4), _random_type(rng, depth + 1))
    if pick == "const":
        return ConstInt(rng.randint(-3, 3))
    return {"bool": BOOLEAN, "int": INT, "real": REAL, "complex": COMPLEX,
            "bot": BOT, "top": TOP}[pick]


def _random_realizable(rng, depth=0):
    if depth < 2 and rng.random() < 0.35:
        return make_list(rng.randint(1, 4), _random_realizable(rng, depth + 1))
    return rng.choice([BOOLEAN, INT, REAL, COMPLEX, ConstInt(rng.randint(0, 3))])


def _raise_type(rng, t):
    from fragscript.lattice import ListType
    if isinstance(t, ConstInt):
        return rng.choice([t, INT, REAL, COMPLEX])
    if t is BOOLEAN:
        return rng.choice([t, INT, REAL, COMPLEX])
    if t is INT:
        return rng.choice([t, REAL, COMPLEX])
    if t is REAL:
        return rng.choice([t, COMPLEX])
    if isinstance(t, ListType):
        return make_list(t.length, _raise_type(rng, t.elem))
    return t


def test_acceptance_lattice_property_suite():
    started = time.monotonic()
    rng = random.Random(0xACCE97)
    failures = 0
    names = [(n, a) for (n, a) in bi.REGISTRY if a > 0]
    for k in range(10_000):
        if k % 2 == 0:  # join laws
            a, b, c = (_random_type(rng) for _ in range(3))
            ab = join(a, b)
            ok = (
                ab == join(b, a)
                and join(a, a) == a
                and join(join(a, b), c) == join(a, join(b, c))
                and join(BOT, a) == a and join(TOP, a) is TOP
                and is_subtype(a, ab) and is_subtype(b, ab)
            )
            m = _random_type(rng)
            if is_subtype(a, m) and is_subtype(b, m):
                ok = ok and is_subtype(ab, m)  # minimality of the bound
            failures += not ok
        else:  # minSign return-map monotonicity
            name, arity = rng.choice(names)
            lo = tuple(_random_realizable(rng) for _ in range(arity))
            hi = tuple(_raise_type(rng, t) for t in lo)
            sig_lo = bi.min_sign(name, lo)
            sig_hi = bi.min_sign(name, hi)
            if sig_lo is not None and sig_hi is not None:
                failures += not is_subtype(sig_lo.ret, sig_hi.ret)
    assert failures == 0
    _report("lattice property suite: 10^4 randomized checks, zero failures",
            started, 10.0)


# -- minimality oracle ---------------------------------------------------------

_SCALARS = (BOT, BOOLEAN, INT, REAL, COMPLEX, TOP)


def _compatible(ctx, gamma):
    from fragscript.lattice import contains_bot
    for gid, rule in ctx.rules.items():
        kind = rule[0]
        if kind in ("uniform", "running") and not is_subtype(rule[1], gamma[gid]):
            return False
        if kind == "counter" and not is_subtype(INT, gamma[gid]):
            return False
        if kind == "var" and any(not is_subtype(gamma[r], gamma[gid]) for r in rule[1]):
            return False
        if kind == "call":
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


def _generated_family():
    """Deterministic family of scalar programs with small term counts."""
    lits = ["-2", "3", "0.5", "true"]
    fns = ["sqrt", "sin", "floor"]
    ops = ["+", "*", "-", "/"]
    programs = []
    for lit in lits:
        for fn in fns:
            programs.append(f"a={lit}; b={fn}(a); c=a+b; c")
    for lit in lits:
        for op in ops:
            programs.append(f"a={lit}; a{op}2")
            programs.append(f"a={lit}; a={lit}; a{op}a")
    for op in ops:
        programs.append(f"a=1; b=a{op}0.5; b")
    programs += [
        "a=1; b=a<2; if(b, a, 0)",
        "a=true; if(a, 1, 2.5)",
        "a=0.5; a=a+i; a",
        "t=2; t=t*t; t",
        "m=mod(4, 3); m+1",
        "x=1.5; floor(x)",
    ]
    return programs


def test_acceptance_minimality_oracle():
    started = time.monotonic()
    family = _generated_family()
    checked = 0
    for src in family:
        analysis = expand_program(parse(src))
        ctx = build_check_context(analysis, build_graph(analysis, None))
        gids = list(ctx.rules)
        if len(gids) > 6:
            continue
        assignment = infer(ctx)
        if not check_well_typed(assignment, None).ok:
            continue  # the family covers well-typed programs
        checked += 1
        assert _compatible(ctx, assignment.gamma), src
        gamma = assignment.gamma
        for combo in itertools.product(_SCALARS, repeat=len(gids)):
            cand = dict(zip(gids, combo))
            if _compatible(ctx, cand):
                assert all(is_subtype(gamma[g], cand[g]) for g in gids), (
                    f"not pointwise minimal for {src!r}: {cand}"
                )
    assert checked >= 30
    _report(f"minimality oracle: {checked} programs, exhaustive enumeration",
            started, 60.0)


# -- oracle equivalence ---------------------------------------------------------

def _julia_cpu_reference(iterations, c, rect, res):
    prog = parse(JULIA)
    spec = resolve_running_variable(prog, ("c",))
    store = TextureStore()
    store.put("julia", PixelBuffer.blank(res[0], res[1], rect))
    env = Environment.for_program(prog, bindings={"c": c}, textures=store)
    for _ in range(iterations):
        out = colorplot_cpu(prog, pixel_binding(spec), rect, res, env)
        store.put("julia", out)
    return store.get("julia")


def test_acceptance_oracle_equivalence():
    started = time.monotonic()
    for name in ("wave", "elliptic_corners", "sphere"):
        entry = corpus.by_name(name)
        cpu = corpus.run_cpu(entry)
        sim_buf, result, _ = corpus.run_sim(entry)
        assert result.mode == "gpu", name
        diff = float(np.abs(cpu.data - sim_buf.data).max())
        assert diff <= 1e-4, f"{name}: max channel diff {diff}"
    # julia: 50 ping-pong passes against the pure-CPU 50-iteration simulation
    rect, res, c = (-2.0, -2.0, 2.0, 2.0), (64, 64), VComplex(-0.4, 0.6)
    pipeline = Pipeline()
    for _ in range(50):
        r = pipeline.colorplot(JULIA, env_values={"c": c}, target="julia",
                               viewport=rect, resolution=res)
    assert r.mode == "gpu" and r.pingpong
    gpu = pipeline.readback("julia").data
    cpu = _julia_cpu_reference(50, c, rect, res).data
    diff = float(np.abs(gpu - cpu).max())
    assert diff <= 1e-4, f"julia: max channel diff {diff}"
    _report("oracle equivalence at 64x64 (wave, corners, sphere, julia x50 ping-pong)",
            started, 30.0)


def test_acceptance_cache_behavior():
    started = time.monotonic()
    p = Pipeline()
    for frame in range(100):
        p.colorplot(WAVE, resolution=(4, 4), clock=frame / 60.0)
    assert p.stats.compiles == 1, "a 100-frame session must compile exactly once"
    # flipping a uniform real -> complex forces exactly one recompilation
    p2 = Pipeline()
    p2.colorplot(JULIA, env_values={"c": VReal(0.0)}, target="julia", resolution=(4, 4))
    p2.colorplot(JULIA, env_values={"c": VReal(1.0)}, target="julia", resolution=(4, 4))
    assert p2.stats.compiles == 1
    p2.colorplot(JULIA, env_values={"c": VComplex(0, 1)}, target="julia", resolution=(4, 4))
    assert p2.stats.compiles == 2
    p2.colorplot(JULIA, env_values={"c": VComplex(2, 1)}, target="julia", resolution=(4, 4))
    assert p2.stats.compiles == 2
    # a repeat count 5 -> 6 is a constant-type change and recompiles once
    p3 = Pipeline()
    src = "s = 0; repeat(n, s = s + 1/(# + |z|)); s/3"
    p3.colorplot(src, env_values={"n": VInt(5)}, resolution=(2, 2))
    p3.colorplot(src, env_values={"n": VInt(5)}, resolution=(2, 2))
    assert p3.stats.compiles == 1
    p3.colorplot(src, env_values={"n": VInt(6)}, resolution=(2, 2))
    assert p3.stats.compiles == 2
    _report("cache: 1 compile per 100 frames; real->complex and 5->6 recompile once each",
            started, 5.0)


def test_acceptance_readback_laziness():
    started = time.monotonic()
    p = Pipeline()
    for _ in range(20):
        p.colorplot(JULIA, env_values={"c": VComplex(0, 0)}, target="julia",
                    viewport=(-2, -2, 2, 2), resolution=(4, 4))
    assert p.stats.downloads == 0, "GPU-only passes must not transfer"
    p.readback("julia")
    assert p.stats.downloads == 1, "the first CPU read performs exactly one transfer"
    p.readback("julia")
    assert p.stats.downloads == 1, "a second read without writes is free"
    _report("readback laziness: 20 feedback passes + 1 CPU read = 1 transfer",
            started, 5.0)
