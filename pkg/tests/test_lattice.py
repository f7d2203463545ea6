"""Lattice behaviour: subtyping, join, casts, and the randomized property suite."""

import random

import pytest

from fragscript.errors import NotASubtype
from fragscript.lattice import (
    BOOLEAN, BOT, COMPLEX, INT, REAL, TOP, ConstInt, ListType, embed_cast,
    format_type, is_subtype, join, make_list, parse_type,
)
from fragscript.values import VBool, VComplex, VInt, VList, VReal, apply_cast, from_py


def test_scalar_chain():
    assert is_subtype(BOOLEAN, INT)
    assert is_subtype(INT, REAL)
    assert is_subtype(REAL, COMPLEX)
    assert is_subtype(INT, COMPLEX)
    assert not is_subtype(COMPLEX, REAL)
    assert is_subtype(BOT, TOP)
    assert not is_subtype(TOP, BOT)


def test_const_int_subtyping():
    assert is_subtype(ConstInt(7), ConstInt(7))
    assert not is_subtype(ConstInt(7), ConstInt(8))
    assert is_subtype(ConstInt(7), INT)
    assert is_subtype(ConstInt(7), REAL)
    assert not is_subtype(BOOLEAN, ConstInt(1))
    assert not is_subtype(INT, ConstInt(1))


def test_list_invariant_in_length_covariant_in_elem():
    assert is_subtype(make_list(3, INT), make_list(3, REAL))
    assert not is_subtype(make_list(2, REAL), make_list(3, REAL))
    assert not is_subtype(make_list(3, REAL), REAL)


def test_join_paper_examples():
    assert join(INT, REAL) == REAL
    assert join(BOT, COMPLEX) == COMPLEX
    assert join(make_list(5, COMPLEX), make_list(5, REAL)) == make_list(5, COMPLEX)
    assert join(make_list(2, REAL), make_list(3, REAL)) == TOP


def test_join_nested_lists():
    a = make_list(2, make_list(2, INT))
    b = make_list(2, make_list(2, REAL))
    assert join(a, b) == make_list(2, make_list(2, REAL))


def test_join_const_ints():
    assert join(ConstInt(3), ConstInt(3)) == ConstInt(3)
    assert join(ConstInt(3), ConstInt(4)) == INT
    assert join(ConstInt(3), BOOLEAN) == INT
    assert join(ConstInt(3), REAL) == REAL


def test_make_list_collapses_top():
    assert make_list(4, TOP) is TOP
    with pytest.raises(ValueError):
        ListType(3, TOP)


def test_format_and_parse_roundtrip():
    cases = [BOT, TOP, BOOLEAN, INT, REAL, COMPLEX, ConstInt(7),
             make_list(3, REAL), make_list(2, make_list(4, COMPLEX))]
    for t in cases:
        assert parse_type(format_type(t)) == t
    assert format_type(make_list(3, REAL)) == "list<3, real>"
    assert format_type(ConstInt(7)) == "const<7>"


def random_type(rng, depth=0):
    choices = ["bool", "int", "real", "complex", "const", "bot", "top"]
    if depth < 3:
        choices += ["list"] * 3
    pick = rng.choice(choices)
    if pick == "list":
        return make_list(rng.randint(1, 4), random_type(rng, depth + 1))
    if pick == "const":
        return ConstInt(rng.randint(-3, 3))
    return {"bool": BOOLEAN, "int": INT, "real": REAL, "complex": COMPLEX,
            "bot": BOT, "top": TOP}[pick]


def test_join_properties_randomized():
    rng = random.Random(20240811)
    for _ in range(2500):
        a, b, c = (random_type(rng) for _ in range(3))
        ab = join(a, b)
        assert ab == join(b, a)
        assert join(a, a) == a
        assert join(join(a, b), c) == join(a, join(b, c))
        assert join(BOT, a) == a
        assert join(TOP, a) == TOP
        assert is_subtype(a, ab) and is_subtype(b, ab)


def test_join_minimality_randomized():
    rng = random.Random(7)
    hits = 0
    for _ in range(5000):
        a, b, m = (random_type(rng) for _ in range(3))
        if is_subtype(a, m) and is_subtype(b, m):
            hits += 1
            assert is_subtype(join(a, b), m)
    assert hits > 200  # the sample actually exercised the property


def _enumerate_types(depth):
    scalars = [BOOLEAN, INT, REAL, COMPLEX, ConstInt(0), ConstInt(1)]
    out = [BOT, TOP] + scalars
    level = scalars
    for _ in range(depth):
        level = [make_list(n, e) for n in (2, 3) for e in level]
        out += level
    return out


def test_finite_height_by_enumeration():
    # longest strictly ascending chain within list-depth <= 2
    types = _enumerate_types(2)
    order = {t: [u for u in types if u != t and is_subtype(t, u)] for t in types}
    best: dict = {}

    def longest(t):
        if t not in best:
            best[t] = 1 + max((longest(u) for u in order[t]), default=0)
        return best[t]

    assert max(longest(t) for t in types) <= 4 + 2 * 4


def test_embed_cast_chain_and_values():
    plan = embed_cast(INT, COMPLEX)
    assert apply_cast(plan, VInt(3)) == VComplex(3.0, 0.0)
    assert embed_cast(REAL, REAL).is_identity
    plan = embed_cast(make_list(3, INT), make_list(3, COMPLEX))
    out = apply_cast(plan, from_py([1, 2, 3]))
    assert out == VList((VComplex(1, 0), VComplex(2, 0), VComplex(3, 0)))
    assert apply_cast(embed_cast(BOOLEAN, INT), VBool(True)) == VInt(1)
    assert apply_cast(embed_cast(ConstInt(4), REAL), VInt(4)) == VReal(4.0)


def test_embed_cast_requires_subtype():
    with pytest.raises(NotASubtype):
        embed_cast(COMPLEX, REAL)
    with pytest.raises(NotASubtype):
        embed_cast(BOT, TOP)


def test_embed_cast_injective_on_samples():
    rng = random.Random(99)
    samples = [VInt(k) for k in range(-5, 6)] + [VBool(True), VBool(False)]
    plan = embed_cast(INT, COMPLEX)
    outs = {apply_cast(plan, v) for v in samples if isinstance(v, VInt)}
    assert len(outs) == 11
