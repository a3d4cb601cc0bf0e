from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimw.errors import LayoutError
from mimw.ir import parse_kernel, print_ir
from mimw.layout import (
    ANY,
    LayoutFact,
    Provenance,
    build_graph,
    dot_operand_encodings,
    insert_constraints,
    propagate_backward,
    propagate_forward,
    resolve,
    run_layout,
    transpose_encoding,
)
from mimw.ir.nodes import ENCODINGS, PRIORITIES
from mimw.kernels.sources import CORPUS, gemm_pipeline

HEADER = "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\n"


def facts_of(src: str):
    p = insert_constraints(parse_kernel(src))
    back = propagate_backward(p)
    return p, back, propagate_forward(p, back)


# lattice --------------------------------------------------------------------

_prov = st.builds(
    Provenance,
    st.sampled_from(["s0", "s1", "s2"]),
    st.sampled_from(ENCODINGS),
    st.sampled_from(sorted(PRIORITIES.values())),
)
_facts = st.frozensets(_prov, max_size=3).map(LayoutFact)


@given(_facts, _facts, _facts)
def test_meet_laws(a, b, c):
    assert ANY.meet(a) == a
    assert a.meet(a) == a
    assert a.meet(b) == b.meet(a)
    assert a.meet(b).meet(c) == a.meet(b.meet(c))
    assert a.meet(b).height() >= max(a.height(), b.height())


def test_known_meet_known_differs_is_conflict():
    a = LayoutFact(frozenset({Provenance("s0", "row_major", 2)}))
    b = LayoutFact(frozenset({Provenance("s1", "mma_a", 3)}))
    assert a.meet(b).kind == "Conflict"
    assert a.meet(b).meet(a).kind == "Conflict"


def test_transpose_encoding():
    assert transpose_encoding("row_major") == "col_major"
    assert transpose_encoding("col_major") == "row_major"
    for enc in ("swizzle32", "swizzle64", "swizzle128", "mma_a", "mma_b", "mma_acc"):
        assert transpose_encoding(enc) == enc


# insertion --------------------------------------------------------------------

DOT = HEADER + "%a = zeros shape(4 4)\n%b = zeros shape(4 4)\n%c = zeros shape(4 4)\n%d = dot %a %b %c\n"


def test_dot_inserts_two_required_constraints():
    g = build_graph(insert_constraints(parse_kernel(DOT)))
    got = sorted((c.value, c.encoding, c.priority) for c in g.constraints)
    assert got == [("prologue:%a", "mma_a", 3), ("prologue:%b", "mma_b", 3)]


def test_buffer_annotation_is_one_user_constraint():
    src = HEADER + "buffer s shape(4) f32 stages(1) storage(smem) layout(row_major)\n"
    g = build_graph(insert_constraints(parse_kernel(src)))
    assert [(c.value, c.encoding, c.priority) for c in g.constraints] == [("@s", "row_major", 2)]


def test_no_constraints_without_dots_or_annotations():
    src = HEADER + "%a = zeros shape(4 4)\n%b = exp %a\n"
    assert build_graph(insert_constraints(parse_kernel(src))).constraints == []


def test_async_copy_destination_gets_default_swizzle():
    p = insert_constraints(parse_kernel(CORPUS["gemm_pipeline"]()))
    g = build_graph(p)
    defaults = {c.value: c.encoding for c in g.constraints if c.priority == 1}
    assert defaults == {"default:%va": "swizzle128", "default:%vb": "swizzle128"}


def test_insertion_idempotent():
    once = insert_constraints(parse_kernel(gemm_pipeline()))
    assert insert_constraints(once) == once


# backward ---------------------------------------------------------------------

STAGED_DOT = HEADER + """\
param a tensor(16 16)
param c tensor(16 16)
buffer s shape(16 16) f32 stages(1) storage(smem)
%v = local_view @s 0
%t = load @a 0 0 shape(16 16)
local_store %v %t
%x = local_load %v
%z = zeros shape(16 16)
%acc = dot %x %x %z
"""


def test_dot_operand_flows_to_allocation():
    src = STAGED_DOT.replace("%acc = dot %x %x %z", "%y = zeros shape(16 16)\n%acc = dot %x %y %z")
    _p, back, _fwd = facts_of(src)
    assert back.facts["@s"].kind == "Known"
    assert back.facts["@s"].encoding == "mma_a"
    assert back.facts["prologue:%t"].encoding == "mma_a"


def test_transpose_flips_backward():
    src = HEADER + """\
param c tensor(4 8)
%x = zeros shape(8 4)
%xt = trans %x
require_layout %xt row_major required
store @c 0 0 %xt
"""
    _p, back, _fwd = facts_of(src)
    assert back.facts["prologue:%x"].encoding == "col_major"


def test_two_loads_conflict_with_both_provenances():
    src = HEADER + """\
buffer s shape(16 16) f32 stages(1) storage(smem)
%v = local_view @s 0
%x = local_load %v
%y = local_load %v
%z = zeros shape(16 16)
%b = zeros shape(16 16)
%acc = dot %x %b %z
require_layout %y row_major user
"""
    _p, back, _fwd = facts_of(src)
    fact = back.facts["@s"]
    assert fact.kind == "Conflict"
    assert fact.encodings == {"mma_a", "row_major"}
    assert len(fact.provenance) == 2


# forward ----------------------------------------------------------------------


def test_view_is_transparent_forward():
    src = HEADER + """\
buffer s shape(8) f32 stages(3) storage(smem) layout(swizzle128)
%v = local_view @s 2
"""
    _p, _back, fwd = facts_of(src)
    assert fwd.facts["prologue:%v"].encoding == "swizzle128"


def test_transpose_flips_forward():
    src = HEADER + """\
%x = zeros shape(8 4)
require_layout %x row_major user
%xt = trans %x
"""
    _p, back, fwd = facts_of(src)
    assert back.facts["prologue:%xt"].kind == "Any"
    assert fwd.facts["prologue:%xt"].encoding == "col_major"


def test_fact_equal_across_region_boundary():
    _p, _back, fwd = facts_of(gemm_pipeline())
    for buf, role in (("a_smem", "mma_a"), ("b_smem", "mma_b")):
        v = "va" if buf == "a_smem" else "vb"
        producer = fwd.facts[f"default:%{v}"]
        consumer = fwd.facts[f"task1:%{v}"]
        assert producer == consumer
        assert consumer.encodings >= {role}


def test_release_layout_truncates():
    src = HEADER + """\
%x = zeros shape(4 4)
%y = release_layout %x
%b = zeros shape(4 4)
%z = zeros shape(4 4)
%acc = dot %y %b %z
"""
    _p, back, fwd = facts_of(src)
    assert back.facts["prologue:%y"].encoding == "mma_a"
    assert fwd.facts["prologue:%x"].kind == "Any"


# resolution ---------------------------------------------------------------------


def test_required_beats_default_without_conversion():
    r = run_layout(parse_kernel(gemm_pipeline()))
    assert r.conversions == []
    assert r.program.buffers["a_smem"].encoding == "mma_a"
    assert r.program.buffers["b_smem"].encoding == "mma_b"


def test_required_beats_user_with_one_conversion():
    src = HEADER + """\
param a tensor(16 16)
param d tensor(16 16)
%ta = load @a 0 0 shape(16 16)
require_layout %ta row_major user
%e = exp %ta
store @d 0 0 %e
%b = zeros shape(16 16)
%z = zeros shape(16 16)
%acc = dot %ta %b %z
"""
    r = run_layout(parse_kernel(src))
    assert r.conversions == ["prologue:1"]
    ops = [(i.op, i.result) for i in r.program.prologue]
    k = ops.index(("layout_convert", "ta_cvt0"))
    assert ops[k + 1][0] == "require_layout"
    exp = next(i for i in r.program.prologue if i.op == "exp")
    assert exp.args[0].name == "ta_cvt0"
    assert r.encodings["prologue:%ta"] == "mma_a"


def test_alias_group_required_conflict():
    src = HEADER + """\
buffer lhs shape(16 16) f32 stages(1) storage(smem)
buffer rhs shape(16 16) f32 stages(1) storage(smem)
local_alias @lhs @rhs
%vl = local_view @lhs 0
%vr = local_view @rhs 0
%x = local_load %vl
%y = local_load %vr
%z = zeros shape(16 16)
%acc = dot %x %y %z
"""
    with pytest.raises(LayoutError) as exc:
        run_layout(parse_kernel(src))
    (diag,) = exc.value.diagnostics
    assert diag.code == "L002"
    text = diag.render()
    assert "mma_a (required) on prologue:%x" in text
    assert "mma_b (required) on prologue:%y" in text


def test_required_tie_on_one_value():
    with pytest.raises(LayoutError) as exc:
        run_layout(parse_kernel(STAGED_DOT))
    assert [d.code for d in exc.value.diagnostics] == ["L001"]
    assert exc.value.diagnostics[0].render().startswith("error[L001]: conflicting layout requirements")


def test_user_tie_and_default_tie():
    user = HEADER + "%x = zeros shape(4 4)\nrequire_layout %x row_major user\nrequire_layout %x swizzle64 user\n"
    with pytest.raises(LayoutError) as exc:
        run_layout(parse_kernel(user))
    assert [d.code for d in exc.value.diagnostics] == ["L003"]


def test_defeated_user_on_buffer_warns():
    src = HEADER + """\
buffer s shape(16 16) f32 stages(1) storage(smem) layout(row_major)
%v = local_view @s 0
%x = local_load %v
%b = zeros shape(16 16)
%z = zeros shape(16 16)
%acc = dot %x %b %z
"""
    r = run_layout(parse_kernel(src))
    assert r.program.buffers["s"].encoding == "mma_a"
    assert [w.code for w in r.warnings] == ["W001"]
    assert r.conversions == []


def test_unconstrained_program_unchanged():
    src = HEADER + "param y tensor(4)\n%t = full 1.0 shape(4)\nstore @y 0 %t\n"
    p = parse_kernel(src)
    r = run_layout(p)
    assert print_ir(r.program) == print_ir(p)
    assert set(r.encodings.values()) <= {"row_major"}


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_pipeline_idempotent(name):
    once = run_layout(parse_kernel(CORPUS[name]()))
    twice = run_layout(once.program)
    assert twice.program == once.program
    assert print_ir(twice.program) == print_ir(once.program)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_dot_operands_sound(name):
    r = run_layout(parse_kernel(CORPUS[name]()))
    for site, role, expected, actual in dot_operand_encodings(r):
        assert actual == expected, (site, role)


# monotonicity and confluence over generated programs ------------------------------


@st.composite
def layout_programs(draw):
    """Small straight-line programs (<= 12 values) mixing staging, transposes,
    requirements and dots."""
    lines = [HEADER.strip(), "buffer s0 shape(8 8) f32 stages(1) storage(smem)",
             "buffer s1 shape(8 8) f32 stages(1) storage(smem)"]
    if draw(st.booleans()):
        lines.append(f"buffer s2 shape(8 8) f32 stages(1) storage(smem) layout({draw(st.sampled_from(ENCODINGS))})")
    else:
        lines.append("buffer s2 shape(8 8) f32 stages(1) storage(smem)")
    if draw(st.booleans()):
        lines.append("local_alias @s0 @s1")
    lines += ["%v0 = local_view @s0 0", "%v1 = local_view @s1 0", "%v2 = local_view @s2 0"]
    tiles = []
    for i in range(draw(st.integers(1, 6))):
        kind = draw(st.integers(0, 5))
        if kind == 0 or not tiles:
            lines.append(f"%t{i} = zeros shape(8 8)")
        elif kind == 1:
            lines.append(f"%t{i} = trans {draw(st.sampled_from(tiles))}")
        elif kind == 2:
            lines.append(f"%t{i} = local_load %v{draw(st.integers(0, 2))}")
        elif kind == 3:
            lines.append(f"local_store %v{draw(st.integers(0, 2))} {draw(st.sampled_from(tiles))}")
            continue
        elif kind == 4:
            enc = draw(st.sampled_from(ENCODINGS))
            prio = draw(st.sampled_from(["user", "default", "required"]))
            lines.append(f"require_layout {draw(st.sampled_from(tiles))} {enc} {prio}")
            continue
        else:
            a, b = draw(st.sampled_from(tiles)), draw(st.sampled_from(tiles))
            lines.append(f"%t{i} = dot {a} {b} {draw(st.sampled_from(tiles))}")
        tiles.append(f"%t{i}")
    return parse_kernel("\n".join(lines) + "\n")


def _outcome(p, order):
    back = propagate_backward(p, order)
    fwd = propagate_forward(p, back, order)
    try:
        r = resolve(p, fwd)
        res = ("ok", print_ir(r.program), tuple(sorted(r.encodings.items())), tuple(r.conversions))
    except LayoutError as e:
        res = ("error", tuple(d.render() for d in e.diagnostics))
    return back.facts, fwd.facts, res


@settings(max_examples=60, deadline=None)
@given(layout_programs())
def test_propagation_monotone_and_bounded(p):
    p = insert_constraints(p)
    g = build_graph(p)
    for result in (propagate_backward(p),):
        heights: dict[str, int] = {}
        seen: dict[str, frozenset] = {}
        for node, fact in result.history:
            assert fact.height() >= heights.get(node, 0)
            assert fact.provenance >= seen.get(node, frozenset())
            heights[node] = fact.height()
            seen[node] = fact.provenance
        # provenance sets only grow, one item at a time at worst
        assert result.iterations <= len(g.nodes) * (len(g.constraints) + 1)


@settings(max_examples=40, deadline=None)
@given(layout_programs(), st.randoms(use_true_random=False))
def test_confluence_against_exhaustive_orders(p, rnd):
    p = insert_constraints(p)
    n_edges = len(build_graph(p).edges)
    if n_edges <= 6:
        orders = list(itertools.permutations(range(n_edges)))
    else:
        orders = []
        for _ in range(120):
            perm = list(range(n_edges))
            rnd.shuffle(perm)
            orders.append(perm)
    ref = _outcome(p, None)
    for order in orders:
        assert _outcome(p, order) == ref


def test_confluence_exhaustive_on_pipeline_kernel():
    p = insert_constraints(parse_kernel(gemm_pipeline()))
    n = len(build_graph(p).edges)
    ref = _outcome(p, None)
    rnd = random.Random(0)
    for _ in range(50):
        order = list(range(n))
        rnd.shuffle(order)
        assert _outcome(p, order) == ref
