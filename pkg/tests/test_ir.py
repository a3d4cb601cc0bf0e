from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimw.errors import ParseError
from mimw.ir import (
    KernelProgram,
    expand_tasks,
    parse_kernel,
    print_ir,
    validate,
    warp_assignment,
)
from mimw.kernels.sources import CORPUS, listing1

from strategies import programs

HEADER = "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\n"


def codes(src: str) -> list[str]:
    return [d.code for d in validate(parse_kernel(src)).errors]


# parsing / printing ---------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_round_trip_corpus(name):
    p = parse_kernel(CORPUS[name]())
    text = print_ir(p)
    q = parse_kernel(text)
    assert q == p
    assert print_ir(q) == text


def test_listing1_canonical_text_is_fixed_point():
    src = listing1()
    assert print_ir(parse_kernel(src)) == src


def test_print_is_deterministic():
    p = parse_kernel(CORPUS["simplicial_attention"]())
    assert print_ir(p, "parse") == print_ir(p, "parse")


def test_stage_header():
    p = parse_kernel(HEADER + "%x = const 1\n")
    assert print_ir(p, "resolve").startswith("# stage: resolve\nkernel k")
    assert print_ir(p, "parse").splitlines()[1:] == print_ir(p, "resolve").splitlines()[1:]


def test_undeclared_barrier_parses_then_fails_validation():
    src = HEADER + "%b = local_view @full2 0\nbarrier_wait %b 0\n"
    p = parse_kernel(src)
    assert "V002" in [d.code for d in validate(p).errors]


def test_prologue_only_program_is_valid():
    p = parse_kernel(HEADER + "param y tensor(4)\n%t = full 3.0 shape(4)\nstore @y 0 %t\n")
    assert p.tasks == []
    assert validate(p).ok


@pytest.mark.parametrize(
    "src",
    [
        "kernel k grid(1 1) cluster(1 1 1) warps(4)\n",
        "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\n%x = \n",
        "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\ntask default {\n%x = const 1\n",
        "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\nbuffer b shape(4) f32 stages(1) storage(smem\n",
    ],
)
def test_parse_errors_carry_location(src):
    with pytest.raises(ParseError) as exc:
        parse_kernel(src)
    assert exc.value.line >= 1
    assert exc.value.col >= 1
    assert exc.value.expected


# validation -----------------------------------------------------------------


def test_listing1_is_valid():
    assert validate(parse_kernel(listing1())).ok


def test_warp_budget_exceeded():
    src = HEADER + "task warps(4) {\n}\ntask warps(4) {\n}\n"
    rep = validate(parse_kernel(src))
    assert [d.code for d in rep.errors] == ["V001"]
    assert "warp budget exceeded" in rep.errors[0].message


def test_default_region_needs_a_warp():
    src = HEADER + "task warps(4) {\n}\ntask default {\n}\n"
    assert codes(src) == ["V001"]


def test_replicas_count_against_budget():
    src = HEADER + "task warps(2) replicate(3) {\n}\n"
    assert codes(src) == ["V001"]


def test_dot_inner_dims_must_agree():
    src = HEADER + "%a = zeros shape(64 32)\n%b = zeros shape(16 64)\n%c = zeros shape(64 64)\n%d = dot %a %b %c\n"
    assert codes(src) == ["V004"]


def test_broadcast_mismatch():
    src = HEADER + "%a = zeros shape(4 8)\n%b = zeros shape(4 3)\n%c = add %a %b\n"
    assert codes(src) == ["V004"]


def test_register_use_before_definition():
    assert codes(HEADER + "%y = add %x 1\n") == ["V003"]


def test_cluster_must_divide_grid():
    src = "kernel k grid(3 1 1) cluster(2 1 1) warps(4)\n"
    assert codes(src) == ["V006"]


def test_capacity():
    src = HEADER + "buffer big shape(256 256) f32 stages(1) storage(smem)\n"
    assert codes(src) == ["V007"]


def test_aliased_buffers_share_capacity():
    body = (
        "buffer a shape(200 200) f32 stages(1) storage(smem)\n"
        "buffer b shape(200 200) f32 stages(1) storage(smem)\n"
    )
    assert codes(HEADER + body) == ["V007"]
    assert codes(HEADER + body + "local_alias @a @b\n") == []


def test_remote_view_of_private_smem():
    src = (
        "kernel k grid(2 1 1) cluster(2 1 1) warps(4)\n"
        "buffer b shape(4) f32 stages(1) storage(smem)\n"
        "%v = local_view @b 0\n%r = remote_view %v 1\n"
    )
    assert codes(src) == ["V009"]


def test_remote_rank_bounds():
    src = (
        "kernel k grid(2 1 1) cluster(2 1 1) warps(4)\n"
        "buffer b shape(4) f32 stages(1) storage(smem_cluster)\n"
        "%v = local_view @b 0\n%r = remote_view %v 2\n"
    )
    assert codes(src) == ["V008"]


def test_local_load_through_remote_view_rejected():
    src = (
        "kernel k grid(2 1 1) cluster(2 1 1) warps(4)\n"
        "buffer b shape(4) f32 stages(1) storage(smem_cluster)\n"
        "%v = local_view @b 0\n%r = remote_view %v 1\n%t = local_load %r\n"
    )
    assert codes(src) == ["V010"]


def test_stage_index_bounds():
    src = HEADER + "buffer b shape(4) f32 stages(2) storage(smem)\n%v = local_view @b 2\n"
    assert codes(src) == ["V008"]


def test_empty_multicast_set():
    src = (
        "kernel k grid(2 1 1) cluster(2 1 1) warps(4)\nparam x tensor(4)\n"
        "buffer b shape(4) f32 stages(1) storage(smem_cluster)\nbarrier f count(1) arrive(1)\n"
        "%v = local_view @b 0\n%f = local_view @f 0\nasync_copy @x 0 %v %f multicast()\n"
    )
    assert "V008" in codes(src) or "V005" in codes(src)


def test_clc_context_needs_stages():
    assert codes(HEADER + "%c = clc_create_context stages(0) consumers(1)\n") == ["V006"]


def test_clc_context_prologue_only():
    assert codes(HEADER + "task default {\n  %c = clc_create_context stages(1) consumers(1)\n}\n") == ["V011"]


def test_replica_id_only_in_tasks():
    assert codes(HEADER + "%r = replica_id\n") == ["V011"]


# task expansion and warp partition ------------------------------------------


def test_replicated_tasks_expand():
    src = "kernel k grid(1 1 1) cluster(1 1 1) warps(12)\ntask default {\n}\ntask warps(4) replicate(2) {\n  %r = replica_id\n}\n"
    p = parse_kernel(src)
    names = [(n, r) for n, _i, _t, r in expand_tasks(p)]
    assert names == [("default", 0), ("task1.0", 0), ("task1.1", 1)]


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=1, max_value=16),
    st.lists(st.tuples(st.integers(1, 4), st.integers(1, 3)), max_size=4),
    st.booleans(),
)
def test_warp_partition(num_warps, regions, with_default):
    lines = [f"kernel k grid(1 1 1) cluster(1 1 1) warps({num_warps})"]
    if with_default:
        lines += ["task default {", "}"]
    for w, rep in regions:
        lines += [f"task warps({w}) replicate({rep}) {{", "}"]
    p = parse_kernel("\n".join(lines) + "\n")
    claimed = sum(w * r for w, r in regions)
    rep_ok = validate(p).ok
    assert rep_ok == (claimed < num_warps if with_default else claimed <= num_warps)
    if rep_ok:
        ranges = warp_assignment(p)
        seen = sorted(i for r in ranges.values() for i in r)
        if with_default:
            assert seen == list(range(num_warps))
        else:
            assert seen == list(range(claimed))
        assert len(seen) == len(set(seen))


# round trip over generated programs -----------------------------------------


@settings(max_examples=80, deadline=None)
@given(programs())
def test_round_trip_property(p):
    text = print_ir(p)
    q = parse_kernel(text)
    assert q == p
    assert print_ir(q) == text
