from __future__ import annotations

import copy

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mimw.errors import SimFault
from mimw.ir import parse_kernel, validate
from mimw.kernels import make_inputs, oracle_gemm
from mimw.kernels.sources import collective_gemm, gemm_pipeline, listing1, multicast
from mimw.sim import SimConfig, dot_f32, fuzzed_config, reduce_sum_f32, relative_error, simulate

from conftest import compiled
from strategies import programs

HEADER = "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\n"


def test_config_rejects_negative_latency():
    with pytest.raises(ValueError):
        SimConfig(async_copy_latency=-1)
    with pytest.raises(ValueError):
        SimConfig(scheduler="fifo")


def test_listing1_full_block():
    prog = compiled(listing1(block=256, tiles=1, ctas=2, cluster=2))
    x = np.arange(1, 257, dtype=np.float32)
    res = simulate(prog, {"x": x})
    owner = {t: int(cta) for cta, tiles in res.summary["clc_dispatch"].items() for t in tiles}
    assert owner == {0: owner[0]}
    np.testing.assert_array_equal(res.outputs["y"], 2 * x + owner[0])


def test_deadlock_names_every_blocked_task():
    src = HEADER + """\
barrier a count(1) arrive(1)
barrier b count(1) arrive(1)
%va = local_view @a 0
%vb = local_view @b 0
task default {
  barrier_wait %va 0
}
task warps(1) {
  barrier_wait %vb 0
}
"""
    with pytest.raises(SimFault) as exc:
        simulate(compiled(src))
    assert exc.value.kind == "Deadlock"
    assert sorted(b["task"] for b in exc.value.details["blocked"]) == ["default", "task1"]
    assert all("barrier_wait" in b["blocked_on"] for b in exc.value.details["blocked"])


def test_same_seed_same_trace_bytes():
    prog = compiled(gemm_pipeline())
    inputs = make_inputs(prog.program, 3)
    a = simulate(prog, inputs, fuzzed_config(11))
    b = simulate(prog, inputs, fuzzed_config(11))
    assert a.trace_text() == b.trace_text()
    c = simulate(prog, inputs, fuzzed_config(12))
    assert c.trace_text() != a.trace_text()
    np.testing.assert_array_equal(a.outputs["c"], c.outputs["c"])


def test_trace_ends_with_summary():
    res = simulate(compiled(listing1()), make_inputs(parse_kernel(listing1()), 0))
    last = res.trace_text().splitlines()[-1]
    assert last.startswith('{"summary":')
    first = res.trace_text().splitlines()[0]
    assert first.startswith('{"step":0,"cluster":0,"cta":0,"task":')


@pytest.mark.parametrize("k", [1, 2, 4])
def test_multicast_reads_global_once(k):
    prog = compiled(multicast(k))
    x = np.linspace(-1, 1, 64, dtype=np.float32)
    res = simulate(prog, {"x": x})
    np.testing.assert_array_equal(res.outputs["out"], np.tile(x, (k, 1)))
    assert res.load_counts["x"].tolist() == [1] * 64


def test_zero_latency_copy_completes_same_step():
    src = HEADER + """\
param x tensor(8)
param y tensor(8)
buffer s shape(8) f32 stages(1) storage(smem)
barrier f count(1) arrive(1)
%v = local_view @s 0
%b = local_view @f 0
barrier_expect_bytes %b 32
async_copy @x 0 %v %b
barrier_arrive %b
barrier_wait %b 0
%t = local_load %v
store @y 0 %t
"""
    x = np.arange(8, dtype=np.float32)
    res = simulate(compiled(src), {"x": x}, SimConfig(async_copy_latency=0))
    np.testing.assert_array_equal(res.outputs["y"], x)
    done = [e["step"] for e in res.trace if e["event"] in ("copy_done", "async_copy")]
    assert len(set(done)) == 1


EXCHANGE = """\
kernel ex grid(2 1 1) cluster(2 1 1) warps(4)
param x tensor(2 4)
param y tensor(2 4)
buffer s shape(1 4) f32 stages(1) storage(smem_cluster)
barrier got count(1) arrive(1)
%rank = cta_rank
%peer = xor %rank {peer}
%t = load @x %rank 0 shape(1 4)
%v = local_view @s 0
%b = local_view @got 0
%rv = remote_view %v %peer
%rb = remote_view %b %peer
async_remote_store %rv %t %rb
barrier_wait %b 0
%got = local_load %v
store @y %rank 0 %got
"""


def test_remote_store_then_local_wait():
    prog = compiled(EXCHANGE.format(peer=1))
    x = np.arange(8, dtype=np.float32).reshape(2, 4)
    res = simulate(prog, {"x": x})
    np.testing.assert_array_equal(res.outputs["y"], x[::-1])
    assert res.races == []


def test_remote_store_to_own_rank_is_local():
    prog = compiled(EXCHANGE.format(peer=0))
    x = np.arange(8, dtype=np.float32).reshape(2, 4)
    res = simulate(prog, {"x": x}, SimConfig(remote_arrive_delay=5))
    np.testing.assert_array_equal(res.outputs["y"], x)


def test_remote_view_of_own_rank_matches_local_view():
    src = """\
kernel k grid(2 1 1) cluster(2 1 1) warps(4)
param y tensor(2 4)
buffer s shape(1 4) f32 stages(1) storage(smem_cluster)
%rank = cta_rank
%v = local_view @s 0
%rv = remote_view %v %rank
%t = full 3.0 shape(1 4)
local_store %rv %t
%u = local_load %v
store @y %rank 0 %u
"""
    res = simulate(compiled(src))
    assert res.outputs["y"].tolist() == [[3.0] * 4] * 2


def test_collective_pair_matches_full_matmul(rng):
    prog = compiled(collective_gemm())
    a = rng.uniform(-1, 1, (64, 32)).astype(np.float32)
    b = rng.uniform(-1, 1, (32, 32)).astype(np.float32)
    res = simulate(prog, {"a": a, "b": b})
    assert relative_error(res.outputs["c"], oracle_gemm(a, b)) <= 1e-4


def test_one_sided_collective_names_absent_rank():
    prog = compiled(collective_gemm(one_sided=True))
    with pytest.raises(SimFault) as exc:
        simulate(prog)
    assert exc.value.kind == "CollectiveMismatch"
    assert "[1]" in exc.value.message


def test_self_collective_equals_async_dot(rng):
    body = """\
param a tensor(8 8)
param b tensor(8 8)
param c tensor(8 8)
%ta = load @a 0 0 shape(8 8)
%tb = load @b 0 0 shape(8 8)
%z = zeros shape(8 8)
%f = {op}
%r = async_dot_wait 0 %f
store @c 0 0 %r
"""
    a = rng.uniform(-1, 1, (8, 8)).astype(np.float32)
    b = rng.uniform(-1, 1, (8, 8)).astype(np.float32)
    one = simulate(compiled(HEADER + body.format(op="collective_dot %ta %tb %z ranks(0)")), {"a": a, "b": b})
    two = simulate(compiled(HEADER + body.format(op="async_dot %ta %tb %z")), {"a": a, "b": b})
    np.testing.assert_array_equal(one.outputs["c"], two.outputs["c"])


def test_identity_dot():
    m = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    np.testing.assert_array_equal(dot_f32(np.eye(2, dtype=np.float32), m, np.zeros((2, 2), np.float32)), m)


def test_wait_one_of_three_dots():
    src = HEADER + """\
param c tensor(2 2)
%a = full 1.0 shape(2 2)
%b = full 2.0 shape(2 2)
%z = zeros shape(2 2)
%f1 = async_dot %a %b %z
%f2 = async_dot %a %b %z
%f3 = async_dot %a %b %z
%r = async_dot_wait 1 %f2
store @c 0 0 %r
"""
    res = simulate(compiled(src), None, SimConfig(mma_latency=3))
    done = {e["detail"]["id"]: e["step"] for e in res.trace if e["event"] == "mma_done"}
    store = next(e["step"] for e in res.trace if e["event"] == "store")
    assert done[0] < done[1] <= store < done[2]
    assert res.outputs["c"].tolist() == [[4.0, 4.0], [4.0, 4.0]]


def test_wait_zero_without_dots_is_immediate():
    src = HEADER + "%z = zeros shape(2 2)\n%r = async_dot_wait 0 %z\n"
    res = simulate(compiled(src))
    assert res.summary["steps"] <= 3


def test_staged_k_loop_matches_one_shot(rng):
    prog = compiled(gemm_pipeline())
    inputs = make_inputs(prog.program, 5)
    res = simulate(prog, inputs)
    assert relative_error(res.outputs["c"], inputs["a"].astype(np.float64) @ inputs["b"]) <= 1e-4


def test_dot_and_sum_order_is_ascending():
    a = np.array([[1e8, 1.0, -1e8]], dtype=np.float32)
    b = np.ones((3, 1), dtype=np.float32)
    # ((0 + 1e8) + 1) - 1e8 == 0 in float32
    assert dot_f32(a, b, np.zeros((1, 1), np.float32))[0, 0] == 0.0
    assert reduce_sum_f32(a, 1)[0, 0] == 0.0


def test_relative_error_definition():
    assert relative_error([1.0, 2.0], [1.0, 4.0]) == pytest.approx(0.5)
    assert relative_error([0.5], [0.0]) == pytest.approx(0.5)


def _drop_first_wait(p, pred):
    q = copy.deepcopy(p)
    for region in [q.prologue] + [t.body for t in q.tasks]:
        stack = [region]
        while stack:
            block = stack.pop()
            for i, ins in enumerate(block):
                if ins.op == "barrier_wait" and pred(ins):
                    del block[i]
                    return q
                stack.extend(ins.blocks())
    raise AssertionError("no barrier_wait matched")


def test_listing1_race_free_under_fuzz():
    prog = compiled(listing1(cluster=2))
    inputs = make_inputs(prog.program, 0)
    for seed in range(30):
        assert simulate(prog, inputs, fuzzed_config(seed)).races == []


def test_listing1_without_empty_wait_races_on_smem():
    p = parse_kernel(listing1())
    bad = compiled(_drop_first_wait(p, lambda ins: ins.args[0].name == "empty0"))
    inputs = make_inputs(bad.program, 0)
    races = []
    for seed in range(20):
        races += simulate(bad, inputs, fuzzed_config(seed)).races
    assert races
    assert {(r["buffer"], r["stage"]) for r in races} == {("smem", 0)}
    assert {r["kind"] for r in races} <= {"W/W", "R/W"}


def test_single_stream_kernel_has_no_races():
    src = HEADER + """\
param y tensor(4)
buffer s shape(4) f32 stages(1) storage(smem)
%v = local_view @s 0
%t = full 1.0 shape(4)
local_store %v %t
%u = local_load %v
local_store %v %u
store @y 0 %u
"""
    assert simulate(compiled(src)).races == []


def test_strict_mode_halts_on_race():
    p = parse_kernel(listing1())
    bad = compiled(_drop_first_wait(p, lambda ins: ins.args[0].name == "empty0"))
    inputs = make_inputs(bad.program, 0)
    halted = 0
    for seed in range(20):
        try:
            simulate(bad, inputs, fuzzed_config(seed, strict=True))
        except SimFault as e:
            assert e.kind == "RaceDetected"
            halted += 1
    assert halted


def test_bank_conflict_counter_depends_on_layout():
    body = """\
param y tensor(4 32)
buffer s shape(4 32) f32 stages(1) storage(smem){enc}
%v = local_view @s 0
%t = full 1.0 shape(4 32)
local_store %v %t
%u = local_load %v
store @y 0 0 %u
"""
    plain = simulate(compiled(HEADER + body.format(enc="")))
    swz = simulate(compiled(HEADER + body.format(enc=" layout(swizzle128)")))
    assert plain.summary["bank_conflicts"] == 2
    assert swz.summary["bank_conflicts"] == 0


def test_capacity_fault():
    src = HEADER + "buffer s shape(1024) f32 stages(4) storage(smem)\n"
    with pytest.raises(SimFault) as exc:
        simulate(compiled(src), None, SimConfig(shared_capacity_bytes=8192))
    assert exc.value.kind == "CapacityExceeded"


def test_inputs_must_match_params():
    prog = compiled(listing1())
    with pytest.raises(ValueError):
        simulate(prog, {"nope": np.zeros(3)})
    with pytest.raises(ValueError):
        simulate(prog, {"x": np.zeros(3)})


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(programs(), st.integers(0, 1000))
def test_validated_programs_never_malformed(p, seed):
    if not validate(p).ok:
        return
    from mimw.pipeline import compile_program

    res = compile_program(p)
    if not res.ok:
        return
    try:
        simulate(res.resolved, None, fuzzed_config(seed))
    except SimFault as e:
        assert e.kind != "Malformed", str(e)
