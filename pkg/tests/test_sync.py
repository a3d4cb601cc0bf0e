from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimw.errors import LegalityError, SimFault
from mimw.ir import parse_kernel, print_ir
from mimw.kernels.sources import CORPUS, flag_exchange
from mimw.pipeline import compile_program
from mimw.sim import SimConfig, fuzzed_config, simulate
from mimw.sync import BarrierFault, MbarrierState, legalize_cluster, needs_cluster_barrier, strip_cluster_barriers


def test_single_arrival_flips():
    b = MbarrierState.initialized(1).arrive()
    assert (b.phase, b.pending, b.flips) == (1, 1, 1)


def test_two_arrivals_one_flip():
    b = MbarrierState.initialized(2).arrive()
    assert b.phase == 0 and b.pending == 1
    b = b.arrive()
    assert b.flips == 1 and b.phase == 1 and b.pending == 2


def test_arrive_overflow_and_uninitialized():
    with pytest.raises(BarrierFault, match="overflow"):
        MbarrierState.initialized(1).arrive(2)
    with pytest.raises(BarrierFault, match="uninitialized"):
        MbarrierState().arrive()


def test_expect_then_completion_flips():
    b = MbarrierState.initialized(1).expect_bytes(16).arrive()
    assert b.flips == 0
    b = b.complete_tx(16)
    assert b.flips == 1 and b.tx_bytes == 0


def test_partial_completion_does_not_flip():
    b = MbarrierState.initialized(1).expect_bytes(32).arrive().complete_tx(16)
    assert b.flips == 0 and b.tx_bytes == 16


def test_expect_zero_is_noop():
    b = MbarrierState.initialized(1)
    assert b.expect_bytes(0) == b


def test_wait_parity():
    b = MbarrierState.initialized(1)
    assert not b.wait_satisfied(0)
    assert b.wait_satisfied(1)  # fresh barriers are acquirable with parity 1
    b = b.arrive()
    assert b.wait_satisfied(0)


_events = st.lists(
    st.one_of(
        st.tuples(st.just("arrive"), st.integers(1, 3)),
        st.tuples(st.just("expect"), st.sampled_from([0, 16, 32])),
        st.tuples(st.just("complete"), st.sampled_from([16, 32])),
    ),
    max_size=40,
)


@settings(max_examples=200)
@given(st.integers(1, 4), _events)
def test_phase_monotone_and_no_lost_wakeup(arrive_count, events):
    b = MbarrierState.initialized(arrive_count)
    arrivals = 0
    tx_in = tx_out = 0
    for kind, n in events:
        before = b
        try:
            if kind == "arrive":
                b = b.arrive(n)
                arrivals += n
            elif kind == "expect":
                b = b.expect_bytes(n)
                tx_in += n
            else:
                b = b.complete_tx(n)
                tx_out += n
        except BarrierFault:
            continue
        assert b.flips in (before.flips, before.flips + 1)
        assert 0 <= b.pending <= b.arrive_count
        if b.flips == before.flips + 1:
            # a waiter parked on the old phase is released by this flip
            assert not before.wait_satisfied(before.phase)
            assert b.wait_satisfied(before.phase)
            assert b.phase != before.phase
        assert b.phase == b.flips % 2
    # flips never exceed completed arrival groups
    assert b.flips <= arrivals // arrive_count


# remote arrive through the simulator ---------------------------------------------

REMOTE = """\
kernel remote grid(4 1 1) cluster(4 1 1) warps(4)
param out tensor(4)
barrier bar count(1) arrive(1)
%rank = cta_rank
cluster_barrier
%b = local_view @bar 0
%lead = eq %rank 0
if %lead {
  barrier_arrive %b rank(2)
}
%one = full 1.0 shape(1)
store @out %rank %one
"""


def test_remote_arrive_hits_only_target():
    res = simulate(compile_program(REMOTE).resolved, {}, SimConfig())
    flips = res.summary["barrier_flips"]
    assert flips["2/bar[0]"] == 1
    assert flips["0/bar[0]"] == 0


def test_wait_without_arrivals_deadlocks():
    src = "kernel w grid(1 1 1) cluster(1 1 1) warps(4)\nbarrier bar count(1) arrive(1)\n%b = local_view @bar 0\nbarrier_wait %b 0\n"
    with pytest.raises(SimFault) as exc:
        simulate(compile_program(src).resolved)
    assert exc.value.kind == "Deadlock"
    (blocked,) = exc.value.details["blocked"]
    assert blocked["task"] == "prologue"


# legality -----------------------------------------------------------------------


def test_remote_wait_rejected():
    src = REMOTE.replace("barrier_arrive %b rank(2)", "%r = remote_view %b 2\n  barrier_wait %r 0")
    with pytest.raises(LegalityError) as exc:
        legalize_cluster(parse_kernel(src))
    (d,) = exc.value.diagnostics
    assert d.code == "C001"
    assert d.message == "wait on remote mbarrier"
    assert "line" in d.site


def test_cluster_barrier_inserted():
    p = parse_kernel(flag_exchange(with_sync=False))
    assert needs_cluster_barrier(p)
    q = legalize_cluster(p)
    assert q.prologue[0].op == "cluster_barrier"
    assert "\ncluster_barrier\n" in print_ir(q)
    assert not needs_cluster_barrier(q)
    assert legalize_cluster(q) == q


def test_explicit_barrier_is_respected():
    p = parse_kernel(flag_exchange(with_sync=True))
    assert legalize_cluster(p) is p


@pytest.mark.parametrize("name", ["gemm_pipeline", "listing1", "simplicial_attention"])
def test_single_cta_cluster_is_identity(name):
    p = parse_kernel(CORPUS[name]())
    assert p.cluster_size == 1
    assert legalize_cluster(p) is p


def _uninit_reports(prog, seeds, **overrides):
    n = 0
    for seed in seeds:
        try:
            res = simulate(prog, {}, fuzzed_config(seed, **overrides))
            races = res.races
        except SimFault as e:
            races = e.summary.get("races", [])
        n += sum(1 for r in races if r["kind"] == "uninit")
    return n


def test_legalized_program_never_arrives_early():
    res = compile_program(flag_exchange(ctas=4, with_sync=False))
    assert _uninit_reports(res.resolved, range(60), remote_arrive_delay=0) == 0


def test_stripped_program_arrives_early():
    res = compile_program(flag_exchange(with_sync=False))
    bad = strip_cluster_barriers(res.program)
    assert _uninit_reports(bad, range(60), remote_arrive_delay=0, launch_skew=16) >= 1
