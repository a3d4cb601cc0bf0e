"""Mbarrier state machine and the cluster legality pass.

The barrier model is a pure function of (state, event): every transition
returns a new :class:`MbarrierState`. The simulator owns the instances.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace

from .errors import Diagnostic, LegalityError
from .ir.nodes import Instr, KernelProgram, walk, walk_program
from .ir.validate import validate


class BarrierFault(Exception):
    """Illegal barrier transition (arrive on uninitialized barrier, overflow)."""


@dataclass(frozen=True)
class MbarrierState:
    arrive_count: int = 1
    pending: int = 1
    phase: int = 0
    tx_bytes: int = 0
    init_done: bool = False
    flips: int = 0

    @classmethod
    def initialized(cls, arrive_count: int) -> "MbarrierState":
        return cls(arrive_count=arrive_count, pending=arrive_count, init_done=True)

    def _settle(self) -> "MbarrierState":
        if self.pending == 0 and self.tx_bytes == 0:
            return replace(self, phase=self.phase ^ 1, pending=self.arrive_count, flips=self.flips + 1)
        return self

    def arrive(self, n: int = 1) -> "MbarrierState":
        if not self.init_done:
            raise BarrierFault("arrive on uninitialized barrier")
        if n < 1 or n > self.pending:
            raise BarrierFault(f"arrive overflow: {n} arrivals with {self.pending} pending")
        return replace(self, pending=self.pending - n)._settle()

    def expect_bytes(self, nbytes: int) -> "MbarrierState":
        if not self.init_done:
            raise BarrierFault("expect_bytes on uninitialized barrier")
        if nbytes == 0:
            return self
        # a completion that raced ahead of its expect leaves tx negative; the
        # matching expect brings it back to zero and may complete the phase
        return replace(self, tx_bytes=self.tx_bytes + nbytes)._settle()

    def complete_tx(self, nbytes: int) -> "MbarrierState":
        if not self.init_done:
            raise BarrierFault("transaction completion on uninitialized barrier")
        return replace(self, tx_bytes=self.tx_bytes - nbytes)._settle()

    def wait_satisfied(self, parity: int) -> bool:
        return self.init_done and self.phase != (parity & 1)


# legality pass -------------------------------------------------------------


def _is_remote_capable(ins: Instr, types, scope: str) -> bool:
    def ty(name):
        return types.get((scope, name)) or types.get(("prologue", name))

    if ins.op == "barrier_arrive" and "rank" in ins.attrs:
        return True
    if ins.op == "async_remote_store":
        return True
    if ins.op == "async_copy" and "multicast" in ins.attrs:
        return True
    if ins.op in ("local_store", "barrier_arrive") and ins.args:
        t = ty(getattr(ins.args[0], "name", ""))
        return t is not None and t.remote
    return False


def remote_wait_sites(p: KernelProgram) -> list[Diagnostic]:
    types = validate(p).types
    out = []
    for scope, site, ins in walk_program(p):
        if ins.op != "barrier_wait" or not ins.args:
            continue
        name = getattr(ins.args[0], "name", "")
        t = types.get((scope, name)) or types.get(("prologue", name))
        if t is not None and t.kind == "bar" and t.remote:
            where = site if ins.line is None else f"{site} (line {ins.line})"
            out.append(
                Diagnostic(
                    "C001",
                    "wait on remote mbarrier",
                    where,
                    notes=(f"%{name} is a remote view; arrive remotely and wait on the local instance",),
                )
            )
    return out


def needs_cluster_barrier(p: KernelProgram) -> bool:
    """True when a remote arrive could reach a peer before the peer initialized its barriers."""
    if p.cluster_size == 1:
        return False
    types = validate(p).types
    first_remote: int | None = None  # top-level prologue index, or len(prologue) for tasks
    for i, ins in enumerate(p.prologue):
        if any(_is_remote_capable(sub, types, "prologue") for _s, sub in walk([ins], "")):
            first_remote = i
            break
    if first_remote is None:
        for idx in range(len(p.tasks)):
            scope = p.task_scope(idx)
            if any(_is_remote_capable(ins, types, scope) for _s, ins in walk(p.tasks[idx].body, "")):
                first_remote = len(p.prologue)
                break
    if first_remote is None:
        return False
    # only an unconditional top-level barrier ahead of the first remote op covers every path
    guarded = any(ins.op == "cluster_barrier" for ins in p.prologue[:first_remote])
    return not guarded


def legalize_cluster(p: KernelProgram) -> KernelProgram:
    """Reject waits on remote barriers; insert a cluster-wide barrier after
    barrier initialization when some instruction can arrive remotely.

    Barriers are initialized when a CTA starts, so the inserted barrier is the
    first prologue instruction. Raises :class:`LegalityError` with C001.
    """
    diags = remote_wait_sites(p)
    if diags:
        raise LegalityError(diags)
    if not needs_cluster_barrier(p):
        return p
    out = copy.deepcopy(p)
    out.prologue.insert(0, Instr("cluster_barrier"))
    return out


def strip_cluster_barriers(p: KernelProgram) -> KernelProgram:
    """Copy of ``p`` without top-level prologue cluster barriers (adversarial tests)."""
    out = copy.deepcopy(p)
    out.prologue = [ins for ins in out.prologue if ins.op != "cluster_barrier"]
    return out
