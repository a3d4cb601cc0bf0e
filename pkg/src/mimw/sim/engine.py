"""Deterministic step scheduler and instruction interpreter.

Every CTA starts with a prologue stream that initializes the declared
barriers (one step per declaration) and runs the prologue body; when it
finishes, one stream per (replicated) task region is spawned with a copy of
the prologue registers. Each scheduler visit executes one instruction of a
runnable stream. Control flow and compile-time layout ops are free.
Asynchronous work (copies, remote arrivals and stores, CLC responses, MMA
completions) sits in a min-heap keyed by completion step.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field
from itertools import count
from typing import Any

import numpy as np

from ..clc import RESPONSE_BYTES, ClcContext, TileQueue, clc_create_context, decode_response, encode_response
from ..errors import SimFault
from ..ir.nodes import (
    BINARY_OPS,
    UNARY_OPS,
    Instr,
    KernelProgram,
    Reg,
    Sym,
    Word,
    alias_groups,
    expand_tasks,
    walk,
)
from ..sync import BarrierFault, MbarrierState
from .config import SimConfig
from .race import RaceDetector, join, join_into
from .trace import Trace, render

F32 = np.float32
FREE_OPS = ("require_layout", "release_layout", "local_alias")
BLOCKING = ("barrier_wait", "cluster_barrier", "async_dot_wait", "clc_producer", "clc_consumer")


@dataclass(frozen=True)
class ViewRef:
    cta: int
    buffer: str
    stage: int
    remote: bool = False


@dataclass(frozen=True)
class BarRef:
    cta: int
    barrier: str
    index: int
    remote: bool = False


@dataclass(frozen=True)
class CtxRef:
    cta: int
    index: int


@dataclass(eq=False)
class Future:
    fid: int
    value: Any = None
    done: bool = False


@dataclass
class SimResult:
    outputs: dict[str, np.ndarray]
    trace: list[dict]
    summary: dict
    load_counts: dict[str, np.ndarray] = field(default_factory=dict)
    store_counts: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def races(self) -> list[dict]:
        return self.summary["races"]

    def trace_text(self) -> str:
        return render(self.trace, self.summary)


@dataclass
class _Frame:
    block: list[Instr]
    idx: int = 0
    kind: str = "block"
    data: Any = None


@dataclass
class _Stream:
    order: tuple[int, int]
    cta: "_Cta"
    name: str
    replica: int
    frames: list[_Frame]
    env: dict[str, Any]
    vc: dict[str, int]
    agent: str
    done: bool = False
    steps: int = 0
    mma: deque = field(default_factory=deque)
    cb_gen: int | None = None
    coll_seq: dict[tuple, int] = field(default_factory=dict)
    is_prologue: bool = False
    not_before: int = 0  # launch step of the CTA (prologue only)


@dataclass
class _Cta:
    gid: int
    cluster: int
    rank: int
    coords: tuple[int, int, int]
    smem: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    barriers: dict[tuple[str, int], MbarrierState] = field(default_factory=dict)
    bar_vc: dict[tuple[str, int], dict] = field(default_factory=dict)
    contexts: list[ClcContext] = field(default_factory=list)
    streams: list[_Stream] = field(default_factory=list)


def _launch():
    # heap marker so the step counter reaches a delayed CTA launch
    pass


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _as_index(v, what: str) -> int:
    if _is_int(v):
        return int(v)
    if isinstance(v, (float, np.floating)) and float(v).is_integer():
        return int(v)
    raise SimFault("Malformed", f"{what} must be an integer, got {v!r}")


def _truthy(v) -> bool:
    if isinstance(v, np.ndarray):
        raise SimFault("Malformed", "branch condition must be a scalar")
    return bool(v != 0)


def dot_f32(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> np.ndarray:
    """acc + a @ b accumulated over k in ascending order, in float32."""
    out = np.array(acc, dtype=F32, copy=True)
    for k in range(a.shape[1]):
        out = out + a[:, k:k + 1].astype(F32) * b[k:k + 1, :].astype(F32)
    return out.astype(F32)


def reduce_sum_f32(t: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(t, axis, 0)
    acc = np.zeros(moved.shape[1:], dtype=F32)
    for i in range(moved.shape[0]):
        acc = (acc + moved[i]).astype(F32)
    return np.expand_dims(acc, axis)


def _binary(op: str, a, b):
    if _is_int(a) and _is_int(b):
        a, b = int(a), int(b)
        if op == "div":
            return F32(a) / F32(b)
        if op in ("idiv", "mod") and b == 0:
            raise SimFault("Malformed", f"integer {op} by zero")
        return {
            "add": lambda: a + b, "sub": lambda: a - b, "mul": lambda: a * b,
            "max": lambda: max(a, b), "min": lambda: min(a, b),
            "idiv": lambda: a // b, "mod": lambda: a % b,
            "and": lambda: a & b, "or": lambda: a | b, "xor": lambda: a ^ b,
            "eq": lambda: int(a == b), "ne": lambda: int(a != b), "lt": lambda: int(a < b),
            "le": lambda: int(a <= b), "gt": lambda: int(a > b), "ge": lambda: int(a >= b),
        }[op]()
    x = np.asarray(a, dtype=F32)
    y = np.asarray(b, dtype=F32)
    with np.errstate(all="ignore"):
        if op == "add":
            r = x + y
        elif op == "sub":
            r = x - y
        elif op == "mul":
            r = x * y
        elif op == "div":
            r = x / y
        elif op == "max":
            r = np.maximum(x, y)
        elif op == "min":
            r = np.minimum(x, y)
        elif op == "idiv":
            r = np.floor_divide(x, y)
        elif op == "mod":
            r = np.mod(x, y)
        elif op == "and":
            r = np.logical_and(x != 0, y != 0)
        elif op == "or":
            r = np.logical_or(x != 0, y != 0)
        elif op == "xor":
            r = np.logical_xor(x != 0, y != 0)
        else:
            r = {"eq": np.equal, "ne": np.not_equal, "lt": np.less, "le": np.less_equal,
                 "gt": np.greater, "ge": np.greater_equal}[op](x, y)
    r = np.asarray(r).astype(F32)
    return F32(r) if r.ndim == 0 else r


def _unary(op: str, a):
    if op == "neg" and _is_int(a):
        return -int(a)
    x = np.asarray(a, dtype=F32)
    with np.errstate(all="ignore"):
        if op == "exp":
            r = np.exp(x)
        elif op == "log":
            r = np.log(x)
        elif op == "sqrt":
            r = np.sqrt(x)
        elif op == "rsqrt":
            r = F32(1.0) / np.sqrt(x)
        else:
            r = -x
    r = np.asarray(r).astype(F32)
    return F32(r) if r.ndim == 0 else r


class Simulator:
    def __init__(self, program: KernelProgram, inputs: dict[str, Any] | None, cfg: SimConfig):
        self.p = program
        self.cfg = cfg
        self.trace = Trace()
        self.races = RaceDetector(cfg.race_detector)
        self.rng = random.Random(cfg.seed)
        self.step = 0
        self.heap: list = []
        self.seq = count()
        self.agents = count()
        self.fids = count()
        self.warnings: list[dict] = []
        self.bank_conflicts = 0
        self.layout_converts = 0
        self.queue = TileQueue(program.total_tiles)
        self.dispatch: dict[str, list[int]] = {}
        self.rendezvous: dict[tuple, dict] = {}
        self.cluster_sync: dict[int, dict] = {}
        self.sites = {}
        for scope, body in program.regions():
            for site, ins in walk(body, f"{scope}:"):
                self.sites[id(ins)] = site if ins.line is None else f"{site} (line {ins.line})"
        self._setup_memory(inputs or {})
        self._setup_ctas()

    # setup -------------------------------------------------------------------

    def _setup_memory(self, inputs: dict[str, Any]):
        p = self.p
        self.globals: dict[str, np.ndarray] = {}
        self.loads: dict[str, np.ndarray] = {}
        self.stores: dict[str, np.ndarray] = {}
        unknown = set(inputs) - {q.name for q in p.params}
        if unknown:
            raise ValueError(f"inputs for undeclared params: {sorted(unknown)}")
        for name, prm in p.tensor_params.items():
            if name in inputs:
                arr = np.array(inputs[name], dtype=F32)
                if arr.shape != prm.shape:
                    raise ValueError(f"input @{name} has shape {arr.shape}, expected {prm.shape}")
            else:
                arr = np.zeros(prm.shape, dtype=F32)
            self.globals[name] = arr
            self.loads[name] = np.zeros(prm.shape, dtype=np.int64)
            self.stores[name] = np.zeros(prm.shape, dtype=np.int64)
        self.scalars: dict[str, Any] = {}
        for name, prm in p.scalar_params.items():
            if name in inputs:
                v = inputs[name]
                self.scalars[name] = int(v) if float(v).is_integer() and not isinstance(v, float) else F32(v)
            elif prm.default is not None:
                d = prm.default
                self.scalars[name] = d if isinstance(d, int) else F32(d)
        # alias groups share storage
        self.root: dict[str, str] = {n: n for n in p.buffers}
        for members, _sites in alias_groups(p):
            r = min(members)
            for m in members:
                self.root[m] = r
        self.storage_elems: dict[str, int] = {}
        for n, b in p.buffers.items():
            r = self.root[n]
            self.storage_elems[r] = max(self.storage_elems.get(r, 0), b.stage_elems)
        total = sum(self.storage_elems[r] * p.buffers[r].stages * 4 for r in self.storage_elems)
        if total > self.cfg.shared_capacity_bytes:
            raise SimFault(
                "CapacityExceeded",
                f"shared memory {total} bytes exceeds capacity {self.cfg.shared_capacity_bytes}",
                {"bytes": total, "capacity": self.cfg.shared_capacity_bytes},
            )

    def _setup_ctas(self):
        p = self.p
        gx, gy, gz = p.grid
        cx, cy, cz = p.cluster
        self.ctas: list[_Cta] = []
        self.clusters: dict[int, list[_Cta]] = {}
        ncx, ncy = gx // cx, gy // cy
        gid = 0
        for z in range(gz):
            for y in range(gy):
                for x in range(gx):
                    cl = (x // cx) + ncx * ((y // cy) + ncy * (z // cz))
                    rank = (x % cx) + cx * ((y % cy) + cy * (z % cz))
                    self.ctas.append(_Cta(gid, cl, rank, (x, y, z)))
                    gid += 1
        for c in self.ctas:
            self.clusters.setdefault(c.cluster, [None] * p.cluster_size)[c.rank] = c
            for r, elems in self.storage_elems.items():
                for s in range(p.buffers[r].stages):
                    c.smem[(r, s)] = np.zeros(elems, dtype=F32)
            for bar in p.barriers.values():
                for i in range(bar.count):
                    c.barriers[(bar.name, i)] = MbarrierState(arrive_count=bar.arrive, pending=bar.arrive)
                    c.bar_vc[(bar.name, i)] = {"accum": {}, "pub": {}}
            init = [Instr("barrier_init", args=[Sym(b.name)]) for b in p.barriers.values()]
            agent = f"{c.gid}/prologue"
            frames = [_Frame(p.prologue)]
            if init:
                frames.append(_Frame(init))
            s = _Stream((c.gid, 0), c, "prologue", 0, frames, {}, {agent: 1}, agent, is_prologue=True)
            if self.cfg.launch_skew:
                s.not_before = self.rng.randint(0, self.cfg.launch_skew)
                if s.not_before:
                    self.schedule(s.not_before, _launch)
            c.streams.append(s)
            self.dispatch[str(c.gid)] = []

    # helpers -----------------------------------------------------------------

    def emit(self, cta: _Cta, task: str, event: str, **detail):
        self.trace.emit(self.step, cta.cluster, cta.rank, task, event, **detail)

    def fault(self, kind: str, message: str, **details):
        raise SimFault(kind, message, details, self.trace.records, self.summary())

    def site(self, ins: Instr) -> str:
        return self.sites.get(id(ins), ins.op)

    def peer(self, cta: _Cta, rank) -> _Cta:
        r = _as_index(rank, "CTA rank")
        if not 0 <= r < self.p.cluster_size:
            self.fault("Malformed", f"CTA rank {r} outside cluster of size {self.p.cluster_size}")
        return self.clusters[cta.cluster][r]

    def schedule(self, latency: int, fn, *args):
        if latency == 0:
            fn(*args)
        else:
            heapq.heappush(self.heap, (self.step + latency, next(self.seq), fn, args))

    def value(self, s: _Stream, v):
        if isinstance(v, Reg):
            if v.name not in s.env:
                self.fault("Malformed", f"register %{v.name} read before assignment in {s.name}")
            return s.env[v.name]
        if isinstance(v, Sym):
            if v.name in self.scalars:
                return self.scalars[v.name]
            self.fault("Malformed", f"@{v.name} has no scalar value")
        if isinstance(v, Word):
            return v.text
        if isinstance(v, float):
            return F32(v)
        return v

    def data(self, s: _Stream, v):
        x = self.value(s, v)
        if isinstance(x, (Future, ViewRef, BarRef, CtxRef)):
            self.fault("Malformed", f"{v} holds a {type(x).__name__}, not a value")
        return x

    def tile(self, s: _Stream, v) -> np.ndarray:
        x = self.data(s, v)
        if not isinstance(x, np.ndarray):
            self.fault("Malformed", f"{v} is not a tile")
        return x

    def ref(self, s: _Stream, v, kind):
        x = self.value(s, v)
        if not isinstance(x, kind):
            self.fault("Malformed", f"{v} is not a {kind.__name__}")
        return x

    def buffer_array(self, view: ViewRef) -> tuple[tuple, np.ndarray]:
        cta = self.ctas[view.cta]
        buf = self.p.buffers[view.buffer]
        key = (self.root[view.buffer], view.stage)
        flat = cta.smem[key]
        return (view.cta,) + key, flat[: buf.stage_elems].reshape(buf.shape)

    def count_banks(self, buffer: str):
        b = self.p.buffers[buffer]
        enc = b.encoding or b.layout or "row_major"
        if enc == "row_major" and b.shape[-1] % 32 == 0:
            self.bank_conflicts += 1

    def fresh_agent(self, kind: str) -> str:
        return f"{kind}{next(self.agents)}"

    # barriers ------------------------------------------------------------------

    def bar_update(self, cta: _Cta, key: tuple[str, int], fn, release: dict | None, task: str):
        before = cta.barriers[key]
        try:
            after = fn(before)
        except BarrierFault as e:
            self.fault("BarrierFault", f"{e} on @{key[0]}[{key[1]}] of CTA {cta.gid}")
        cta.barriers[key] = after
        vcs = cta.bar_vc[key]
        if release:
            join_into(vcs["accum"], release)
        if after.flips != before.flips:
            vcs["pub"] = join(vcs["pub"], vcs["accum"])
            vcs["accum"] = {}
            self.emit(cta, task, "phase_flip", barrier=key[0], index=key[1], phase=after.phase)

    def deliver_arrive(self, target: _Cta, key, n: int, vc: dict, task: str, site: str):
        if not target.barriers[key].init_done:
            rep = self.races.uninitialized_arrive(target.gid, key[0], key[1], task, site)
            self.emit(target, task, "fault", kind="uninit_arrive", barrier=key[0], index=key[1])
            if rep and self.cfg.strict:
                self.fault("RaceDetected", "arrive on uninitialized barrier", report=rep)
            return
        self.bar_update(target, key, lambda b: b.arrive(n), vc, task)

    def deliver_tx(self, target: _Cta, key, nbytes: int, vc: dict, task: str, site: str):
        if not target.barriers[key].init_done:
            rep = self.races.uninitialized_arrive(target.gid, key[0], key[1], task, site)
            self.emit(target, task, "fault", kind="uninit_arrive", barrier=key[0], index=key[1])
            if rep and self.cfg.strict:
                self.fault("RaceDetected", "transaction completion on uninitialized barrier", report=rep)
            return
        if target.barriers[key].tx_bytes - nbytes < 0:
            self.warn(target, task, f"transaction bytes on @{key[0]}[{key[1]}] completed before barrier_expect_bytes")
        self.bar_update(target, key, lambda b: b.complete_tx(nbytes), vc, task)

    def warn(self, cta: _Cta, task: str, message: str):
        w = {"step": self.step, "cta": cta.gid, "task": task, "message": message}
        if w not in self.warnings:
            self.warnings.append(w)

    def note_races(self, reps: list[dict]):
        for rep in reps:
            cta = self.ctas[rep["cta"]]
            self.emit(cta, rep["second"]["task"], "race", kind=rep["kind"], buffer=rep["buffer"], stage=rep["stage"])
            if self.cfg.strict:
                self.fault("RaceDetected", f"{rep['kind']} race on @{rep['buffer']}[{rep['stage']}]", report=rep)

    # control flow ------------------------------------------------------------------

    def position(self, s: _Stream) -> Instr | None:
        guard = 0
        while s.frames:
            guard += 1
            if guard > 100_000:
                self.fault("Malformed", f"{s.name} loops without executing an instruction")
            f = s.frames[-1]
            if f.idx < len(f.block):
                ins = f.block[f.idx]
                op = ins.op
                if op == "for":
                    lo, hi, st = (_as_index(self.data(s, a), "loop bound") for a in ins.args)
                    f.idx += 1
                    if st <= 0:
                        self.fault("Malformed", "for step must be positive")
                    if lo < hi:
                        s.env[ins.result] = lo
                        s.frames.append(_Frame(ins.body, 0, "for", (ins.result, hi, st)))
                    continue
                if op == "while":
                    f.idx += 1
                    if _truthy(self.data(s, ins.args[0])):
                        s.frames.append(_Frame(ins.body, 0, "while", ins.args[0]))
                    continue
                if op == "if":
                    f.idx += 1
                    branch = ins.body if _truthy(self.data(s, ins.args[0])) else ins.orelse
                    if branch:
                        s.frames.append(_Frame(branch, 0, "if"))
                    continue
                if op in FREE_OPS:
                    if op == "release_layout":
                        s.env[ins.result] = self.value(s, ins.args[0])
                    f.idx += 1
                    continue
                return ins
            if f.kind == "for":
                var, hi, st = f.data
                nxt = _as_index(s.env[var], "loop counter") + st
                if nxt < hi:
                    s.env[var] = nxt
                    f.idx = 0
                    continue
            elif f.kind == "while" and _truthy(self.data(s, f.data)):
                f.idx = 0
                continue
            s.frames.pop()
        return None

    def ready(self, s: _Stream, ins: Instr) -> bool:
        op = ins.op
        if op not in BLOCKING:
            return True
        if op == "barrier_wait":
            b = self.ref(s, ins.args[0], BarRef)
            if b.remote:
                self.fault("Malformed", "barrier_wait on a remote barrier")
            parity = _as_index(self.data(s, ins.args[1]), "parity")
            return self.ctas[b.cta].barriers[(b.barrier, b.index)].wait_satisfied(parity)
        if op == "cluster_barrier":
            if s.cb_gen is None:
                return True
            return s.cb_gen in self.cluster_sync[s.cta.cluster]["done"]
        if op == "async_dot_wait":
            return len(s.mma) <= _as_index(self.data(s, ins.args[0]), "outstanding count")
        ctx = self.context(s, ins.args[0])
        if op == "clc_producer":
            stage, parity = ctx.producer_slot(s.name)
            return ctx.empty[stage].wait_satisfied(parity)
        stage, parity = ctx.consumer_slot(s.name)
        return ctx.full[stage].wait_satisfied(parity)

    def blocked_on(self, s: _Stream, ins: Instr) -> str:
        op = ins.op
        if op == "barrier_wait":
            b = self.ref(s, ins.args[0], BarRef)
            st = self.ctas[b.cta].barriers[(b.barrier, b.index)]
            parity = _as_index(self.data(s, ins.args[1]), "parity")
            return (
                f"barrier_wait @{b.barrier}[{b.index}] parity {parity} "
                f"(phase {st.phase}, pending {st.pending}, tx {st.tx_bytes})"
            )
        if op == "cluster_barrier":
            got = len(self.cluster_sync.get(s.cta.cluster, {}).get("arrived", ()))
            return f"cluster_barrier ({got} of {self.p.cluster_size} CTAs arrived)"
        if op == "async_dot_wait":
            return f"async_dot_wait ({len(s.mma)} outstanding)"
        ctx = self.context(s, ins.args[0])
        if op == "clc_producer":
            stage, parity = ctx.producer_slot(s.name)
            return f"clc_producer empty[{stage}] parity {parity}"
        stage, parity = ctx.consumer_slot(s.name)
        return f"clc_consumer full[{stage}] parity {parity}"

    def context(self, s: _Stream, v) -> ClcContext:
        ref = self.ref(s, v, CtxRef)
        return self.ctas[ref.cta].contexts[ref.index]

    # main loop -----------------------------------------------------------------

    def streams(self) -> list[_Stream]:
        out = []
        for c in self.ctas:
            out.extend(c.streams)
        return out

    def spawn_tasks(self, pro: _Stream):
        cta = pro.cta
        self.emit(cta, "prologue", "task_end")
        for i, (name, _idx, task, replica) in enumerate(expand_tasks(self.p), start=1):
            agent = f"{cta.gid}/{name}"
            vc = dict(pro.vc)
            vc[agent] = 1
            env = dict(pro.env)
            s = _Stream((cta.gid, i), cta, name, replica, [_Frame(task.body)], env, vc, agent)
            cta.streams.append(s)
            self.emit(cta, name, "task_start", replica=replica)

    def run(self) -> SimResult:
        cfg = self.cfg
        while True:
            while self.heap and self.heap[0][0] <= self.step:
                _t, _seq, fn, args = heapq.heappop(self.heap)
                fn(*args)
            runnable = []
            live = spawned = False
            for s in self.streams():
                if s.done:
                    continue
                ins = self.position(s)
                if ins is None:
                    s.done = True
                    if s.is_prologue:
                        self.spawn_tasks(s)
                        live = spawned = True
                    else:
                        self.emit(s.cta, s.name, "task_end")
                    continue
                live = True
                if s.not_before > self.step:
                    continue
                if self.ready(s, ins):
                    runnable.append(s)
            if not live:
                if self.heap:
                    self.step = max(self.step, self.heap[0][0])
                    continue
                break
            if not runnable and spawned:
                continue
            if not runnable:
                if self.heap:
                    self.step = max(self.step + 1, self.heap[0][0])
                    continue
                self.quiescent()
            if cfg.scheduler == "round_robin":
                chosen = runnable
            else:
                chosen = [s for s in runnable if self.rng.random() < 0.5]
                if not chosen:
                    chosen = [self.rng.choice(runnable)]
                self.rng.shuffle(chosen)
            for s in chosen:
                ins = self.position(s)
                if ins is None or not self.ready(s, ins):
                    continue
                self.execute(s, ins)
            self.step += 1
            if self.step > cfg.max_steps:
                self.fault("StepLimit", f"no termination within {cfg.max_steps} steps")
        if self.rendezvous:
            self.collective_mismatch()
        summary = self.summary()
        return SimResult(
            outputs={k: v.copy() for k, v in self.globals.items()},
            trace=self.trace.records,
            summary=summary,
            load_counts=self.loads,
            store_counts=self.stores,
        )

    def quiescent(self):
        if self.rendezvous:
            self.collective_mismatch()
        blocked = []
        for s in self.streams():
            if s.done:
                continue
            ins = self.position(s)
            blocked.append(
                {
                    "cluster": s.cta.cluster,
                    "cta": s.cta.rank,
                    "task": s.name,
                    "site": self.site(ins),
                    "blocked_on": self.blocked_on(s, ins),
                }
            )
        names = ", ".join(f"cta{b['cluster']}.{b['cta']}/{b['task']}" for b in blocked)
        self.fault("Deadlock", f"all tasks blocked: {names}", blocked=blocked)

    def collective_mismatch(self):
        key, rv = sorted(self.rendezvous.items(), key=lambda kv: str(kv[0]))[0]
        cluster, group, seq = key
        missing = [r for r in group if r not in rv["arrived"]]
        self.fault(
            "CollectiveMismatch",
            f"collective group {list(group)} #{seq} in cluster {cluster}: rank(s) {missing} never issued",
            group=list(group),
            ranks=missing,
            cluster=cluster,
        )

    def summary(self) -> dict:
        tasks = {}
        for s in self.streams():
            tasks[f"{s.cta.gid}/{s.name}"] = s.steps
        flips = {}
        for c in self.ctas:
            for (name, i), st in sorted(c.barriers.items()):
                flips[f"{c.gid}/{name}[{i}]"] = st.flips
        return {
            "steps": self.step,
            "tasks": tasks,
            "barrier_flips": flips,
            "clc_dispatch": self.dispatch,
            "clc_requests": self.queue.requests,
            "races": list(self.races.reports),
            "warnings": list(self.warnings),
            "bank_conflicts": self.bank_conflicts,
            "layout_converts": self.layout_converts,
            "global_loads": {k: int(v.sum()) for k, v in self.loads.items()},
            "global_stores": {k: int(v.sum()) for k, v in self.stores.items()},
        }

    # execution -----------------------------------------------------------------

    def execute(self, s: _Stream, ins: Instr):
        op = ins.op
        advance = True
        if op in BINARY_OPS:
            res = _binary(op, self.data(s, ins.args[0]), self.data(s, ins.args[1]))
        elif op in UNARY_OPS:
            res = _unary(op, self.data(s, ins.args[0]))
        else:
            handler = getattr(self, f"op_{op}")
            res = handler(s, ins)
            if op == "cluster_barrier":
                advance = res
                res = None
        if ins.result is not None:
            s.env[ins.result] = res
        if advance:
            s.frames[-1].idx += 1
        s.steps += 1

    def op_barrier_init(self, s, ins):
        name = ins.args[0].name
        bar = self.p.barriers[name]
        for i in range(bar.count):
            s.cta.barriers[(name, i)] = MbarrierState.initialized(bar.arrive)
        self.emit(s.cta, s.name, "barrier_init", barrier=name, count=bar.count, arrive=bar.arrive)

    def op_const(self, s, ins):
        return self.value(s, ins.args[0])

    def op_mov(self, s, ins):
        return self.data(s, ins.args[0])

    def op_cta_rank(self, s, ins):
        return s.cta.rank

    def op_cluster_size(self, s, ins):
        return self.p.cluster_size

    def op_program_id(self, s, ins):
        return s.cta.coords[ins.args[0]]

    def op_num_programs(self, s, ins):
        return self.p.grid[ins.args[0]]

    def op_replica_id(self, s, ins):
        return s.replica

    def op_where(self, s, ins):
        c, a, b = (self.data(s, x) for x in ins.args)
        r = np.where(np.asarray(c) != 0, np.asarray(a, dtype=F32), np.asarray(b, dtype=F32)).astype(F32)
        return F32(r) if r.ndim == 0 else r

    def op_zeros(self, s, ins):
        return np.zeros(ins.attrs["shape"], dtype=F32)

    def op_full(self, s, ins):
        return np.full(ins.attrs["shape"], self.data(s, ins.args[0]), dtype=F32)

    def op_iota(self, s, ins):
        shape = tuple(ins.attrs["shape"])
        axis = ins.attrs["axis"][0]
        idx = np.arange(shape[axis], dtype=F32).reshape([-1 if d == axis else 1 for d in range(len(shape))])
        return np.broadcast_to(idx, shape).astype(F32)

    def op_reduce_sum(self, s, ins):
        return reduce_sum_f32(self.tile(s, ins.args[0]), ins.attrs["axis"][0])

    def op_reduce_max(self, s, ins):
        return np.max(self.tile(s, ins.args[0]), axis=ins.attrs["axis"][0], keepdims=True).astype(F32)

    def op_dot(self, s, ins):
        a, b, acc = (self.tile(s, x) for x in ins.args)
        return dot_f32(a, b, acc)

    def op_trans(self, s, ins):
        return np.ascontiguousarray(self.tile(s, ins.args[0]).T)

    def op_reshape(self, s, ins):
        return self.tile(s, ins.args[0]).reshape(ins.attrs["shape"]).copy()

    def op_layout_convert(self, s, ins):
        self.layout_converts += 1
        return self.value(s, ins.args[0])

    # global memory

    def _region(self, name: str, offs: list[int], shape: tuple[int, ...]):
        full = self.p.tensor_params[name].shape
        src, dst = [], []
        for o, n, extent in zip(offs, shape, full):
            lo, hi = max(o, 0), min(o + n, extent)
            if lo >= hi:
                return None
            src.append(slice(lo, hi))
            dst.append(slice(lo - o, hi - o))
        return tuple(src), tuple(dst)

    def read_global(self, name: str, offs: list[int], shape: tuple[int, ...], pad) -> np.ndarray:
        out = np.full(shape, pad, dtype=F32)
        reg = self._region(name, offs, shape)
        if reg is not None:
            src, dst = reg
            out[dst] = self.globals[name][src]
            self.loads[name][src] += 1
        return out

    def op_load(self, s, ins):
        name = ins.args[0].name
        offs = [_as_index(self.data(s, a), "load offset") for a in ins.args[1:]]
        shape = tuple(ins.attrs["shape"])
        pad = ins.attrs.get("pad", (0.0,))[0]
        self.emit(s.cta, s.name, "load", tensor=name, offset=offs)
        return self.read_global(name, offs, shape, pad)

    def op_store(self, s, ins):
        name = ins.args[0].name
        offs = [_as_index(self.data(s, a), "store offset") for a in ins.args[1:-1]]
        t = self.tile(s, ins.args[-1])
        reg = self._region(name, offs, t.shape)
        if reg is not None:
            dst, src = reg
            self.globals[name][dst] = t[src]
            self.stores[name][dst] += 1
        self.emit(s.cta, s.name, "store", tensor=name, offset=offs)

    # local memory

    def op_local_view(self, s, ins):
        name = ins.args[0].name
        idx = _as_index(self.data(s, ins.args[1]), "stage index")
        if name in self.p.buffers:
            if not 0 <= idx < self.p.buffers[name].stages:
                self.fault("Malformed", f"stage {idx} out of range for @{name}")
            return ViewRef(s.cta.gid, name, idx)
        if not 0 <= idx < self.p.barriers[name].count:
            self.fault("Malformed", f"index {idx} out of range for @{name}")
        return BarRef(s.cta.gid, name, idx)

    def op_remote_view(self, s, ins):
        ref = self.value(s, ins.args[0])
        target = self.peer(s.cta, self.data(s, ins.args[1]))
        remote = target.gid != s.cta.gid
        if isinstance(ref, ViewRef):
            return ViewRef(target.gid, ref.buffer, ref.stage, remote)
        if isinstance(ref, BarRef):
            return BarRef(target.gid, ref.barrier, ref.index, remote)
        self.fault("Malformed", "remote_view of a non-view value")

    def op_local_load(self, s, ins):
        v = self.ref(s, ins.args[0], ViewRef)
        if v.remote:
            self.fault("Malformed", "local_load through a remote view")
        key, arr = self.buffer_array(v)
        self.note_races(self.races.read(key, s.agent, s.vc, s.name, self.site(ins)))
        self.count_banks(v.buffer)
        self.emit(s.cta, s.name, "local_load", buffer=v.buffer, stage=v.stage)
        return arr.copy()

    def op_local_store(self, s, ins):
        v = self.ref(s, ins.args[0], ViewRef)
        t = self.tile(s, ins.args[1])
        key, arr = self.buffer_array(v)
        arr[...] = t
        self.note_races(self.races.write(key, s.agent, s.vc, s.name, self.site(ins)))
        self.count_banks(v.buffer)
        target = self.ctas[v.cta]
        self.emit(s.cta, s.name, "local_store", buffer=v.buffer, stage=v.stage, target=target.rank)

    # barriers

    def op_barrier_arrive(self, s, ins):
        b = self.ref(s, ins.args[0], BarRef)
        n = _as_index(self.data(s, ins.attrs["count"][0]), "arrive count") if "count" in ins.attrs else 1
        target = self.ctas[b.cta]
        if "rank" in ins.attrs:
            target = self.peer(s.cta, self.data(s, ins.attrs["rank"][0]))
        key = (b.barrier, b.index)
        vc = dict(s.vc)
        site = self.site(ins)
        self.emit(s.cta, s.name, "barrier_arrive", barrier=b.barrier, index=b.index, count=n, target=target.rank)
        if target.gid == s.cta.gid:
            self.bar_update(target, key, lambda st: st.arrive(n), vc, s.name)
        else:
            self.schedule(self.cfg.remote_arrive_delay, self.deliver_arrive, target, key, n, vc, s.name, site)
        s.vc[s.agent] += 1

    def op_barrier_wait(self, s, ins):
        b = self.ref(s, ins.args[0], BarRef)
        cta = self.ctas[b.cta]
        join_into(s.vc, cta.bar_vc[(b.barrier, b.index)]["pub"])
        parity = _as_index(self.data(s, ins.args[1]), "parity")
        self.emit(s.cta, s.name, "barrier_wait", barrier=b.barrier, index=b.index, parity=parity)

    def op_barrier_expect_bytes(self, s, ins):
        b = self.ref(s, ins.args[0], BarRef)
        n = _as_index(self.data(s, ins.args[1]), "byte count")
        key = (b.barrier, b.index)
        if s.cta.barriers[key].tx_bytes < 0:
            self.warn(s.cta, s.name, f"barrier_expect_bytes on @{b.barrier}[{b.index}] after its transfer completed")
        self.bar_update(s.cta, key, lambda st: st.expect_bytes(n), None, s.name)
        self.emit(s.cta, s.name, "barrier_expect_bytes", barrier=b.barrier, index=b.index, bytes=n)

    def op_cluster_barrier(self, s, ins) -> bool:
        sync = self.cluster_sync.setdefault(s.cta.cluster, {"gen": 0, "arrived": set(), "vc": {}, "done": {}})
        if s.cb_gen is None:
            s.cb_gen = sync["gen"]
            sync["arrived"].add(s.cta.gid)
            join_into(sync["vc"], s.vc)
            s.vc[s.agent] += 1
            self.emit(s.cta, s.name, "cluster_barrier_arrive", generation=s.cb_gen)
            if len(sync["arrived"]) == self.p.cluster_size:
                sync["done"][sync["gen"]] = sync["vc"]
                sync["gen"] += 1
                sync["arrived"] = set()
                sync["vc"] = {}
            if s.cb_gen not in sync["done"]:
                return False
        join_into(s.vc, sync["done"][s.cb_gen])
        self.emit(s.cta, s.name, "cluster_barrier_pass", generation=s.cb_gen)
        s.cb_gen = None
        return True

    # async engines

    def op_async_copy(self, s, ins):
        name = ins.args[0].name
        offs = [_as_index(self.data(s, a), "copy offset") for a in ins.args[1:-2]]
        v = self.ref(s, ins.args[-2], ViewRef)
        b = self.ref(s, ins.args[-1], BarRef)
        buf = self.p.buffers[v.buffer]
        rank = len(self.p.tensor_params[name].shape)
        region = (1,) * (rank - len(buf.shape)) + buf.shape
        data = self.read_global(name, offs, region, 0.0).reshape(buf.shape)
        if "multicast" in ins.attrs:
            ranks = [_as_index(self.data(s, r), "multicast rank") for r in ins.attrs["multicast"]]
            if not ranks:
                self.fault("Malformed", "empty multicast target set")
            targets = []
            for r in ranks:
                if not 0 <= r < self.p.cluster_size:
                    self.fault("Malformed", f"multicast target rank {r} outside cluster of size {self.p.cluster_size}")
                targets.append(self.clusters[s.cta.cluster][r])
        else:
            targets = [s.cta]
        agent = self.fresh_agent("copy")
        vc = dict(s.vc)
        vc[agent] = 1
        s.vc[s.agent] += 1
        nbytes = buf.stage_elems * 4
        self.emit(s.cta, s.name, "async_copy", tensor=name, offset=offs, buffer=v.buffer, stage=v.stage,
                  targets=[t.rank for t in targets])
        site = self.site(ins)
        self.schedule(self.cfg.async_copy_latency, self._copy_done, targets, v, (b.barrier, b.index), data,
                      nbytes, agent, vc, site)

    def _copy_done(self, targets, v: ViewRef, bkey, data, nbytes, agent, vc, site):
        for t in targets:
            key, arr = self.buffer_array(ViewRef(t.gid, v.buffer, v.stage))
            arr[...] = data
            self.note_races(self.races.write(key, agent, vc, "tma", site))
            self.emit(t, "tma", "async_copy_done", buffer=v.buffer, stage=v.stage)
            self.deliver_tx(t, bkey, nbytes, vc, "tma", site)

    def op_async_remote_store(self, s, ins):
        v = self.ref(s, ins.args[0], ViewRef)
        data = self.tile(s, ins.args[1]).copy()
        b = self.ref(s, ins.args[2], BarRef)
        target = self.ctas[v.cta]
        agent = self.fresh_agent("dsm")
        vc = dict(s.vc)
        vc[agent] = 1
        s.vc[s.agent] += 1
        self.emit(s.cta, s.name, "async_remote_store", buffer=v.buffer, stage=v.stage, target=target.rank)
        delay = 0 if target.gid == s.cta.gid else self.cfg.remote_arrive_delay
        self.schedule(delay, self._remote_store_done, target, v, (b.barrier, b.index), data, agent, vc, self.site(ins))

    def _remote_store_done(self, target: _Cta, v: ViewRef, bkey, data, agent, vc, site):
        key, arr = self.buffer_array(ViewRef(target.gid, v.buffer, v.stage))
        arr[...] = data
        self.note_races(self.races.write(key, agent, vc, "dsm", site))
        self.emit(target, "dsm", "async_remote_store_done", buffer=v.buffer, stage=v.stage)
        self.deliver_arrive(target, bkey, 1, vc, "dsm", site)

    def op_async_dot(self, s, ins):
        a, b = self.tile(s, ins.args[0]), self.tile(s, ins.args[1])
        acc = self.value(s, ins.args[2])
        fut = Future(next(self.fids))
        s.mma.append({"kind": "dot", "a": a, "b": b, "acc": acc, "future": fut, "started": False})
        self.emit(s.cta, s.name, "async_dot", id=fut.fid)
        self.mma_kick(s)
        return fut

    def op_collective_dot(self, s, ins):
        a, b = self.tile(s, ins.args[0]), self.tile(s, ins.args[1])
        acc = self.value(s, ins.args[2])
        group = tuple(_as_index(self.data(s, r), "collective rank") for r in ins.attrs["ranks"])
        if s.cta.rank not in group:
            self.fault("Malformed", f"rank {s.cta.rank} issues a collective for group {list(group)} it is not in")
        seq = s.coll_seq.get(group, 0)
        s.coll_seq[group] = seq + 1
        key = (s.cta.cluster, group, seq)
        rv = self.rendezvous.setdefault(key, {"arrived": {}})
        fut = Future(next(self.fids))
        op = {"kind": "coll", "a": a, "b": b, "acc": acc, "future": fut, "started": False, "fired": False}
        rv["arrived"][s.cta.rank] = (s, op)
        s.mma.append(op)
        self.emit(s.cta, s.name, "collective_dot", group=list(group), seq=seq)
        if len(rv["arrived"]) == len(group):
            del self.rendezvous[key]
            parts = [rv["arrived"][r] for r in group]
            ks = {p[1]["a"].shape[1] for p in parts} | {p[1]["b"].shape[0] for p in parts}
            n_total = sum(p[1]["b"].shape[1] for p in parts)
            bad = len(ks) != 1
            for _st, o in parts:
                acc_shape = o["acc"].shape if isinstance(o["acc"], np.ndarray) else None
                if acc_shape is not None and acc_shape != (o["a"].shape[0], n_total):
                    bad = True
            if bad:
                self.fault(
                    "CollectiveMismatch",
                    f"collective group {list(group)} #{seq}: operand fragments do not conform",
                    group=list(group),
                    ranks=[],
                    shapes={r: [list(o["a"].shape), list(o["b"].shape)] for r, (_s, o) in zip(group, parts)},
                )
            b_full = np.concatenate([o["b"] for _s, o in parts], axis=1)
            for st, o in parts:
                o["b"] = b_full
                o["fired"] = True
            self.emit(s.cta, "mma", "collective_fire", group=list(group), seq=seq)
            for st, _o in parts:
                self.mma_kick(st)
        return fut

    def mma_kick(self, s: _Stream):
        if not s.mma:
            return
        op = s.mma[0]
        if op["started"] or (op["kind"] == "coll" and not op["fired"]):
            return
        op["started"] = True
        acc = op["acc"]
        if isinstance(acc, Future):
            if not acc.done:
                self.fault("Malformed", "async dot accumulator future is not complete")
            acc = acc.value
        op["result"] = dot_f32(op["a"], op["b"], np.asarray(acc, dtype=F32))
        self.schedule(self.cfg.mma_latency, self._mma_done, s)

    def _mma_done(self, s: _Stream):
        op = s.mma.popleft()
        op["future"].value = op["result"]
        op["future"].done = True
        self.emit(s.cta, s.name, "mma_done", id=op["future"].fid)
        self.mma_kick(s)

    def op_async_dot_wait(self, s, ins):
        target = self.value(s, ins.args[1])
        if isinstance(target, Future):
            if not target.done:
                self.fault("Malformed", "async_dot_wait result is still in flight")
            return target.value
        return target

    # cluster launch control

    def op_clc_create_context(self, s, ins):
        ctx = clc_create_context(ins.attrs["stages"][0], ins.attrs["consumers"][0])
        s.cta.contexts.append(ctx)
        self.emit(s.cta, s.name, "clc_create_context", stages=ctx.stages, consumers=ctx.num_consumers)
        return CtxRef(s.cta.gid, len(s.cta.contexts) - 1)

    def op_clc_producer(self, s, ins):
        ctx = self.context(s, ins.args[0])
        stage, _parity = ctx.producer_slot(s.name)
        ctx.produced[s.name] = ctx.produced.get(s.name, 0) + 1
        ctx.full[stage] = ctx.full[stage].expect_bytes(RESPONSE_BYTES).arrive(1)
        tile = self.queue.request()
        self.emit(s.cta, s.name, "clc_request", stage=stage)
        self.schedule(self.cfg.clc_latency, self._clc_response, s.cta, ctx, stage, tile)

    def _clc_response(self, cta: _Cta, ctx: ClcContext, stage: int, tile: int):
        ctx.slots[stage] = encode_response(tile)
        ctx.full[stage] = ctx.full[stage].complete_tx(RESPONSE_BYTES)
        if tile >= 0:
            self.dispatch[str(cta.gid)].append(tile)
        self.emit(cta, "clc", "clc_response", tile_id=tile, stage=stage)

    def op_clc_consumer(self, s, ins):
        ctx = self.context(s, ins.args[0])
        stage, _parity = ctx.consumer_slot(s.name)
        ctx.consumed[s.name] = ctx.consumed.get(s.name, 0) + 1
        tile = decode_response(ctx.slots[stage])
        try:
            ctx.empty[stage] = ctx.empty[stage].arrive(1)
        except BarrierFault as e:
            self.fault("BarrierFault", f"{e} on clc empty[{stage}]: more consumers than the context declares")
        self.emit(s.cta, s.name, "clc_consume", tile_id=tile, stage=stage)
        return tile


def simulate(program, inputs: dict[str, Any] | None = None, cfg: SimConfig | None = None) -> SimResult:
    """Run ``program`` (a KernelProgram or a resolved layout result) to completion.

    Raises :class:`SimFault` on deadlock, collective mismatch, capacity
    overflow, malformed execution or (with ``strict``) the first race.
    """
    p = getattr(program, "program", program)
    sim = Simulator(p, inputs, cfg or SimConfig())
    return sim.run()


def relative_error(got, expected) -> float:
    """max |got - expected| / max |expected| (absolute error when expected is all zero)."""
    got = np.asarray(got, dtype=np.float64)
    exp = np.asarray(expected, dtype=np.float64)
    scale = float(np.max(np.abs(exp))) if exp.size else 0.0
    err = float(np.max(np.abs(got - exp))) if exp.size else 0.0
    return err / scale if scale > 0 else err


__all__ = ["SimResult", "Simulator", "dot_f32", "reduce_sum_f32", "relative_error", "simulate"]
