"""Structural validation and static typing of kernel programs.

Diagnostic codes:

  V001 warp budget          V007 shared-memory capacity
  V002 undeclared symbol    V008 rank / index out of range
  V003 undefined register   V009 storage kind (remote view of smem)
  V004 shape conformance    V010 local_load through a remote view
  V005 operand kind/arity   V011 op not allowed in this region
  V006 header/declarations
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import Diagnostic
from .nodes import (
    BINARY_OPS,
    ENCODINGS,
    PRIORITIES,
    STORAGE_KINDS,
    UNARY_OPS,
    Instr,
    KernelProgram,
    Reg,
    ScalarParam,
    Sym,
    TensorParam,
    Word,
    alias_groups,
    walk,
)

SMEM_CAPACITY = 232 * 1024


@dataclass(frozen=True)
class Ty:
    kind: str  # scalar | tile | view | bar | ctx | future
    shape: tuple[int, ...] = ()
    name: str | None = None  # buffer or barrier name for view/bar
    remote: bool = False

    def __str__(self) -> str:
        if self.kind in ("tile", "future"):
            return f"{self.kind}<{'x'.join(map(str, self.shape))}>"
        if self.kind in ("view", "bar"):
            return f"{'remote ' if self.remote else ''}{self.kind}<@{self.name}>"
        return self.kind


SCALAR = Ty("scalar")


@dataclass
class ValidationReport:
    errors: list[Diagnostic] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)
    types: dict[tuple[str, str], Ty] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors


class _Bad(Exception):
    pass


def broadcast(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...] | None:
    try:
        return tuple(np.broadcast_shapes(a, b))
    except ValueError:
        return None


class _Checker:
    def __init__(self, p: KernelProgram, capacity: int):
        self.p = p
        self.capacity = capacity
        self.report = ValidationReport()
        self.scope = "prologue"
        self.site = ""

    def err(self, code: str, msg: str, site: str | None = None):
        self.report.errors.append(Diagnostic(code, msg, site if site is not None else self.site))

    def warn(self, code: str, msg: str):
        self.report.warnings.append(Diagnostic(code, msg, self.site, severity="warning"))

    # header and declarations -------------------------------------------

    def header(self):
        p = self.p
        for what, vec in (("grid", p.grid), ("cluster", p.cluster)):
            if len(vec) != 3 or any(v < 1 for v in vec):
                self.err("V006", f"{what} extents must be three positive counts", "header")
        if all(v >= 1 for v in p.grid + p.cluster):
            if any(g % c for g, c in zip(p.grid, p.cluster)):
                self.err("V006", f"cluster {p.cluster} does not divide grid {p.grid}", "header")
        if p.num_warps < 1:
            self.err("V006", "warps must be positive", "header")
        if p.tiles is not None and p.tiles < 0:
            self.err("V006", "tiles must be non-negative", "header")

    def warps(self):
        p = self.p
        defaults = [t for t in p.tasks if t.kind == "default"]
        if len(defaults) > 1:
            self.err("V001", "at most one default task region is allowed", "tasks")
        claimed = 0
        for i, t in enumerate(p.tasks):
            where = p.task_scope(i)
            if t.replicate < 1:
                self.err("V006", "replicate must be >= 1", where)
            if t.kind == "default":
                if t.num_warps is not None:
                    self.err("V001", "the default region takes the remaining warps; drop warps(...)", where)
                continue
            if t.num_warps is None or t.num_warps < 1:
                self.err("V001", "explicit task regions need warps(n) with n >= 1", where)
                continue
            claimed += t.num_warps * max(t.replicate, 1)
        if claimed > p.num_warps:
            self.err("V001", f"warp budget exceeded: tasks claim {claimed} of {p.num_warps} warps", "tasks")
        elif defaults and claimed >= p.num_warps:
            self.err("V001", f"warp budget exceeded: no warps left for the default region ({claimed} of {p.num_warps})", "tasks")

    def decls(self):
        p = self.p
        seen: set[str] = set()
        for d in list(p.params) + list(p.allocations):
            if d.name in seen:
                self.err("V006", f"duplicate declaration @{d.name}", "decls")
            seen.add(d.name)
        for prm in p.params:
            if isinstance(prm, TensorParam) and (not prm.shape or any(s < 1 for s in prm.shape)):
                self.err("V006", f"tensor @{prm.name} needs positive extents", "decls")
        for b in p.buffers.values():
            where = f"buffer @{b.name}"
            if any(s < 1 for s in b.shape):
                self.err("V006", "buffer extents must be positive", where)
            if b.stages < 1:
                self.err("V006", "stages must be >= 1", where)
            if b.elem != "f32":
                self.err("V006", f"element type {b.elem} is not executable (only f32)", where)
            if b.storage not in STORAGE_KINDS:
                self.err("V006", f"unknown storage kind {b.storage}", where)
            for enc in (b.layout, b.encoding):
                if enc is not None and enc not in ENCODINGS:
                    self.err("V006", f"unknown layout encoding {enc}", where)
        for bar in p.barriers.values():
            if bar.count < 1 or bar.arrive < 1:
                self.err("V006", "barrier count and arrive must be >= 1", f"barrier @{bar.name}")
        # alias groups share storage: count each group once at its largest member
        bufs = p.buffers
        grouped: set[str] = set()
        total = 0
        for members, _sites in alias_groups(p):
            live = [bufs[m].nbytes for m in members if m in bufs]
            total += max(live, default=0)
            grouped |= set(members)
        total += sum(b.nbytes for n, b in bufs.items() if n not in grouped and b.elem == "f32")
        if total > self.capacity:
            self.err("V007", f"shared memory {total} bytes exceeds capacity {self.capacity}", "decls")

    # instructions ---------------------------------------------------------

    def regions(self):
        p = self.p
        pro_env: dict[str, Ty] = {}
        self.scope = "prologue"
        self.block(p.prologue, "prologue:", pro_env, in_task=False)
        for i, task in enumerate(p.tasks):
            self.scope = p.task_scope(i)
            env = dict(pro_env)
            self.block(task.body, f"{self.scope}:", env, in_task=True)

    def block(self, body: list[Instr], prefix: str, env: dict[str, Ty], in_task: bool):
        for i, ins in enumerate(body):
            self.site = f"{prefix}{i}"
            if ins.line is not None:
                self.site += f" (line {ins.line})"
            try:
                ty = self.instr(ins, env, in_task)
            except _Bad:
                ty = None
            if ins.op == "for":
                env[ins.result] = SCALAR
                self.report.types[(self.scope, ins.result)] = SCALAR
            elif ins.result is not None and ty is not None:
                env[ins.result] = ty
                self.report.types[(self.scope, ins.result)] = ty
            for sub_prefix, sub in (("/", ins.body), ("/else/", ins.orelse)):
                if sub is not None:
                    self.block(sub, f"{prefix}{i}{sub_prefix}", env, in_task)

    # operand helpers
    def reg(self, v, env) -> Ty:
        if not isinstance(v, Reg):
            self.err("V005", f"expected a register, got {v}")
            raise _Bad
        if v.name not in env:
            self.err("V003", f"register %{v.name} used before definition")
            raise _Bad
        return env[v.name]

    def value(self, v, env) -> Ty:
        if isinstance(v, bool):
            raise _Bad
        if isinstance(v, (int, float)):
            return SCALAR
        if isinstance(v, Sym):
            prm = next((q for q in self.p.params if q.name == v.name), None)
            if isinstance(prm, ScalarParam):
                return SCALAR
            if prm is None and v.name not in self.p.buffers and v.name not in self.p.barriers:
                self.err("V002", f"undeclared symbol @{v.name}")
            else:
                self.err("V005", f"@{v.name} is not a scalar value")
            raise _Bad
        if isinstance(v, Reg):
            ty = self.reg(v, env)
            if ty.kind == "future":
                self.err("V005", f"%{v.name} is a pending async_dot result; async_dot_wait it first")
                raise _Bad
            if ty.kind not in ("scalar", "tile"):
                self.err("V005", f"%{v.name} is a {ty}, expected a scalar or tile")
                raise _Bad
            return ty
        self.err("V005", f"unexpected operand {v}")
        raise _Bad

    def scalar(self, v, env) -> Ty:
        ty = self.value(v, env)
        if ty.kind != "scalar":
            self.err("V005", f"expected a scalar, got {ty}")
            raise _Bad
        return ty

    def tile(self, v, env, allow_future=False) -> Ty:
        if allow_future and isinstance(v, Reg) and v.name in env and env[v.name].kind == "future":
            return env[v.name]
        ty = self.value(v, env)
        if ty.kind != "tile":
            self.err("V005", f"expected a tile, got {ty}")
            raise _Bad
        return ty

    def tensor(self, v) -> TensorParam:
        if not isinstance(v, Sym):
            self.err("V005", f"expected a tensor symbol, got {v}")
            raise _Bad
        prm = self.p.tensor_params.get(v.name)
        if prm is None:
            self.err("V002", f"undeclared tensor @{v.name}")
            raise _Bad
        return prm

    def view(self, v, env, local=False) -> Ty:
        ty = self.reg(v, env)
        if ty.kind != "view":
            self.err("V005", f"expected a buffer view, got {ty}")
            raise _Bad
        if local and ty.remote:
            self.err("V010", "local_load through a remote view is not supported")
            raise _Bad
        return ty

    def bar(self, v, env) -> Ty:
        ty = self.reg(v, env)
        if ty.kind != "bar":
            self.err("V005", f"expected a barrier reference, got {ty}")
            raise _Bad
        return ty

    def nargs(self, ins: Instr, lo: int, hi: int | None = None):
        hi = lo if hi is None else hi
        if not lo <= len(ins.args) <= hi:
            want = str(lo) if lo == hi else f"{lo}..{hi}"
            self.err("V005", f"{ins.op} takes {want} operands, got {len(ins.args)}")
            raise _Bad

    def attr_ints(self, ins: Instr, key: str, required=True, n=None) -> tuple[int, ...] | None:
        vals = ins.attrs.get(key)
        if vals is None:
            if required:
                self.err("V005", f"{ins.op} needs {key}(...)")
                raise _Bad
            return None
        if not all(isinstance(v, int) for v in vals) or (n is not None and len(vals) != n):
            self.err("V005", f"{key}(...) must hold {n or 'some'} integer(s)")
            raise _Bad
        return tuple(vals)

    def only_attrs(self, ins: Instr, allowed: tuple[str, ...] = ()):
        for k in ins.attrs:
            if k not in allowed:
                self.err("V005", f"{ins.op} does not accept {k}(...)")
                raise _Bad

    def rank_literal(self, r):
        if isinstance(r, int) and not 0 <= r < self.p.cluster_size:
            self.err("V008", f"CTA rank {r} outside cluster of size {self.p.cluster_size}")
            raise _Bad

    # per-opcode rules
    def instr(self, ins: Instr, env: dict[str, Ty], in_task: bool) -> Ty | None:
        op = ins.op
        if op in BINARY_OPS:
            self.nargs(ins, 2)
            self.only_attrs(ins)
            a, b = self.value(ins.args[0], env), self.value(ins.args[1], env)
            return self.combine(a, b)
        if op in UNARY_OPS:
            self.nargs(ins, 1)
            self.only_attrs(ins)
            return self.value(ins.args[0], env)
        if op == "where":
            self.nargs(ins, 3)
            self.only_attrs(ins)
            a, b, c = (self.value(x, env) for x in ins.args)
            return self.combine(self.combine(a, b), c)
        handler = getattr(self, f"op_{op}", None)
        if handler is None:
            self.err("V005", f"unknown opcode {op}")
            raise _Bad
        return handler(ins, env, in_task)

    def combine(self, a: Ty, b: Ty) -> Ty:
        if a.kind == "scalar":
            return b
        if b.kind == "scalar":
            return a
        shape = broadcast(a.shape, b.shape)
        if shape is None:
            self.err("V004", f"shapes {a} and {b} do not broadcast")
            raise _Bad
        return Ty("tile", shape)

    def op_const(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        if not isinstance(ins.args[0], (int, float)):
            self.err("V005", "const takes a numeric literal")
            raise _Bad
        return SCALAR

    def op_mov(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        return self.value(ins.args[0], env)

    def op_cta_rank(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins)
        return SCALAR

    op_cluster_size = op_cta_rank

    def op_replica_id(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins)
        if not in_task:
            self.err("V011", "replica_id is only defined inside task regions")
        return SCALAR

    def op_program_id(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        if ins.args[0] not in (0, 1, 2) or not isinstance(ins.args[0], int):
            self.err("V005", f"{ins.op} axis must be 0, 1 or 2")
        return SCALAR

    op_num_programs = op_program_id

    def op_zeros(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins, ("shape",))
        return Ty("tile", self.shape_attr(ins))

    def op_full(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins, ("shape",))
        self.scalar(ins.args[0], env)
        return Ty("tile", self.shape_attr(ins))

    def op_iota(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins, ("shape", "axis"))
        shape = self.shape_attr(ins)
        (axis,) = self.attr_ints(ins, "axis", n=1)
        if not 0 <= axis < len(shape):
            self.err("V004", f"axis {axis} out of range for {len(shape)}-d tile")
        return Ty("tile", shape)

    def shape_attr(self, ins) -> tuple[int, ...]:
        shape = self.attr_ints(ins, "shape")
        if not shape or any(s < 1 for s in shape):
            self.err("V004", "shape(...) needs positive extents")
            raise _Bad
        return shape

    def reduce(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins, ("axis",))
        t = self.tile(ins.args[0], env)
        (axis,) = self.attr_ints(ins, "axis", n=1)
        if not 0 <= axis < len(t.shape):
            self.err("V004", f"axis {axis} out of range for {t}")
            raise _Bad
        shape = list(t.shape)
        shape[axis] = 1
        return Ty("tile", tuple(shape))

    op_reduce_sum = reduce
    op_reduce_max = reduce

    def matmul_shape(self, a: Ty, b: Ty, acc: Ty, n_scale: int = 1) -> tuple[int, int]:
        if len(a.shape) != 2 or len(b.shape) != 2:
            self.err("V004", f"dot operands must be 2-d, got {a} and {b}")
            raise _Bad
        if a.shape[1] != b.shape[0]:
            self.err("V004", f"dot inner dimensions differ: {a} x {b}")
            raise _Bad
        out = (a.shape[0], b.shape[1] * n_scale)
        if acc.shape != out:
            self.err("V004", f"dot accumulator {acc} does not match result {out[0]}x{out[1]}")
            raise _Bad
        return out

    def op_dot(self, ins, env, in_task):
        self.nargs(ins, 3)
        self.only_attrs(ins)
        a, b, acc = (self.tile(x, env) for x in ins.args)
        return Ty("tile", self.matmul_shape(a, b, acc))

    def op_async_dot(self, ins, env, in_task):
        self.nargs(ins, 3)
        self.only_attrs(ins)
        a, b = self.tile(ins.args[0], env), self.tile(ins.args[1], env)
        acc = self.tile(ins.args[2], env, allow_future=True)
        return Ty("future", self.matmul_shape(a, b, acc))

    def op_collective_dot(self, ins, env, in_task):
        self.nargs(ins, 3)
        self.only_attrs(ins, ("ranks",))
        ranks = self.attr_ints(ins, "ranks")
        if not ranks or len(set(ranks)) != len(ranks):
            self.err("V008", "collective_dot needs a non-empty set of distinct ranks")
            raise _Bad
        for r in ranks:
            self.rank_literal(r)
        a, b = self.tile(ins.args[0], env), self.tile(ins.args[1], env)
        acc = self.tile(ins.args[2], env, allow_future=True)
        return Ty("future", self.matmul_shape(a, b, acc, n_scale=len(ranks)))

    def op_async_dot_wait(self, ins, env, in_task):
        self.nargs(ins, 1, 2)
        self.only_attrs(ins)
        n = ins.args[0]
        if not isinstance(n, int) or n < 0:
            self.err("V005", "async_dot_wait takes a non-negative outstanding count")
            raise _Bad
        if len(ins.args) == 2:
            t = self.tile(ins.args[1], env, allow_future=True)
            return Ty("tile", t.shape)
        self.err("V005", "async_dot_wait needs the accumulator register to name its result shape")
        raise _Bad

    def op_trans(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins, ("perm",))
        t = self.tile(ins.args[0], env)
        if len(t.shape) != 2:
            self.err("V004", f"trans needs a 2-d tile, got {t}")
            raise _Bad
        return Ty("tile", t.shape[::-1])

    def op_reshape(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins, ("shape",))
        t = self.tile(ins.args[0], env)
        shape = self.shape_attr(ins)
        if math.prod(shape) != math.prod(t.shape):
            self.err("V004", f"cannot reshape {t} to {shape}")
            raise _Bad
        return Ty("tile", shape)

    def op_load(self, ins, env, in_task):
        self.only_attrs(ins, ("shape", "pad"))
        if not ins.args:
            self.nargs(ins, 1, 99)
        prm = self.tensor(ins.args[0])
        self.nargs(ins, 1 + len(prm.shape))
        for off in ins.args[1:]:
            self.scalar(off, env)
        shape = self.shape_attr(ins)
        if len(shape) != len(prm.shape):
            self.err("V004", f"load shape {shape} has rank {len(shape)}, @{prm.name} has rank {len(prm.shape)}")
            raise _Bad
        pad = ins.attrs.get("pad")
        if pad is not None and (len(pad) != 1 or not isinstance(pad[0], (int, float))):
            self.err("V005", "pad(...) takes one number")
        return Ty("tile", shape)

    def op_store(self, ins, env, in_task):
        self.only_attrs(ins)
        if not ins.args:
            self.nargs(ins, 2, 99)
        prm = self.tensor(ins.args[0])
        self.nargs(ins, 2 + len(prm.shape))
        for off in ins.args[1:-1]:
            self.scalar(off, env)
        t = self.tile(ins.args[-1], env)
        if len(t.shape) != len(prm.shape):
            self.err("V004", f"store of {t} into rank-{len(prm.shape)} tensor @{prm.name}")
            raise _Bad
        return None

    def op_local_view(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        sym, idx = ins.args
        if not isinstance(sym, Sym):
            self.err("V005", "local_view takes a buffer or barrier symbol")
            raise _Bad
        self.scalar(idx, env)
        if sym.name in self.p.buffers:
            limit, ty = self.p.buffers[sym.name].stages, Ty("view", name=sym.name)
        elif sym.name in self.p.barriers:
            limit, ty = self.p.barriers[sym.name].count, Ty("bar", name=sym.name)
        else:
            self.err("V002", f"undeclared buffer or barrier @{sym.name}")
            raise _Bad
        if isinstance(idx, int) and not 0 <= idx < limit:
            self.err("V008", f"index {idx} out of range for @{sym.name} ({limit})")
        return ty

    def op_local_load(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        v = self.view(ins.args[0], env, local=True)
        return Ty("tile", self.p.buffers[v.name].shape)

    def op_local_store(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        v = self.view(ins.args[0], env)
        t = self.tile(ins.args[1], env)
        want = self.p.buffers[v.name].shape
        if t.shape != want:
            self.err("V004", f"local_store of {t} into @{v.name} of shape {want}")
        return None

    def op_remote_view(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        ty = self.reg(ins.args[0], env)
        if ty.kind not in ("view", "bar"):
            self.err("V005", f"remote_view needs a buffer view or barrier, got {ty}")
            raise _Bad
        self.scalar(ins.args[1], env)
        self.rank_literal(ins.args[1])
        if ty.kind == "view" and self.p.buffers[ty.name].storage != "smem_cluster":
            self.err("V009", f"remote_view of @{ty.name}: storage(smem) is CTA-private; use smem_cluster")
            raise _Bad
        return Ty(ty.kind, ty.shape, ty.name, remote=True)

    def op_local_alias(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        for a in ins.args:
            if not isinstance(a, Sym) or a.name not in self.p.buffers:
                self.err("V002", f"local_alias needs declared buffers, got {a}")
                raise _Bad
        shapes = {self.p.buffers[a.name].stages for a in ins.args}
        if len(shapes) != 1:
            self.err("V004", "aliased buffers must have the same number of stages")
        return None

    def op_require_layout(self, ins, env, in_task):
        self.nargs(ins, 2, 3)
        self.only_attrs(ins)
        ty = self.reg(ins.args[0], env)
        if ty.kind not in ("view", "tile"):
            self.err("V005", f"require_layout applies to tiles and views, got {ty}")
        enc = ins.args[1]
        if not isinstance(enc, Word) or enc.text not in ENCODINGS:
            self.err("V005", f"unknown layout encoding {enc}")
        if len(ins.args) == 3 and (not isinstance(ins.args[2], Word) or ins.args[2].text not in PRIORITIES):
            self.err("V005", f"unknown priority {ins.args[2]} (required/user/default)")
        return None

    def op_release_layout(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        return self.reg(ins.args[0], env)

    def op_layout_convert(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        ty = self.reg(ins.args[0], env)
        enc = ins.args[1]
        if not isinstance(enc, Word) or enc.text not in ENCODINGS:
            self.err("V005", f"unknown layout encoding {enc}")
        return ty

    def op_barrier_arrive(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins, ("count", "rank"))
        self.bar(ins.args[0], env)
        for key in ("count", "rank"):
            vals = ins.attrs.get(key)
            if vals is not None:
                if len(vals) != 1:
                    self.err("V005", f"{key}(...) takes one value")
                    raise _Bad
                self.scalar(vals[0], env)
        cnt = ins.attrs.get("count")
        if cnt and isinstance(cnt[0], int) and cnt[0] < 1:
            self.err("V005", "arrive count must be >= 1")
        if "rank" in ins.attrs:
            self.rank_literal(ins.attrs["rank"][0])
        return None

    def op_barrier_wait(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        self.bar(ins.args[0], env)
        self.scalar(ins.args[1], env)
        return None

    def op_barrier_expect_bytes(self, ins, env, in_task):
        self.nargs(ins, 2)
        self.only_attrs(ins)
        b = self.bar(ins.args[0], env)
        if b.remote:
            self.err("V005", "barrier_expect_bytes must target a CTA-local barrier")
        self.scalar(ins.args[1], env)
        if isinstance(ins.args[1], int) and ins.args[1] < 0:
            self.err("V005", "expected byte count must be >= 0")
        return None

    def op_cluster_barrier(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins)
        if in_task:
            self.err("V011", "cluster_barrier is only allowed in the prologue")
        return None

    def op_async_copy(self, ins, env, in_task):
        self.only_attrs(ins, ("multicast",))
        if not ins.args:
            self.nargs(ins, 3, 99)
        prm = self.tensor(ins.args[0])
        self.nargs(ins, 3 + len(prm.shape))
        for off in ins.args[1:-2]:
            self.scalar(off, env)
        v = self.view(ins.args[-2], env)
        if v.remote:
            self.err("V005", "async_copy destination must be a local view; use multicast(...) for peers")
        b = self.bar(ins.args[-1], env)
        if b.remote:
            self.err("V005", "async_copy completion barrier must be local")
        buf = self.p.buffers[v.name]
        if len(buf.shape) > len(prm.shape):
            self.err("V004", f"copy of rank-{len(buf.shape)} @{v.name} from rank-{len(prm.shape)} @{prm.name}")
        if "multicast" in ins.attrs:
            ranks = self.attr_ints(ins, "multicast")
            if not ranks:
                self.err("V008", "multicast target set is empty")
                raise _Bad
            for r in ranks:
                self.rank_literal(r)
        return None

    def op_async_remote_store(self, ins, env, in_task):
        self.nargs(ins, 3)
        self.only_attrs(ins)
        v = self.view(ins.args[0], env)
        t = self.tile(ins.args[1], env)
        self.bar(ins.args[2], env)
        want = self.p.buffers[v.name].shape
        if t.shape != want:
            self.err("V004", f"async_remote_store of {t} into @{v.name} of shape {want}")
        return None

    def op_clc_create_context(self, ins, env, in_task):
        self.nargs(ins, 0)
        self.only_attrs(ins, ("stages", "consumers"))
        (stages,) = self.attr_ints(ins, "stages", n=1)
        (consumers,) = self.attr_ints(ins, "consumers", n=1)
        if stages < 1:
            self.err("V006", "clc_create_context needs stages >= 1")
        if consumers < 1:
            self.err("V006", "clc_create_context needs consumers >= 1")
        if in_task:
            self.err("V011", "clc_create_context must be called in the prologue")
        return Ty("ctx")

    def op_clc_producer(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        if self.reg(ins.args[0], env).kind != "ctx":
            self.err("V005", "clc_producer takes a CLC context")
        return None

    def op_clc_consumer(self, ins, env, in_task):
        self.op_clc_producer(ins, env, in_task)
        return SCALAR

    def op_for(self, ins, env, in_task):
        self.only_attrs(ins)
        for v in ins.args:
            self.scalar(v, env)
        if isinstance(ins.args[2], int) and ins.args[2] <= 0:
            self.err("V005", "for step must be positive")
        return SCALAR

    def op_while(self, ins, env, in_task):
        self.nargs(ins, 1)
        self.only_attrs(ins)
        self.scalar(ins.args[0], env)
        return None

    op_if = op_while


def validate(p: KernelProgram, capacity: int = SMEM_CAPACITY) -> ValidationReport:
    """Check warp budget, declarations, name resolution and operand shapes."""
    c = _Checker(p, capacity)
    c.header()
    c.warps()
    c.decls()
    c.regions()
    return c.report


def static_types(p: KernelProgram) -> dict[tuple[str, str], Ty]:
    """Types of every register keyed by ``(scope, name)``; prologue registers
    appear once under ``prologue``."""
    return validate(p).types


def defined_registers(block: list[Instr]) -> set[str]:
    out = set()
    for _site, ins in walk(block, ""):
        if ins.result is not None:
            out.add(ins.result)
    return out
