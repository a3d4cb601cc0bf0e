"""Kernel IR data structures.

A program is a header (grid, cluster shape, warp budget), declarations
(tensor/scalar params, shared buffers, mbarrier arrays), a prologue that
every CTA runs once, and a list of task regions that run concurrently on
disjoint warp groups once the prologue finishes.

Registers (``%name``) are mutable: loops carry state by reassignment.
Symbols (``@name``) name params, buffers and barriers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

ELEM_BYTES = {"f32": 4}

ENCODINGS = (
    "row_major",
    "col_major",
    "swizzle32",
    "swizzle64",
    "swizzle128",
    "mma_a",
    "mma_b",
    "mma_acc",
)

PRIORITIES = {"required": 3, "user": 2, "default": 1}

STORAGE_KINDS = ("smem", "smem_cluster")


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True)
class Sym:
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


@dataclass(frozen=True)
class Word:
    text: str

    def __str__(self) -> str:
        return self.text


Operand = Union[Reg, Sym, Word, int, float]


@dataclass
class Instr:
    op: str
    result: str | None = None
    args: list = field(default_factory=list)
    attrs: dict[str, tuple] = field(default_factory=dict)
    body: list["Instr"] | None = None
    orelse: list["Instr"] | None = None
    line: int | None = field(default=None, compare=False)

    def regs_used(self) -> list[str]:
        """Registers read by this instruction itself (not its nested body)."""
        out = [a.name for a in self.args if isinstance(a, Reg)]
        for vals in self.attrs.values():
            out.extend(v.name for v in vals if isinstance(v, Reg))
        return out

    def blocks(self) -> list[list["Instr"]]:
        return [b for b in (self.body, self.orelse) if b is not None]


@dataclass(frozen=True)
class TensorParam:
    name: str
    shape: tuple[int, ...]


@dataclass(frozen=True)
class ScalarParam:
    name: str
    default: float | int | None = None


@dataclass
class BufferDecl:
    name: str
    shape: tuple[int, ...]
    elem: str = "f32"
    stages: int = 1
    storage: str = "smem"
    layout: str | None = None  # user-requested
    encoding: str | None = None  # resolved by the layout pass

    @property
    def stage_elems(self) -> int:
        return math.prod(self.shape)

    @property
    def nbytes(self) -> int:
        return self.stages * self.stage_elems * ELEM_BYTES[self.elem]


@dataclass
class BarrierDecl:
    name: str
    count: int = 1
    arrive: int = 1


@dataclass
class TaskRegion:
    kind: str  # "default" | "explicit"
    num_warps: int | None = None
    replicate: int = 1
    registers: int | None = None
    body: list[Instr] = field(default_factory=list)
    line: int | None = field(default=None, compare=False)


@dataclass
class KernelProgram:
    name: str
    grid: tuple[int, int, int] = (1, 1, 1)
    cluster: tuple[int, int, int] = (1, 1, 1)
    num_warps: int = 4
    tiles: int | None = None
    params: list = field(default_factory=list)
    allocations: list = field(default_factory=list)
    prologue: list[Instr] = field(default_factory=list)
    tasks: list[TaskRegion] = field(default_factory=list)

    @property
    def buffers(self) -> dict[str, BufferDecl]:
        return {a.name: a for a in self.allocations if isinstance(a, BufferDecl)}

    @property
    def barriers(self) -> dict[str, BarrierDecl]:
        return {a.name: a for a in self.allocations if isinstance(a, BarrierDecl)}

    @property
    def tensor_params(self) -> dict[str, TensorParam]:
        return {p.name: p for p in self.params if isinstance(p, TensorParam)}

    @property
    def scalar_params(self) -> dict[str, ScalarParam]:
        return {p.name: p for p in self.params if isinstance(p, ScalarParam)}

    @property
    def cluster_size(self) -> int:
        return math.prod(self.cluster)

    @property
    def num_ctas(self) -> int:
        return math.prod(self.grid)

    @property
    def total_tiles(self) -> int:
        return self.tiles if self.tiles is not None else self.num_ctas

    def task_scope(self, index: int) -> str:
        return "default" if self.tasks[index].kind == "default" else f"task{index}"

    def regions(self) -> Iterator[tuple[str, list[Instr]]]:
        yield "prologue", self.prologue
        for i, task in enumerate(self.tasks):
            yield self.task_scope(i), task.body


# has_result, blocking
OPCODES: dict[str, tuple[bool, bool]] = {
    # scalars and indices
    "const": (True, False),
    "mov": (True, False),
    "cta_rank": (True, False),
    "cluster_size": (True, False),
    "program_id": (True, False),
    "num_programs": (True, False),
    "replica_id": (True, False),
    # elementwise (scalars or tiles, numpy broadcasting)
    "add": (True, False),
    "sub": (True, False),
    "mul": (True, False),
    "div": (True, False),
    "max": (True, False),
    "min": (True, False),
    "idiv": (True, False),
    "mod": (True, False),
    "and": (True, False),
    "or": (True, False),
    "xor": (True, False),
    "eq": (True, False),
    "ne": (True, False),
    "lt": (True, False),
    "le": (True, False),
    "gt": (True, False),
    "ge": (True, False),
    "exp": (True, False),
    "log": (True, False),
    "sqrt": (True, False),
    "rsqrt": (True, False),
    "neg": (True, False),
    "where": (True, False),
    # tiles
    "zeros": (True, False),
    "full": (True, False),
    "iota": (True, False),
    "reduce_sum": (True, False),
    "reduce_max": (True, False),
    "dot": (True, False),
    "trans": (True, False),
    "reshape": (True, False),
    # global memory
    "load": (True, False),
    "store": (False, False),
    # local memory
    "local_view": (True, False),
    "local_load": (True, False),
    "local_store": (False, False),
    "remote_view": (True, False),
    "local_alias": (False, False),
    "require_layout": (False, False),
    "release_layout": (True, False),
    "layout_convert": (True, False),
    # barriers
    "barrier_arrive": (False, False),
    "barrier_wait": (False, True),
    "barrier_expect_bytes": (False, False),
    "cluster_barrier": (False, True),
    # async engines and collectives
    "async_copy": (False, False),
    "async_remote_store": (False, False),
    "async_dot": (True, False),
    "async_dot_wait": (True, True),
    "collective_dot": (True, False),
    # cluster launch control
    "clc_create_context": (True, False),
    "clc_producer": (False, True),
    "clc_consumer": (True, True),
    # control flow
    "for": (True, False),
    "while": (False, False),
    "if": (False, False),
}

CONTROL_OPS = ("for", "while", "if")
BINARY_OPS = (
    "add", "sub", "mul", "div", "max", "min", "idiv", "mod", "and", "or", "xor",
    "eq", "ne", "lt", "le", "gt", "ge",
)
UNARY_OPS = ("exp", "log", "sqrt", "rsqrt", "neg")
DOT_OPS = ("dot", "async_dot", "collective_dot")


def walk(block: list[Instr], prefix: str) -> Iterator[tuple[str, Instr]]:
    """Pre-order walk yielding ``(site, instr)``; sites look like ``task1:3/0``."""
    for i, ins in enumerate(block):
        site = f"{prefix}{i}"
        yield site, ins
        if ins.body is not None:
            yield from walk(ins.body, f"{site}/")
        if ins.orelse is not None:
            yield from walk(ins.orelse, f"{site}/else/")


def walk_program(p: KernelProgram) -> Iterator[tuple[str, str, Instr]]:
    """Yield ``(scope, site, instr)`` over the prologue and every task body."""
    for scope, body in p.regions():
        for site, ins in walk(body, f"{scope}:"):
            yield scope, site, ins


def expand_tasks(p: KernelProgram) -> list[tuple[str, int, TaskRegion, int]]:
    """Expand replicated regions into ``(stream name, task index, region, replica id)``."""
    out = []
    for i, task in enumerate(p.tasks):
        scope = p.task_scope(i)
        if task.replicate == 1:
            out.append((scope, i, task, 0))
        else:
            for r in range(task.replicate):
                out.append((f"{scope}.{r}", i, task, r))
    return out


def warp_assignment(p: KernelProgram) -> dict[str, range]:
    """Warp-index ranges per expanded region; the default region takes the complement.

    Explicit regions are packed from warp 0 upwards in declaration order.
    """
    out: dict[str, range] = {}
    nxt = 0
    default_name = None
    for name, _idx, task, _r in expand_tasks(p):
        if task.kind == "default":
            default_name = name
            continue
        w = task.num_warps or 0
        out[name] = range(nxt, nxt + w)
        nxt += w
    if default_name is not None:
        out[default_name] = range(nxt, p.num_warps)
    return out


def alias_groups(p: KernelProgram) -> list[tuple[frozenset[str], tuple[str, ...]]]:
    """Union-find closure of ``local_alias`` pairs.

    Returns ``(members, declaring sites)`` for every group with two or more
    buffers, ordered by the smallest member name.
    """
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sites: dict[str, list[str]] = {}
    pending: list[tuple[str, str, str]] = []
    for _scope, site, ins in walk_program(p):
        if ins.op == "local_alias" and len(ins.args) == 2 and all(isinstance(a, Sym) for a in ins.args):
            a, b = ins.args[0].name, ins.args[1].name
            pending.append((a, b, site))
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    for a, _b, site in pending:
        sites.setdefault(find(a), []).append(site)
    groups: dict[str, set[str]] = {}
    for x in list(parent):
        groups.setdefault(find(x), set()).add(x)
    out = []
    for root in sorted(groups):
        if len(groups[root]) > 1:
            out.append((frozenset(groups[root]), tuple(sites.get(root, ()))))
    return out
