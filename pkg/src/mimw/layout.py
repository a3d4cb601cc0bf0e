"""Layout-encoding inference: constraint insertion, backward/forward fact
propagation over the def-use graph, and priority-based resolution.

Values are graph nodes: ``@buf`` for allocations and ``<scope>:%reg`` for
registers. A register read inside a task but defined only in the prologue
resolves to the prologue node, so facts cross region boundaries.

Facts carry their provenance: the set of constraint sites that reached the
node, each with the encoding as seen from that node (transposes flip
row/column-major on the way). The lattice element is derived from that set:
empty is ``Any``, one distinct encoding is ``Known``, more is ``Conflict``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable

from .errors import Diagnostic, LayoutError
from .ir.nodes import DOT_OPS, ENCODINGS, PRIORITIES, Instr, KernelProgram, Reg, Sym, Word, alias_groups, walk
from .ir.validate import validate

DEFAULT_ENCODING = "row_major"
COPY_DEFAULT = "swizzle128"
_FLIP = {"row_major": "col_major", "col_major": "row_major"}


def transpose_encoding(enc: str) -> str:
    """Row/column-major swap; swizzled and MMA encodings are transpose-invariant."""
    return _FLIP.get(enc, enc)


def encoding_parts(enc: str) -> tuple[str, object]:
    """Split an encoding name into (variant, parameter), e.g. ``("Swizzled", 128)``."""
    if enc.startswith("swizzle"):
        return "Swizzled", int(enc[len("swizzle"):])
    if enc.startswith("mma_"):
        return "MmaOperand", {"a": "A", "b": "B", "acc": "Acc"}[enc[4:]]
    return {"row_major": ("RowMajor", None), "col_major": ("ColMajor", None)}[enc]


@dataclass(frozen=True, order=True)
class Provenance:
    site: str
    encoding: str
    priority: int
    transposed: bool = False  # odd number of transposes between site and node

    def flipped(self) -> "Provenance":
        return Provenance(self.site, transpose_encoding(self.encoding), self.priority, not self.transposed)

    def describe(self) -> str:
        prio = {v: k for k, v in PRIORITIES.items()}[self.priority]
        perm = " via transpose perm(1 0)" if self.transposed else ""
        return f"{self.site}: {self.encoding} ({prio}){perm}"


@dataclass(frozen=True)
class LayoutFact:
    provenance: frozenset[Provenance] = frozenset()

    @property
    def encodings(self) -> frozenset[str]:
        return frozenset(p.encoding for p in self.provenance)

    @property
    def kind(self) -> str:
        n = len(self.encodings)
        return "Any" if n == 0 else "Known" if n == 1 else "Conflict"

    @property
    def encoding(self) -> str | None:
        return next(iter(self.encodings)) if self.kind == "Known" else None

    def meet(self, other: "LayoutFact") -> "LayoutFact":
        return LayoutFact(self.provenance | other.provenance)

    def height(self) -> int:
        """0 for Any, 1 for Known, 2 for Conflict (descending the lattice)."""
        return {"Any": 0, "Known": 1, "Conflict": 2}[self.kind]

    def __str__(self) -> str:
        if self.kind == "Any":
            return "any"
        head = self.encoding if self.kind == "Known" else "conflict"
        return f"{head} [{', '.join(p.describe() for p in sorted(self.provenance))}]"


ANY = LayoutFact()


@dataclass(frozen=True)
class LayoutConstraint:
    value: str  # node id
    encoding: str
    priority: int
    site: str


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    flip: bool = False
    transparent: bool = False  # views: facts cross in both passes and both directions


@dataclass
class LayoutGraph:
    nodes: set[str] = field(default_factory=set)
    edges: list[Edge] = field(default_factory=list)
    constraints: list[LayoutConstraint] = field(default_factory=list)
    buffers: set[str] = field(default_factory=set)


@dataclass
class PropagationResult:
    facts: dict[str, LayoutFact]
    iterations: int
    history: list[tuple[str, LayoutFact]] = field(default_factory=list)


@dataclass
class ResolvedProgram:
    program: KernelProgram
    encodings: dict[str, str]  # every node -> concrete encoding
    conversions: list[str]  # sites where a layout_convert was inserted
    warnings: list[Diagnostic] = field(default_factory=list)


# scoping ------------------------------------------------------------------


def _scope_defs(p: KernelProgram) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for scope, body in p.regions():
        names = out.setdefault(scope, set())
        for _site, ins in walk(body, ""):
            if ins.result is not None:
                names.add(ins.result)
    return out


def reg_node(scope: str, name: str, defs: dict[str, set[str]]) -> str:
    if scope != "prologue" and name in defs.get(scope, ()):
        return f"{scope}:%{name}"
    return f"prologue:%{name}"


def _with_line(site: str, ins: Instr) -> str:
    return site if ins.line is None else f"{site} (line {ins.line})"


# constraint insertion -------------------------------------------------------


def _required_for(ins: Instr, copy_default: str) -> list[tuple[Reg, str, str]]:
    if ins.op in DOT_OPS and len(ins.args) >= 2:
        out = []
        for arg, enc in zip(ins.args[:2], ("mma_a", "mma_b")):
            if isinstance(arg, Reg):
                out.append((arg, enc, "required"))
        return out
    if ins.op == "async_copy" and len(ins.args) >= 3 and isinstance(ins.args[-2], Reg):
        return [(ins.args[-2], copy_default, "default")]
    return []


def _insert_block(block: list[Instr], copy_default: str) -> list[Instr]:
    out: list[Instr] = []
    for ins in block:
        if ins.body is not None:
            ins.body = _insert_block(ins.body, copy_default)
        if ins.orelse is not None:
            ins.orelse = _insert_block(ins.orelse, copy_default)
        wanted = _required_for(ins, copy_default)
        if wanted:
            # requires already sitting directly in front of this instruction
            present = []
            for prev in reversed(out):
                if prev.op != "require_layout":
                    break
                present.append(prev)
            for reg, enc, prio in wanted:
                req = Instr("require_layout", args=[reg, Word(enc), Word(prio)], line=ins.line)
                if not any(r == req for r in present):
                    out.append(req)
        out.append(ins)
    return out


def insert_constraints(p: KernelProgram, copy_default: str = COPY_DEFAULT) -> KernelProgram:
    """Materialize ``require_layout`` ops for dot operands (required MMA roles)
    and async-copy destinations (``copy_default`` at default priority). Idempotent."""
    if copy_default not in ENCODINGS:
        raise ValueError(f"unknown encoding {copy_default!r}")
    out = copy.deepcopy(p)
    out.prologue = _insert_block(out.prologue, copy_default)
    for task in out.tasks:
        task.body = _insert_block(task.body, copy_default)
    return out


# graph construction ---------------------------------------------------------


def build_graph(p: KernelProgram) -> LayoutGraph:
    g = LayoutGraph()
    defs = _scope_defs(p)
    bufs = p.buffers
    g.buffers = {f"@{n}" for n in bufs}
    g.nodes |= g.buffers
    for b in bufs.values():
        if b.layout is not None:
            g.constraints.append(LayoutConstraint(f"@{b.name}", b.layout, PRIORITIES["user"], f"buffer @{b.name}"))
    for scope, body in p.regions():
        for site, ins in walk(body, f"{scope}:"):
            node = lambda r: reg_node(scope, r.name, defs)  # noqa: E731
            res = reg_node(scope, ins.result, defs) if ins.result is not None else None
            if res is not None:
                g.nodes.add(res)
            a = ins.args
            if ins.op == "local_view" and a and isinstance(a[0], Sym) and a[0].name in bufs:
                g.edges.append(Edge(f"@{a[0].name}", res, transparent=True))
            elif ins.op == "remote_view" and a and isinstance(a[0], Reg):
                g.edges.append(Edge(node(a[0]), res, transparent=True))
            elif ins.op in ("local_load", "mov", "trans") and a and isinstance(a[0], Reg):
                g.edges.append(Edge(node(a[0]), res, flip=ins.op == "trans"))
            elif ins.op == "local_store" and len(a) == 2 and all(isinstance(x, Reg) for x in a):
                g.edges.append(Edge(node(a[1]), node(a[0])))
            elif ins.op == "async_remote_store" and len(a) == 3 and isinstance(a[0], Reg) and isinstance(a[1], Reg):
                g.edges.append(Edge(node(a[1]), node(a[0])))
            elif ins.op == "require_layout" and a and isinstance(a[0], Reg) and isinstance(a[1], Word):
                prio = a[2].text if len(a) == 3 and isinstance(a[2], Word) else "user"
                g.constraints.append(
                    LayoutConstraint(node(a[0]), a[1].text, PRIORITIES.get(prio, 2), _with_line(site, ins))
                )
            for r in ins.regs_used():
                g.nodes.add(reg_node(scope, r, defs))
    for e in g.edges:
        g.nodes.add(e.src)
        g.nodes.add(e.dst)
    for c in g.constraints:
        g.nodes.add(c.value)
    return g


def _seed(g: LayoutGraph) -> dict[str, LayoutFact]:
    facts = {n: ANY for n in g.nodes}
    for c in g.constraints:
        facts[c.value] = facts[c.value].meet(LayoutFact(frozenset({Provenance(c.site, c.encoding, c.priority)})))
    return facts


def _transfer(fact: LayoutFact, flip: bool) -> LayoutFact:
    if not flip:
        return fact
    return LayoutFact(frozenset(p.flipped() for p in fact.provenance))


def _propagate(
    g: LayoutGraph, facts: dict[str, LayoutFact], direction: str, order: Iterable[int] | None
) -> PropagationResult:
    facts = dict(facts)
    # directed arcs (from, to, flip) for this pass
    arcs: list[tuple[str, str, bool]] = []
    idx = list(order) if order is not None else list(range(len(g.edges)))
    for i in idx:
        e = g.edges[i]
        if e.transparent:
            arcs.append((e.src, e.dst, e.flip))
            arcs.append((e.dst, e.src, e.flip))
        elif direction == "backward":
            arcs.append((e.dst, e.src, e.flip))
        else:
            arcs.append((e.src, e.dst, e.flip))
    out_arcs: dict[str, list[tuple[str, bool]]] = {}
    for s, d, f in arcs:
        out_arcs.setdefault(s, []).append((d, f))
    work = [n for n in dict.fromkeys(s for s, _d, _f in arcs) if facts[n].kind != "Any"]
    queued = set(work)
    iterations = 0
    history: list[tuple[str, LayoutFact]] = []
    while work:
        n = work.pop(0)
        queued.discard(n)
        iterations += 1
        for d, f in out_arcs.get(n, ()):
            new = facts[d].meet(_transfer(facts[n], f))
            if new != facts[d]:
                facts[d] = new
                history.append((d, new))
                if d not in queued:
                    work.append(d)
                    queued.add(d)
    return PropagationResult(facts, iterations, history)


def propagate_backward(p: KernelProgram, order: Iterable[int] | None = None) -> PropagationResult:
    """Flow constraint facts from consumers to producers until fixpoint.

    ``order`` permutes the def-use edges visited (for confluence checks).
    """
    g = build_graph(p)
    return _propagate(g, _seed(g), "backward", order)


def propagate_forward(
    p: KernelProgram, backward: PropagationResult | dict[str, LayoutFact], order: Iterable[int] | None = None
) -> PropagationResult:
    """Refine facts downstream from producers to consumers, starting from the backward result."""
    g = build_graph(p)
    start = backward.facts if isinstance(backward, PropagationResult) else backward
    facts = _seed(g)
    for n, f in start.items():
        facts[n] = facts.get(n, ANY).meet(f)
    return _propagate(g, facts, "forward", order)


def fact_lines(facts: dict[str, LayoutFact]) -> list[str]:
    """Comment lines for IR dumps: every node with a non-Any fact."""
    return [f"fact {n} = {f}" for n, f in sorted(facts.items()) if f.kind != "Any"]


# resolution -----------------------------------------------------------------


class _Frames:
    """Union-find with parity: tracks whether two nodes see each other transposed."""

    def __init__(self):
        self.parent: dict[str, str] = {}
        self.parity: dict[str, bool] = {}
        self.odd_cycles: set[str] = set()

    def find(self, x: str) -> tuple[str, bool]:
        self.parent.setdefault(x, x)
        self.parity.setdefault(x, False)
        if self.parent[x] == x:
            return x, False
        root, par = self.find(self.parent[x])
        self.parent[x] = root
        self.parity[x] = self.parity[x] ^ par
        return root, self.parity[x]

    def union(self, a: str, b: str, flip: bool):
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            if pa ^ pb != flip:
                self.odd_cycles.add(ra)
            return
        lo, hi = sorted((ra, rb))
        self.parent[hi] = lo
        self.parity[hi] = pa ^ pb ^ flip
        if hi in self.odd_cycles:
            self.odd_cycles.add(lo)


def _frames(nodes: Iterable[str], edges: Iterable[tuple[str, str, bool]]) -> _Frames:
    fr = _Frames()
    for n in sorted(nodes):
        fr.find(n)
    for s, d, f in edges:
        fr.union(s, d, f)
    return fr


def _in_frame(enc: str, parity: bool) -> str:
    return transpose_encoding(enc) if parity else enc


def _diag(code: str, items: list[tuple[LayoutConstraint, str]], extra: str = "") -> Diagnostic:
    prio = {v: k for k, v in PRIORITIES.items()}
    notes = tuple(f"{c.site}: {c.encoding} ({prio[c.priority]}) on {c.value}" for c, _ in items)
    if extra:
        notes = notes + (extra,)
    return Diagnostic(code, "conflicting layout requirements", items[0][0].site if items else None, notes)


_TIE_CODES = {3: "L001", 2: "L003", 1: "L004"}


def _pick(constraints: list[tuple[LayoutConstraint, str]], code_for_tie: dict[int, str]):
    """Highest-priority anchor-frame encoding, or a diagnostic on a tie."""
    top = max(c.priority for c, _ in constraints)
    best = [(c, enc) for c, enc in constraints if c.priority == top]
    if len({enc for _c, enc in best}) > 1:
        return None, _diag(code_for_tie[top], sorted(best, key=lambda t: t[0].site))
    return best[0][1], None


def _fresh(base: str, taken: set[str]) -> str:
    i = 0
    while f"{base}_cvt{i}" in taken:
        i += 1
    taken.add(f"{base}_cvt{i}")
    return f"{base}_cvt{i}"


def _all_regs(p: KernelProgram) -> set[str]:
    out = set()
    for _scope, body in p.regions():
        for _s, ins in walk(body, ""):
            if ins.result:
                out.add(ins.result)
            out.update(ins.regs_used())
    return out


def _rewrite_converts(block: list[Instr], defeated: dict[int, str], taken: set[str], sites: list[str], prefix: str):
    """Insert ``layout_convert`` ahead of each defeated user ``require_layout``
    and route the requirement and the next consuming use through it."""
    i = 0
    while i < len(block):
        ins = block[i]
        for sub_prefix, sub in (("/", ins.body), ("/else/", ins.orelse)):
            if sub is not None:
                _rewrite_converts(sub, defeated, taken, sites, f"{prefix}{i}{sub_prefix}")
        if id(ins) in defeated:
            src: Reg = ins.args[0]
            new = _fresh(src.name, taken)
            conv = Instr("layout_convert", result=new, args=[src, ins.args[1]], line=ins.line)
            block.insert(i, conv)
            sites.append(f"{prefix}{i}")
            ins.args = [Reg(new)] + ins.args[1:]
            for nxt in block[i + 2:]:
                if src.name in nxt.regs_used():
                    nxt.args = [Reg(new) if a == src else a for a in nxt.args]
                    nxt.attrs = {k: tuple(Reg(new) if v == src else v for v in vals) for k, vals in nxt.attrs.items()}
                    break
                if nxt.result == src.name or nxt.body is not None:
                    break
            i += 2
            continue
        i += 1


def resolve(p: KernelProgram, facts: PropagationResult | dict[str, LayoutFact] | None = None) -> ResolvedProgram:
    """Assign one concrete encoding to every value and allocation.

    The highest-priority constraint of each connected value group wins.
    Defeated user requirements on registers get a ``layout_convert`` in front
    of the consuming use; defeated defaults are dropped. Equal-priority ties
    and alias groups that need two different required encodings raise
    :class:`LayoutError`.
    """
    g = build_graph(p)
    if facts is None:
        facts = propagate_forward(p, propagate_backward(p))
    fact_map = facts.facts if isinstance(facts, PropagationResult) else facts
    arcs = [(e.src, e.dst, e.flip) for e in g.edges]
    base = _frames(g.nodes, arcs)
    groups = alias_groups(p)
    alias_arcs = []
    for members, _sites in groups:
        ms = sorted(members)
        alias_arcs += [(f"@{ms[0]}", f"@{m}", False) for m in ms[1:]]
    merged = _frames(g.nodes, arcs + alias_arcs)

    # every provenance item that reached a node names a constraint in its component
    by_site = {(c.site, c.value): c for c in g.constraints}
    diags: list[Diagnostic] = []

    def component_constraints(fr: _Frames) -> dict[str, list[tuple[LayoutConstraint, str]]]:
        out: dict[str, list[tuple[LayoutConstraint, str]]] = {}
        for c in sorted(by_site.values(), key=lambda c: (c.site, c.value)):
            root, par = fr.find(c.value)
            out.setdefault(root, []).append((c, _in_frame(c.encoding, par)))
        return out

    for root, items in sorted(component_constraints(base).items()):
        _enc, diag = _pick(items, _TIE_CODES)
        if diag is None and root in base.odd_cycles and any(
            enc in _FLIP for _c, enc in items
        ):
            diag = _diag("L001", items, "values reach each other through an odd number of transposes")
        if diag is not None:
            diags.append(diag)
    if diags:
        raise LayoutError(diags)

    merged_items = component_constraints(merged)
    alias_roots = {merged.find(f"@{sorted(ms)[0]}")[0]: sites for ms, sites in groups}
    chosen: dict[str, str] = {}
    for root, items in sorted(merged_items.items()):
        if root in alias_roots:
            req = [(c, enc) for c, enc in items if c.priority == PRIORITIES["required"]]
            if len({enc for _c, enc in req}) > 1:
                diags.append(_diag("L002", req, f"aliased by local_alias at {', '.join(alias_roots[root])}"))
                continue
        enc, diag = _pick(items, _TIE_CODES)
        if diag is not None:
            diags.append(diag)
            continue
        chosen[root] = enc
    if diags:
        raise LayoutError(diags)

    encodings: dict[str, str] = {}
    for n in sorted(g.nodes):
        root, par = merged.find(n)
        encodings[n] = _in_frame(chosen[root], par) if root in chosen else DEFAULT_ENCODING

    out = copy.deepcopy(p)
    warnings: list[Diagnostic] = []
    constrained_roots = set(chosen)
    for b in out.buffers.values():
        if merged.find(f"@{b.name}")[0] in constrained_roots:
            b.encoding = encodings[f"@{b.name}"]

    # defeated user constraints
    types = validate(p).types
    user_sites: dict[str, LayoutConstraint] = {}
    for c in g.constraints:
        if c.priority == PRIORITIES["user"] and c.encoding != encodings[c.value]:
            user_sites[c.site] = c
    defeated: dict[int, str] = {}
    orig_sites: dict[str, Instr] = {}
    for scope, body in out.regions():
        for site, ins in walk(body, f"{scope}:"):
            if ins.op == "require_layout":
                orig_sites[_with_line(site, ins)] = ins
    for site, c in sorted(user_sites.items()):
        ins = orig_sites.get(site)
        scope, _, reg = c.value.partition(":%")
        ty = types.get((scope, reg)) if reg else None
        if ins is None or ty is None or ty.kind != "tile":
            warnings.append(
                Diagnostic(
                    "W001",
                    f"requested {c.encoding} overridden by {encodings[c.value]}",
                    site,
                    notes=(f"{c.value} storage keeps one encoding; no conversion inserted",),
                    severity="warning",
                )
            )
            continue
        defeated[id(ins)] = site
    conv_sites: list[str] = []
    if defeated:
        taken = _all_regs(out)
        _rewrite_converts(out.prologue, defeated, taken, conv_sites, "prologue:")
        for i, task in enumerate(out.tasks):
            _rewrite_converts(task.body, defeated, taken, conv_sites, f"{out.task_scope(i)}:")
    return ResolvedProgram(out, encodings, conv_sites, warnings)


def run_layout(p: KernelProgram, copy_default: str = COPY_DEFAULT) -> ResolvedProgram:
    """insert_constraints, both propagation passes and resolution."""
    q = insert_constraints(p, copy_default)
    back = propagate_backward(q)
    fwd = propagate_forward(q, back)
    return resolve(q, fwd)


def dot_operand_encodings(r: ResolvedProgram) -> list[tuple[str, str, str, str]]:
    """Linear scan: ``(site, role, expected, actual)`` for every dot operand."""
    p = r.program
    defs = _scope_defs(p)
    out = []
    for scope, body in p.regions():
        for site, ins in walk(body, f"{scope}:"):
            if ins.op in DOT_OPS:
                for arg, role in zip(ins.args[:2], ("mma_a", "mma_b")):
                    if isinstance(arg, Reg):
                        out.append((site, role, role, r.encodings.get(reg_node(scope, arg.name, defs), DEFAULT_ENCODING)))
    return out


__all__ = [
    "ANY",
    "COPY_DEFAULT",
    "ENCODINGS",
    "LayoutConstraint",
    "LayoutFact",
    "LayoutGraph",
    "PropagationResult",
    "Provenance",
    "ResolvedProgram",
    "build_graph",
    "dot_operand_encodings",
    "encoding_parts",
    "fact_lines",
    "insert_constraints",
    "propagate_backward",
    "propagate_forward",
    "resolve",
    "run_layout",
    "transpose_encoding",
]
