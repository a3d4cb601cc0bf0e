"""The pass pipeline: parse, validate, insert_constraints, backward,
forward, resolve, legalize_cluster."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Diagnostic, DiagnosticError, ParseError
from .ir import KernelProgram, parse_kernel, print_ir, validate
from .layout import (
    COPY_DEFAULT,
    PropagationResult,
    ResolvedProgram,
    fact_lines,
    insert_constraints,
    propagate_backward,
    propagate_forward,
    resolve,
)
from .sync import legalize_cluster

STAGES = ("parse", "validate", "insert_constraints", "backward", "forward", "resolve", "legalize_cluster")


@dataclass
class CompileResult:
    program: KernelProgram | None = None
    resolved: ResolvedProgram | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)
    dumps: dict[str, str] = field(default_factory=dict)
    failed_stage: str | None = None

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def _dump(p: KernelProgram, stage: str, facts: PropagationResult | None = None) -> str:
    return print_ir(p, stage, fact_lines(facts.facts) if facts is not None else None)


def compile_program(source: str | KernelProgram, dump_after=(), copy_default: str = COPY_DEFAULT) -> CompileResult:
    """Run every stage in order, stopping at the first one that reports errors.

    ``dump_after`` names stages whose canonical IR is recorded in ``dumps``;
    the propagation stages append the non-trivial facts as comment lines.
    """
    want = set(dump_after)
    bad = want - set(STAGES)
    if bad:
        raise ValueError(f"unknown stage(s): {sorted(bad)}")
    res = CompileResult()

    def fail(stage, diags):
        res.failed_stage = stage
        res.diagnostics = list(diags)
        return res

    if isinstance(source, KernelProgram):
        p = source
    else:
        try:
            p = parse_kernel(source)
        except ParseError as e:
            return fail("parse", [Diagnostic("P001", f"parse error: expected {e.expected}", f"line {e.line}:{e.col}",
                                             notes=(f"found {e.found!r}",) if e.found else ())])
    if "parse" in want:
        res.dumps["parse"] = _dump(p, "parse")

    report = validate(p)
    res.warnings += report.warnings
    if not report.ok:
        return fail("validate", report.errors)
    if "validate" in want:
        res.dumps["validate"] = _dump(p, "validate")

    p = insert_constraints(p, copy_default)
    if "insert_constraints" in want:
        res.dumps["insert_constraints"] = _dump(p, "insert_constraints")
    back = propagate_backward(p)
    if "backward" in want:
        res.dumps["backward"] = _dump(p, "backward", back)
    fwd = propagate_forward(p, back)
    if "forward" in want:
        res.dumps["forward"] = _dump(p, "forward", fwd)
    try:
        resolved = resolve(p, fwd)
    except DiagnosticError as e:
        return fail("resolve", e.diagnostics)
    res.warnings += resolved.warnings
    p = resolved.program
    if "resolve" in want:
        res.dumps["resolve"] = _dump(p, "resolve")

    try:
        p = legalize_cluster(p)
    except DiagnosticError as e:
        return fail("legalize_cluster", e.diagnostics)
    if "legalize_cluster" in want:
        res.dumps["legalize_cluster"] = _dump(p, "legalize_cluster")
    resolved.program = p
    res.program = p
    res.resolved = resolved
    return res


def compile_or_raise(source: str | KernelProgram) -> KernelProgram:
    res = compile_program(source)
    if not res.ok:
        raise DiagnosticError(res.diagnostics)
    return res.program
