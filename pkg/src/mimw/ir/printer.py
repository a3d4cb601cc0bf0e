"""Canonical text printer; ``parse_kernel(print_ir(p))`` reproduces ``p``."""

from __future__ import annotations

from .nodes import BarrierDecl, BufferDecl, Instr, KernelProgram, Reg, ScalarParam, Sym, TensorParam, Word


def fmt_operand(v) -> str:
    if isinstance(v, (Reg, Sym, Word)):
        return str(v)
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    raise TypeError(f"cannot print operand {v!r}")


def _ints(xs) -> str:
    return " ".join(str(x) for x in xs)


def _attrs(attrs: dict) -> str:
    return "".join(f" {k}({' '.join(fmt_operand(v) for v in vals)})" for k, vals in attrs.items())


def _instr_lines(ins: Instr, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if ins.op == "for":
        lo, hi, step = ins.args
        head = f"for %{ins.result} = {fmt_operand(lo)} to {fmt_operand(hi)}"
        if step != 1:
            head += f" step {fmt_operand(step)}"
        out.append(f"{pad}{head} {{")
    elif ins.op in ("while", "if"):
        out.append(f"{pad}{ins.op} {fmt_operand(ins.args[0])} {{")
    else:
        text = ins.op
        if ins.result is not None:
            text = f"%{ins.result} = {text}"
        if ins.args:
            text += " " + " ".join(fmt_operand(a) for a in ins.args)
        text += _attrs(ins.attrs)
        out.append(pad + text)
        return
    for sub in ins.body or []:
        _instr_lines(sub, indent + 1, out)
    if ins.orelse is not None:
        out.append(f"{pad}}} else {{")
        for sub in ins.orelse:
            _instr_lines(sub, indent + 1, out)
    out.append(f"{pad}}}")


def format_block(block: list[Instr], indent: int = 0) -> list[str]:
    out: list[str] = []
    for ins in block:
        _instr_lines(ins, indent, out)
    return out


def print_ir(p: KernelProgram, stage: str | None = None, facts: list[str] | None = None) -> str:
    """Render ``p`` canonically. ``stage`` adds a ``# stage:`` header line;
    ``facts`` are appended as trailing comment lines (ignored by the parser)."""
    out: list[str] = []
    if stage is not None:
        out.append(f"# stage: {stage}")
    head = f"kernel {p.name} grid({_ints(p.grid)}) cluster({_ints(p.cluster)}) warps({p.num_warps})"
    if p.tiles is not None:
        head += f" tiles({p.tiles})"
    out.append(head)
    for prm in p.params:
        if isinstance(prm, TensorParam):
            out.append(f"param {prm.name} tensor({_ints(prm.shape)})")
        elif isinstance(prm, ScalarParam):
            if prm.default is None:
                out.append(f"param {prm.name} scalar")
            else:
                out.append(f"param {prm.name} scalar({fmt_operand(prm.default)})")
    for a in p.allocations:
        if isinstance(a, BufferDecl):
            line = (
                f"buffer {a.name} shape({_ints(a.shape)}) {a.elem} stages({a.stages}) storage({a.storage})"
            )
            if a.layout is not None:
                line += f" layout({a.layout})"
            if a.encoding is not None:
                line += f" encoding({a.encoding})"
            out.append(line)
        elif isinstance(a, BarrierDecl):
            out.append(f"barrier {a.name} count({a.count}) arrive({a.arrive})")
    out.extend(format_block(p.prologue))
    for task in p.tasks:
        head = "task"
        if task.kind == "default":
            head += " default"
        if task.num_warps is not None:
            head += f" warps({task.num_warps})"
        if task.replicate != 1:
            head += f" replicate({task.replicate})"
        if task.registers is not None:
            head += f" registers({task.registers})"
        out.append(head + " {")
        out.extend(format_block(task.body, 1))
        out.append("}")
    for f in facts or []:
        out.append(f"# {f}")
    return "\n".join(out) + "\n"
