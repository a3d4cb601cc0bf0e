from .nodes import (
    DOT_OPS,
    ENCODINGS,
    OPCODES,
    PRIORITIES,
    BarrierDecl,
    BufferDecl,
    Instr,
    KernelProgram,
    Reg,
    ScalarParam,
    Sym,
    TaskRegion,
    TensorParam,
    Word,
    alias_groups,
    expand_tasks,
    walk,
    walk_program,
    warp_assignment,
)
from .parser import parse_kernel
from .printer import print_ir
from .validate import SMEM_CAPACITY, Ty, ValidationReport, validate

__all__ = [
    "DOT_OPS", "ENCODINGS", "OPCODES", "PRIORITIES", "SMEM_CAPACITY",
    "BarrierDecl", "BufferDecl", "Instr", "KernelProgram", "Reg", "ScalarParam",
    "Sym", "TaskRegion", "TensorParam", "Ty", "ValidationReport", "Word",
    "alias_groups", "expand_tasks", "parse_kernel", "print_ir", "validate",
    "walk", "walk_program", "warp_assignment",
]
