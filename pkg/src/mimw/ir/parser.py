"""Line-oriented parser for the textual kernel format.

One statement per line; ``#`` starts a comment. The grammar is summarized
in the README. The parser checks structure only (known opcodes, result
arity, balanced blocks); name resolution and typing belong to validation.
"""

from __future__ import annotations

import re

from ..errors import ParseError
from .nodes import (
    CONTROL_OPS,
    OPCODES,
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
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<attr>[A-Za-z_][A-Za-z0-9_]*\()
  | (?P<reg>%[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<sym>@[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<num>[-+]?(?:inf\b|nan\b|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?))
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}=)])
    """,
    re.VERBOSE,
)
_INT = re.compile(r"[-+]?\d+$")


class _Tok:
    __slots__ = ("kind", "value", "col")

    def __init__(self, kind, value, col):
        self.kind = kind
        self.value = value
        self.col = col

    def __repr__(self):
        return f"{self.kind}:{self.value!r}"


def _number(text: str):
    if _INT.match(text):
        return int(text)
    return float(text)


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    attr_stack: list[_Tok] | None = None
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise ParseError(lineno, pos + 1, "a token", line[pos:pos + 10])
        kind = m.lastgroup
        text = m.group()
        col = pos + 1
        pos = m.end()
        if kind == "ws":
            continue
        if kind == "attr":
            if attr_stack is not None:
                raise ParseError(lineno, col, "')' before nested attribute", text)
            attr_stack = []
            toks.append(_Tok("attr", (text[:-1], attr_stack), col))
            continue
        if kind == "punct" and text == ")":
            if attr_stack is None:
                raise ParseError(lineno, col, "an operand", ")")
            attr_stack = None
            continue
        if kind == "reg":
            tok = _Tok("op", Reg(text[1:]), col)
        elif kind == "sym":
            tok = _Tok("op", Sym(text[1:]), col)
        elif kind == "num":
            tok = _Tok("op", _number(text), col)
        elif kind == "word":
            tok = _Tok("word", text, col)
        else:
            tok = _Tok("punct", text, col)
        if attr_stack is not None:
            if tok.kind == "punct":
                raise ParseError(lineno, col, "')'", text)
            attr_stack.append(Word(tok.value) if tok.kind == "word" else tok.value)
        else:
            toks.append(tok)
    if attr_stack is not None:
        raise ParseError(lineno, len(line) + 1, "')'", "end of line")
    return toks


def _operand(tok: _Tok):
    if tok.kind == "word":
        return Word(tok.value)
    return tok.value


def _ints(vals, lineno, col, what, n=None) -> tuple[int, ...]:
    if not vals or not all(isinstance(v, int) for v in vals):
        raise ParseError(lineno, col, f"integer extents in {what}(...)")
    if n is not None and len(vals) != n:
        raise ParseError(lineno, col, f"{n} integers in {what}(...)")
    return tuple(vals)


def _one_int(vals, lineno, col, what) -> int:
    return _ints(vals, lineno, col, what, 1)[0]


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.program: KernelProgram | None = None
        # stack entries: (instr or task, block list)
        self.stack: list[tuple[object, list[Instr]]] = []
        self.seen_code = False
        self.in_tasks = False

    def parse(self) -> KernelProgram:
        for lineno, raw in enumerate(self.lines, start=1):
            line = raw.split("#", 1)[0]
            toks = _tokenize(line, lineno)
            if not toks:
                continue
            if self.program is None:
                self._header(toks, lineno)
            else:
                self._statement(toks, lineno)
        if self.program is None:
            raise ParseError(len(self.lines) + 1, 1, "'kernel' header", "end of input")
        if self.stack:
            raise ParseError(len(self.lines) + 1, 1, "'}'", "end of input")
        return self.program

    def _header(self, toks, lineno):
        if toks[0].kind != "word" or toks[0].value != "kernel":
            raise ParseError(lineno, toks[0].col, "'kernel' header", str(toks[0].value))
        if len(toks) < 2 or toks[1].kind != "word":
            raise ParseError(lineno, toks[0].col + 7, "kernel name")
        p = KernelProgram(name=toks[1].value)
        for tok in toks[2:]:
            if tok.kind != "attr":
                raise ParseError(lineno, tok.col, "header attribute", str(tok.value))
            key, vals = tok.value
            if key == "grid":
                p.grid = _ints(vals, lineno, tok.col, key, 3)
            elif key == "cluster":
                p.cluster = _ints(vals, lineno, tok.col, key, 3)
            elif key == "warps":
                p.num_warps = _one_int(vals, lineno, tok.col, key)
            elif key == "tiles":
                p.tiles = _one_int(vals, lineno, tok.col, key)
            else:
                raise ParseError(lineno, tok.col, "grid/cluster/warps/tiles", key)
        self.program = p

    def _statement(self, toks, lineno):
        head = toks[0]
        if head.kind == "word" and head.value in ("param", "buffer", "barrier"):
            if self.seen_code:
                raise ParseError(lineno, head.col, "instruction (declarations come first)", head.value)
            getattr(self, f"_decl_{head.value}")(toks, lineno)
            return
        if head.kind == "punct" and head.value == "}":
            self._close(toks, lineno)
            return
        if head.kind == "word" and head.value == "task":
            self._task(toks, lineno)
            return
        self.seen_code = True
        if not self.stack and self.in_tasks:
            raise ParseError(lineno, head.col, "'task' region", str(head.value))
        ins = self._instr(toks, lineno)
        self._current().append(ins)
        if ins.op in CONTROL_OPS:
            self.stack.append((ins, ins.body))

    def _current(self) -> list[Instr]:
        if self.stack:
            return self.stack[-1][1]
        return self.program.prologue

    def _decl_param(self, toks, lineno):
        if len(toks) != 3 or toks[1].kind != "word":
            raise ParseError(lineno, toks[0].col, "param <name> tensor(...)|scalar")
        name = toks[1].value
        kind = toks[2]
        if kind.kind == "attr" and kind.value[0] == "tensor":
            shape = _ints(kind.value[1], lineno, kind.col, "tensor")
            self.program.params.append(TensorParam(name, shape))
        elif kind.kind == "attr" and kind.value[0] == "scalar":
            vals = kind.value[1]
            if len(vals) != 1 or not isinstance(vals[0], (int, float)):
                raise ParseError(lineno, kind.col, "one number in scalar(...)")
            self.program.params.append(ScalarParam(name, vals[0]))
        elif kind.kind == "word" and kind.value == "scalar":
            self.program.params.append(ScalarParam(name))
        else:
            raise ParseError(lineno, kind.col, "tensor(...) or scalar", str(kind.value))

    def _decl_buffer(self, toks, lineno):
        if len(toks) < 2 or toks[1].kind != "word":
            raise ParseError(lineno, toks[0].col, "buffer name")
        buf = BufferDecl(name=toks[1].value, shape=())
        for tok in toks[2:]:
            if tok.kind == "word":
                buf.elem = tok.value
                continue
            if tok.kind != "attr":
                raise ParseError(lineno, tok.col, "buffer attribute", str(tok.value))
            key, vals = tok.value
            if key == "shape":
                buf.shape = _ints(vals, lineno, tok.col, key)
            elif key == "stages":
                buf.stages = _one_int(vals, lineno, tok.col, key)
            elif key in ("storage", "layout", "encoding"):
                if len(vals) != 1 or not isinstance(vals[0], Word):
                    raise ParseError(lineno, tok.col, f"one keyword in {key}(...)")
                setattr(buf, key, vals[0].text)
            else:
                raise ParseError(lineno, tok.col, "shape/stages/storage/layout/encoding", key)
        if not buf.shape:
            raise ParseError(lineno, toks[0].col, "shape(...) on buffer")
        self.program.allocations.append(buf)

    def _decl_barrier(self, toks, lineno):
        if len(toks) < 2 or toks[1].kind != "word":
            raise ParseError(lineno, toks[0].col, "barrier name")
        bar = BarrierDecl(name=toks[1].value)
        for tok in toks[2:]:
            if tok.kind != "attr" or tok.value[0] not in ("count", "arrive"):
                raise ParseError(lineno, tok.col, "count(...) or arrive(...)", str(tok.value))
            key, vals = tok.value
            setattr(bar, key, _one_int(vals, lineno, tok.col, key))
        self.program.allocations.append(bar)

    def _task(self, toks, lineno):
        if self.stack:
            raise ParseError(lineno, toks[0].col, "'}' before a new task region")
        if toks[-1].kind != "punct" or toks[-1].value != "{":
            raise ParseError(lineno, toks[-1].col, "'{'")
        self.seen_code = True
        self.in_tasks = True
        task = TaskRegion(kind="explicit", line=lineno)
        for tok in toks[1:-1]:
            if tok.kind == "word" and tok.value == "default":
                task.kind = "default"
            elif tok.kind == "attr" and tok.value[0] == "warps":
                task.num_warps = _one_int(tok.value[1], lineno, tok.col, "warps")
            elif tok.kind == "attr" and tok.value[0] == "replicate":
                task.replicate = _one_int(tok.value[1], lineno, tok.col, "replicate")
            elif tok.kind == "attr" and tok.value[0] == "registers":
                task.registers = _one_int(tok.value[1], lineno, tok.col, "registers")
            else:
                raise ParseError(lineno, tok.col, "default/warps/replicate/registers", str(tok.value))
        self.program.tasks.append(task)
        self.stack.append((task, task.body))

    def _close(self, toks, lineno):
        if not self.stack:
            raise ParseError(lineno, toks[0].col, "a statement", "}")
        owner, block = self.stack.pop()
        rest = toks[1:]
        if not rest:
            return
        if (
            isinstance(owner, Instr)
            and owner.op == "if"
            and block is owner.body
            and len(rest) == 2
            and rest[0].kind == "word"
            and rest[0].value == "else"
            and rest[1].kind == "punct"
            and rest[1].value == "{"
        ):
            owner.orelse = []
            self.stack.append((owner, owner.orelse))
            return
        raise ParseError(lineno, rest[0].col, "end of line after '}'", str(rest[0].value))

    def _instr(self, toks, lineno) -> Instr:
        result = None
        i = 0
        if toks[0].kind == "op" and isinstance(toks[0].value, Reg):
            if len(toks) < 3 or toks[1].kind != "punct" or toks[1].value != "=":
                raise ParseError(lineno, toks[0].col, "'=' after result register")
            result = toks[0].value.name
            i = 2
        op_tok = toks[i]
        if op_tok.kind != "word":
            raise ParseError(lineno, op_tok.col, "opcode", str(op_tok.value))
        op = op_tok.value
        if op == "for" and result is None and len(toks) > 1:
            return self._for(toks, lineno)
        if op not in OPCODES:
            raise ParseError(lineno, op_tok.col, "known opcode", op)
        has_result = OPCODES[op][0]
        if op in ("while", "if"):
            return self._cond(op, toks, lineno)
        if has_result and result is None:
            raise ParseError(lineno, op_tok.col, f"result register for '{op}'")
        if not has_result and result is not None:
            raise ParseError(lineno, toks[0].col, f"no result register for '{op}'")
        ins = Instr(op=op, result=result, line=lineno)
        for tok in toks[i + 1:]:
            if tok.kind == "attr":
                key, vals = tok.value
                if key in ins.attrs:
                    raise ParseError(lineno, tok.col, "distinct attribute names", key)
                ins.attrs[key] = tuple(vals)
            elif tok.kind == "punct":
                raise ParseError(lineno, tok.col, "operand", tok.value)
            else:
                if ins.attrs:
                    raise ParseError(lineno, tok.col, "attributes after operands", str(tok.value))
                ins.args.append(_operand(tok))
        return ins

    def _for(self, toks, lineno) -> Instr:
        # for %i = lo to hi [step s] {
        t = toks
        if (
            len(t) < 7
            or t[1].kind != "op"
            or not isinstance(t[1].value, Reg)
            or t[2].kind != "punct"
            or t[2].value != "="
            or t[4].kind != "word"
            or t[4].value != "to"
        ):
            raise ParseError(lineno, t[0].col, "for %r = lo to hi [step s] {")
        if t[-1].kind != "punct" or t[-1].value != "{":
            raise ParseError(lineno, t[-1].col, "'{'")
        lo, hi = _operand(t[3]), _operand(t[5])
        step = 1
        if len(t) == 9 and t[6].kind == "word" and t[6].value == "step":
            step = _operand(t[7])
        elif len(t) != 7:
            raise ParseError(lineno, t[6].col, "'step' or '{'", str(t[6].value))
        return Instr(op="for", result=t[1].value.name, args=[lo, hi, step], body=[], line=lineno)

    def _cond(self, op, toks, lineno) -> Instr:
        if len(toks) != 3 or toks[2].kind != "punct" or toks[2].value != "{":
            raise ParseError(lineno, toks[0].col, f"{op} <value> {{")
        return Instr(op=op, args=[_operand(toks[1])], body=[], line=lineno)


def parse_kernel(text: str) -> KernelProgram:
    """Parse kernel source text; raises :class:`ParseError` with line/column."""
    return _Parser(text).parse()
