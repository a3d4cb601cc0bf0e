"""``mimw`` command line: check, run, trace, fuzz, corpus.

Exit codes: 0 success, 2 diagnostics, 3 simulation fault (or a race with
``--strict``, or races during ``fuzz``), 4 oracle mismatch or schedule
divergence. ``MIMW_COLOR=0`` turns off colored diagnostics.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import Diagnostic, SimFault
from .ir import ENCODINGS
from .kernels.cases import KernelCase, discover, load_case, make_inputs
from .layout import COPY_DEFAULT
from .pipeline import STAGES, compile_program
from .sim import SimConfig, fuzzed_config, simulate
from .tensorio import read_tensor, write_tensor

EXIT_OK = 0
EXIT_DIAGNOSTICS = 2
EXIT_FAULT = 3
EXIT_MISMATCH = 4


def _color() -> bool:
    env = os.environ.get("MIMW_COLOR")
    if env is not None:
        return env != "0"
    return sys.stderr.isatty()


def _report(diags: list[Diagnostic]) -> None:
    color = _color()
    for d in diags:
        print(d.render(color), file=sys.stderr)


def _compile(path: Path, args, dump_after=()):
    res = compile_program(path.read_text(), dump_after, args.copy_default)
    _report(res.warnings)
    if not res.ok:
        _report(res.diagnostics)
    return res


def _sim_overrides(pairs: list[str]) -> dict:
    names = {f.name: f.type for f in dataclasses.fields(SimConfig)}
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or key not in names:
            raise SystemExit(f"mimw: bad --set {pair!r}; keys: {', '.join(sorted(names))}")
        if key == "scheduler":
            out[key] = value
        elif key in ("race_detector", "strict"):
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = int(value)
    return out


def _sidecar(path: Path) -> KernelCase | None:
    side = path.with_suffix(".case")
    return load_case(side) if side.exists() else None


def _inputs(program, seed: int, inputs_dir: str | None, case: KernelCase | None) -> dict[str, np.ndarray]:
    gens = case.inputs if case is not None else {}
    outputs = case.outputs if case is not None else ()
    data = make_inputs(program, seed, gens, outputs)
    if inputs_dir:
        for name in program.tensor_params:
            f = Path(inputs_dir) / f"{name}.bin"
            if f.exists():
                data[name] = read_tensor(f)
    return data


def _fault(e: SimFault) -> int:
    print(f"fault: {e}", file=sys.stderr)
    for key, value in e.details.items():
        print(f"  {key}: {value}", file=sys.stderr)
    return EXIT_FAULT


def cmd_check(args) -> int:
    res = _compile(Path(args.kernel), args, args.dump_after or ())
    for stage in STAGES:
        if stage in res.dumps:
            sys.stdout.write(res.dumps[stage])
    return EXIT_OK if res.ok else EXIT_DIAGNOSTICS


def _simulate(args, trace_out: str | None = None) -> int:
    path = Path(args.kernel)
    res = _compile(path, args)
    if not res.ok:
        return EXIT_DIAGNOSTICS
    case = _sidecar(path)
    overrides = dict(case.sim) if case is not None else {}
    overrides.update(_sim_overrides(args.set))
    overrides.setdefault("seed", args.seed)
    if args.scheduler:
        overrides["scheduler"] = args.scheduler
    if args.strict:
        overrides["strict"] = True
    cfg = SimConfig(**overrides)
    inputs = _inputs(res.program, args.seed, args.inputs, case)
    try:
        out = simulate(res.resolved, inputs, cfg)
    except SimFault as e:
        if trace_out:
            Path(trace_out).write_text("".join(json.dumps(r) + "\n" for r in e.trace))
        return _fault(e)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for name, arr in out.outputs.items():
            write_tensor(d / f"{name}.bin", arr)
    if trace_out:
        Path(trace_out).write_text(out.trace_text())
    print(json.dumps(out.summary, sort_keys=True))
    if args.strict and out.races:
        return EXIT_FAULT
    return EXIT_OK


def cmd_run(args) -> int:
    return _simulate(args)


def cmd_trace(args) -> int:
    return _simulate(args, args.trace_out)


def fuzz_program(program, inputs, schedules: int, base_seed: int = 0, overrides=None):
    """Run ``schedules`` fuzzed schedules. Returns (first outputs, problems)
    where problems lists ``(seed, kind, text)`` for faults, races and
    outputs that differ from the first schedule."""
    overrides = overrides or {}
    reference = None
    problems = []
    for k in range(schedules):
        seed = base_seed + k
        try:
            res = simulate(program, inputs, fuzzed_config(seed, **overrides))
        except SimFault as e:
            problems.append((seed, "fault", str(e)))
            continue
        if res.races:
            problems.append((seed, "race", json.dumps(res.races[0], sort_keys=True)))
        if reference is None:
            reference = res.outputs
        else:
            for name, arr in res.outputs.items():
                if not np.array_equal(arr, reference[name]):
                    problems.append((seed, "diverged", f"@{name} differs from the first schedule"))
    return reference, problems


def cmd_fuzz(args) -> int:
    path = Path(args.kernel)
    res = _compile(path, args)
    if not res.ok:
        return EXIT_DIAGNOSTICS
    case = _sidecar(path)
    inputs = _inputs(res.program, args.seed, args.inputs, case)
    overrides = dict(case.sim) if case is not None else {}
    overrides.update(_sim_overrides(args.set))
    overrides.pop("seed", None)
    overrides.pop("scheduler", None)
    reference, problems = fuzz_program(res.resolved, inputs, args.schedules, args.seed, overrides)
    for seed, kind, text in problems:
        print(f"schedule {seed}: {kind}: {text}", file=sys.stderr)
    kinds = {k for _s, k, _t in problems}
    if kinds & {"fault", "race"}:
        return EXIT_FAULT
    if "diverged" in kinds:
        return EXIT_MISMATCH
    if case is not None and reference is not None:
        errs = case.check(reference, inputs)
        bad = {k: v for k, v in errs.items() if not v <= case.tolerance}
        if bad:
            print(f"oracle mismatch: {bad}", file=sys.stderr)
            return EXIT_MISMATCH
    print(f"{args.schedules} schedules: identical outputs, no races")
    return EXIT_OK


def run_case(case: KernelCase, seed: int | None = None) -> tuple[int, str]:
    """Compile, simulate and compare one case; returns (exit code, one-line report)."""
    res = compile_program(case.source.read_text())
    if not res.ok:
        return EXIT_DIAGNOSTICS, "; ".join(d.code for d in res.diagnostics)
    inputs = case.make_inputs(res.program, seed)
    try:
        out = simulate(res.resolved, inputs, SimConfig(**case.sim))
    except SimFault as e:
        return EXIT_FAULT, str(e)
    errs = case.check(out.outputs, inputs)
    text = " ".join(f"{k}={v:.3g}" for k, v in errs.items())
    if out.races:
        return EXIT_FAULT, f"{len(out.races)} race(s); {text}"
    if any(not v <= case.tolerance for v in errs.values()):
        return EXIT_MISMATCH, f"{text} (tolerance {case.tolerance:g})"
    return EXIT_OK, text


def cmd_corpus(args) -> int:
    cases = discover(args.dir)
    if not cases:
        print("no cases found", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    worst = EXIT_OK
    for case in cases:
        code, text = run_case(case)
        status = "ok" if code == EXIT_OK else "FAIL"
        print(f"{status:4} {case.name}: {text}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mimw", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def layout_flag(p):
        p.add_argument("--copy-default", default=COPY_DEFAULT, choices=ENCODINGS,
                       help="default encoding for async-copy destinations")

    p = sub.add_parser("check", help="run the pass pipeline and report diagnostics")
    p.add_argument("kernel")
    layout_flag(p)
    p.add_argument("--dump-after", action="append", choices=STAGES, metavar="STAGE",
                   help=f"print the IR after a stage ({', '.join(STAGES)}); repeatable")
    p.set_defaults(fn=cmd_check)

    def sim_flags(p):
        p.add_argument("kernel")
        p.add_argument("--seed", type=int, default=0, help="input and schedule seed")
        p.add_argument("--inputs", metavar="DIR", help="read <param>.bin tensors from DIR")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="SimConfig override")
        layout_flag(p)

    for name, fn, helptext in (("run", cmd_run, "simulate a kernel"), ("trace", cmd_trace, "simulate and write the event trace")):
        p = sub.add_parser(name, help=helptext)
        sim_flags(p)
        p.add_argument("--out", metavar="DIR", help="write <param>.bin for every tensor")
        p.add_argument("--scheduler", choices=("round_robin", "seeded_random"))
        p.add_argument("--strict", action="store_true", help="halt on the first race and exit 3 on any race")
        if name == "trace":
            p.add_argument("--trace-out", required=True, metavar="FILE")
        p.set_defaults(fn=fn)

    p = sub.add_parser("fuzz", help="compare outputs across seeded random schedules")
    sim_flags(p)
    p.add_argument("--schedules", type=int, default=100)
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("corpus", help="run every shipped case against its oracle")
    p.add_argument("--dir", help="directory of .case files (default: shipped corpus)")
    p.set_defaults(fn=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
