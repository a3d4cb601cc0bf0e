"""Kernel cases: a ``.mimw`` program plus a sidecar ``.case`` file.

Case files are ``key = value`` lines; ``#`` starts a comment.

    name = gemm_pipeline          # defaults to the file stem
    kernel = gemm_pipeline.mimw   # defaults to <stem>.mimw
    seed = 0                      # input generator seed
    tolerance = 1e-4              # relative error bound per output
    oracle = gemm                 # key into ORACLES
    outputs = c                   # comma separated tensors to check
    input.k1 = ones               # uniform (default) | ones | zeros | arange
    oracle.eps = 1e-5             # extra keyword argument for the oracle
    sim.clc_latency = 5           # SimConfig override

Tensor params not listed in ``outputs`` are inputs. ``uniform`` draws from
[-1, 1) with ``numpy.random.default_rng(seed)`` in parameter order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..ir import KernelProgram, parse_kernel
from . import oracles

KERNEL_DIR = Path(__file__).resolve().parent
GENERATORS = ("uniform", "ones", "zeros", "arange")


def _listing1(x, scale=2.0, rank=0):
    return {"y": scale * oracles._f64(x) + rank}


def _gemm(a, b):
    return {"c": oracles.oracle_gemm(a, b)}


def _layernorm(x, w, b, eps=1e-5):
    y, mean, rstd = oracles.oracle_layernorm(x, w, b, eps)
    return {"y": y, "mean": mean, "rstd": rstd}


def _multi_device_gemm(a_shards, b_shards):
    return {"c": oracles.oracle_multi_device_gemm(a_shards, b_shards)}


def _simplicial(q, k1, v1, k2, v2, w1=2, w2=16, scale=0.25):
    o, m = oracles.oracle_simplicial_attention(q, k1, v1, k2, v2, int(w1), int(w2), scale)
    return {"o": o, "m": m}


def _attention(q, k1, v1, k2, v2, w2=16, scale=0.25):
    # K1/V1 are all ones in the degenerate case and drop out
    o, m = oracles.oracle_attention(q, k2, v2, int(w2), scale)
    return {"o": o, "m": m}


def _broadcast(x, copies=1):
    return {"out": np.tile(oracles._f64(x), (int(copies), 1))}


def _ones(count=1):
    return {"out": np.ones(int(count))}


ORACLES: dict[str, Callable[..., dict[str, np.ndarray]]] = {
    "listing1": _listing1,
    "gemm": _gemm,
    "layernorm": _layernorm,
    "multi_device_gemm": _multi_device_gemm,
    "simplicial_attention": _simplicial,
    "attention": _attention,
    "broadcast": _broadcast,
    "ones": _ones,
}


class CaseError(ValueError):
    pass


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


@dataclass
class KernelCase:
    name: str
    source: Path
    oracle: str
    outputs: list[str]
    seed: int = 0
    tolerance: float = 1e-4
    inputs: dict[str, str] = field(default_factory=dict)
    oracle_args: dict[str, object] = field(default_factory=dict)
    sim: dict[str, object] = field(default_factory=dict)

    def program(self) -> KernelProgram:
        return parse_kernel(self.source.read_text())

    def make_inputs(self, program: KernelProgram | None = None, seed: int | None = None) -> dict[str, np.ndarray]:
        return make_inputs(program or self.program(), self.seed if seed is None else seed, self.inputs, self.outputs)

    def expected(self, inputs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        fn = ORACLES[self.oracle]
        want = fn(**inputs, **self.oracle_args)
        return {k: want[k] for k in self.outputs}

    def check(self, outputs: dict[str, np.ndarray], inputs: dict[str, np.ndarray]) -> dict[str, float]:
        """Relative error per checked output."""
        from ..sim import relative_error

        exp = self.expected(inputs)
        return {k: relative_error(np.asarray(outputs[k]).reshape(np.shape(exp[k])), exp[k]) for k in self.outputs}


def make_inputs(program: KernelProgram, seed: int, generators: dict[str, str] | None = None,
                outputs=()) -> dict[str, np.ndarray]:
    generators = generators or {}
    rng = np.random.default_rng(seed)
    out = {}
    for name, prm in program.tensor_params.items():
        if name in outputs:
            continue
        how = generators.get(name, "uniform")
        if how == "uniform":
            out[name] = rng.uniform(-1.0, 1.0, prm.shape).astype(np.float32)
        elif how == "ones":
            out[name] = np.ones(prm.shape, np.float32)
        elif how == "zeros":
            out[name] = np.zeros(prm.shape, np.float32)
        elif how == "arange":
            out[name] = np.arange(int(np.prod(prm.shape)), dtype=np.float32).reshape(prm.shape)
        else:
            raise CaseError(f"unknown input generator {how!r} for @{name}")
    return out


def parse_case(text: str, path: Path | None = None) -> KernelCase:
    stem = path.stem if path is not None else "case"
    base = path.parent if path is not None else KERNEL_DIR
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CaseError(f"line {lineno}: expected key = value, found {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value
    if "oracle" not in kv:
        raise CaseError("case needs an oracle")
    if kv["oracle"] not in ORACLES:
        raise CaseError(f"unknown oracle {kv['oracle']!r}")
    case = KernelCase(
        name=kv.pop("name", stem),
        source=base / kv.pop("kernel", f"{stem}.mimw"),
        oracle=kv.pop("oracle"),
        outputs=[s.strip() for s in kv.pop("outputs", "").split(",") if s.strip()],
        seed=int(kv.pop("seed", "0")),
        tolerance=float(kv.pop("tolerance", "1e-4")),
    )
    for key, value in kv.items():
        group, _, rest = key.partition(".")
        if group == "input" and rest:
            if value not in GENERATORS:
                raise CaseError(f"unknown input generator {value!r}")
            case.inputs[rest] = value
        elif group == "oracle" and rest:
            case.oracle_args[rest] = _scalar(value)
        elif group == "sim" and rest:
            case.sim[rest] = _scalar(value)
        else:
            raise CaseError(f"unknown case key {key!r}")
    if not case.outputs:
        raise CaseError("case lists no outputs")
    return case


def load_case(path) -> KernelCase:
    path = Path(path)
    return parse_case(path.read_text(), path)


def discover(directory=None) -> list[KernelCase]:
    """Every ``*.case`` file under ``directory`` (the shipped corpus by default), sorted by name."""
    directory = Path(directory) if directory is not None else KERNEL_DIR
    return [load_case(p) for p in sorted(directory.glob("*.case"))]
