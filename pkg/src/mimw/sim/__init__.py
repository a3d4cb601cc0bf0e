from ..errors import SimFault
from .config import SCHEDULERS, SimConfig, fuzzed_config
from .engine import SimResult, Simulator, dot_f32, reduce_sum_f32, relative_error, simulate
from .trace import render

__all__ = [
    "SCHEDULERS", "SimConfig", "SimFault", "SimResult", "Simulator", "dot_f32",
    "fuzzed_config", "reduce_sum_f32", "relative_error", "render", "simulate",
]
