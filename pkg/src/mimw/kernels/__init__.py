"""Shipped example kernels, their dense oracles and the case corpus."""

from .cases import KERNEL_DIR, ORACLES, CaseError, KernelCase, discover, load_case, make_inputs, parse_case
from .oracles import (
    oracle_attention,
    oracle_gemm,
    oracle_layernorm,
    oracle_multi_device_gemm,
    oracle_simplicial_attention,
    window_mask,
)
from .sources import CORPUS
