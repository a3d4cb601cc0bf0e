from __future__ import annotations

import numpy as np
import pytest

from mimw.cli import run_case
from mimw.errors import SimFault
from mimw.kernels import (
    CORPUS,
    KERNEL_DIR,
    CaseError,
    discover,
    oracle_attention,
    oracle_gemm,
    oracle_layernorm,
    oracle_multi_device_gemm,
    oracle_simplicial_attention,
    parse_case,
)
from mimw.kernels.oracles import window_mask
from mimw.kernels.sources import multi_device_gemm
from mimw.sim import simulate

from conftest import compiled


# oracles on hand-checkable inputs ------------------------------------------


def test_gemm_identity():
    b = np.arange(6, dtype=np.float32).reshape(3, 2)
    np.testing.assert_array_equal(oracle_gemm(np.eye(3), b), b)


def test_layernorm_constant_rows_map_to_bias():
    x = np.full((2, 8), 3.5)
    y, mean, rstd = oracle_layernorm(x, np.ones(8), np.full(8, 0.25))
    np.testing.assert_allclose(y, 0.25)
    np.testing.assert_allclose(mean, 3.5)
    assert rstd[0, 0] == pytest.approx(1 / np.sqrt(1e-5))


def test_layernorm_unit_weight_gives_unit_variance(rng):
    x = rng.normal(2.0, 3.0, (4, 1024))
    y, _, _ = oracle_layernorm(x, np.ones(1024), np.zeros(1024), eps=0.0)
    np.testing.assert_allclose(y.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=1), 1.0, rtol=1e-12)


def test_multi_device_oracle_is_gathered_gemm(rng):
    a = rng.uniform(-1, 1, (8, 12))
    b = rng.uniform(-1, 1, (12, 4))
    shards_a = np.stack([a[:, :6], a[:, 6:]])
    shards_b = np.stack([b[:6], b[6:]])
    np.testing.assert_allclose(oracle_multi_device_gemm(shards_a, shards_b), a @ b)


def test_window_mask():
    m = window_mask(4, 2)
    assert m.tolist() == [
        [True, False, False, False],
        [True, True, False, False],
        [False, True, True, False],
        [False, False, True, True],
    ]


def test_simplicial_single_position(rng):
    q, k1, v1, k2, v2 = (rng.uniform(-1, 1, (1, 4)) for _ in range(5))
    o, lse = oracle_simplicial_attention(q, k1, v1, k2, v2, 1, 1, 0.5)
    np.testing.assert_allclose(o, v1 * v2)
    assert lse[0, 0] == pytest.approx(0.5 * float(np.sum(q * k1 * k2)))


def test_simplicial_with_ones_reduces_to_attention(rng):
    q, k2, v2 = (rng.uniform(-1, 1, (8, 4)) for _ in range(3))
    ones = np.ones((8, 4))
    o, lse = oracle_simplicial_attention(q, ones, ones, k2, v2, 1, 3, 0.5)
    o2, lse2 = oracle_attention(q, k2, v2, 3, 0.5)
    np.testing.assert_allclose(o, o2, rtol=1e-12)
    np.testing.assert_allclose(lse, lse2, rtol=1e-12)


def test_attention_uniform_keys_average_values():
    q = np.ones((3, 2))
    k = np.zeros((3, 2))
    v = np.array([[1.0, 0.0], [3.0, 0.0], [5.0, 0.0]])
    o, lse = oracle_attention(q, k, v, 3, 1.0)
    np.testing.assert_allclose(o[:, 0], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(lse[:, 0], np.log([1, 2, 3]))


# case files ----------------------------------------------------------------


def test_parse_case_fields(tmp_path):
    (tmp_path / "k.mimw").write_text("")
    case = parse_case(
        "# comment\noracle = gemm\noutputs = c\nseed = 3\ntolerance = 1e-3\n"
        "input.a = ones\noracle.eps = 1e-5\nsim.mma_latency = 2\n",
        tmp_path / "k.case",
    )
    assert case.name == "k"
    assert case.source == tmp_path / "k.mimw"
    assert (case.seed, case.tolerance, case.outputs) == (3, 1e-3, ["c"])
    assert case.inputs == {"a": "ones"}
    assert case.oracle_args == {"eps": 1e-5}
    assert case.sim == {"mma_latency": 2}


@pytest.mark.parametrize(
    "text",
    [
        "outputs = c",
        "oracle = nope\noutputs = c",
        "oracle = gemm",
        "oracle = gemm\noutputs = c\ninput.a = gaussian",
        "oracle = gemm\noutputs = c\nbogus = 1",
        "oracle = gemm\noutputs = c\njust words",
    ],
)
def test_parse_case_errors(text):
    with pytest.raises(CaseError):
        parse_case(text)


def test_shipped_sources_match_generators():
    for name, gen in CORPUS.items():
        assert (KERNEL_DIR / f"{name}.mimw").read_text() == gen(), name


def test_every_kernel_has_a_case():
    assert sorted(c.name for c in discover()) == sorted(CORPUS)


@pytest.mark.parametrize("case", discover(), ids=lambda c: c.name)
def test_corpus_case_passes(case):
    code, text = run_case(case)
    assert code == 0, text


# structural checks ----------------------------------------------------------


def _max_flips(src):
    prog = compiled(src)
    from mimw.kernels import make_inputs

    res = simulate(prog, make_inputs(prog.program, 0))
    return max(res.summary["barrier_flips"].values())


def test_single_stage_pipeline_reuses_each_barrier_more():
    assert _max_flips(multi_device_gemm(stages=1)) > _max_flips(multi_device_gemm(stages=2))


def test_multi_device_without_slot_release_deadlocks():
    src = multi_device_gemm()
    start = src.index("  for %st = 0 to")
    end = src.index("  }\n", start) + 4
    prog = compiled(src[:start] + src[end:])
    with pytest.raises(SimFault) as exc:
        simulate(prog)
    assert exc.value.kind == "Deadlock"
    tasks = {b["task"] for b in exc.value.details["blocked"]}
    assert tasks
