from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mimw.cli import main
from mimw.kernels import KERNEL_DIR
from mimw.tensorio import TensorFormatError, dumps_tensor, loads_tensor, read_tensor, write_tensor

from conftest import DATA

GEMM = str(KERNEL_DIR / "gemm_pipeline.mimw")


def test_check_clean_kernel(capsys):
    assert main(["check", GEMM]) == 0
    assert capsys.readouterr().err == ""


@pytest.mark.parametrize("name,code", [("remote_wait", "C001"), ("layout_alias_conflict", "L002")])
def test_check_reports_diagnostics(name, code, capsys, monkeypatch):
    monkeypatch.setenv("MIMW_COLOR", "0")
    assert main(["check", str(DATA / f"{name}.mimw")]) == 2
    err = capsys.readouterr().err
    assert f"error[{code}]" in err
    assert "\x1b[" not in err


def test_color_can_be_forced(capsys, monkeypatch):
    monkeypatch.setenv("MIMW_COLOR", "1")
    main(["check", str(DATA / "remote_wait.mimw")])
    assert "\x1b[31m" in capsys.readouterr().err


def test_parse_error_is_a_diagnostic(tmp_path, capsys):
    bad = tmp_path / "bad.mimw"
    bad.write_text("kernel k grid(1 1 1\n")
    assert main(["check", str(bad)]) == 2
    assert "P001" in capsys.readouterr().err


def test_dump_after_resolve_shows_operand_encodings(capsys):
    assert main(["check", GEMM, "--dump-after", "resolve"]) == 0
    out = capsys.readouterr().out
    assert "encoding(mma_a)" in out and "encoding(mma_b)" in out


def test_copy_default_flag_changes_resolution(capsys):
    kern = str(KERNEL_DIR / "multicast.mimw")
    main(["check", kern, "--dump-after", "resolve", "--copy-default", "row_major"])
    plain = capsys.readouterr().out
    main(["check", kern, "--dump-after", "resolve"])
    swz = capsys.readouterr().out
    assert "encoding(swizzle128)" in swz and "encoding(row_major)" in plain


def test_run_is_reproducible(tmp_path, capsys):
    kern = str(KERNEL_DIR / "layernorm.mimw")
    assert main(["run", kern, "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["run", kern, "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    summaries = capsys.readouterr().out.splitlines()
    assert summaries[0] == summaries[1]
    assert json.loads(summaries[0])["races"] == []


def test_run_reads_inputs(tmp_path):
    kern = str(KERNEL_DIR / "listing1.mimw")
    x = np.arange(256, dtype=np.float32)
    (tmp_path / "in").mkdir()
    write_tensor(tmp_path / "in" / "x.bin", x)
    assert main(["run", kern, "--inputs", str(tmp_path / "in"), "--out", str(tmp_path / "out")]) == 0
    np.testing.assert_array_equal(read_tensor(tmp_path / "out" / "x.bin"), x)
    y = read_tensor(tmp_path / "out" / "y.bin")
    assert set(np.unique(y - 2 * x)) <= {0.0, 1.0}


def test_trace_writes_jsonl(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["trace", GEMM, "--trace-out", str(out), "--scheduler", "seeded_random", "--seed", "3"]) == 0
    lines = out.read_text().splitlines()
    assert all(json.loads(line) for line in lines)
    assert "summary" in json.loads(lines[-1])


def test_run_fault_exit_code(tmp_path, capsys):
    src = tmp_path / "dead.mimw"
    src.write_text(
        "kernel k grid(1 1 1) cluster(1 1 1) warps(4)\n"
        "barrier a count(1) arrive(1)\n%v = local_view @a 0\nbarrier_wait %v 0\n"
    )
    assert main(["run", str(src)]) == 3
    assert "Deadlock" in capsys.readouterr().err


def test_set_override_and_bad_key(capsys):
    assert main(["run", GEMM, "--set", "mma_latency=0"]) == 0
    with pytest.raises(SystemExit):
        main(["run", GEMM, "--set", "nope=1"])


def test_fuzz_and_corpus_succeed(capsys):
    assert main(["fuzz", GEMM, "--schedules", "10"]) == 0
    assert main(["corpus"]) == 0
    out = capsys.readouterr().out
    assert "10 schedules" in out
    assert "FAIL" not in out


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", GEMM, "--bogus"])
    assert exc.value.code == 2


@given(hnp.arrays(np.float32, hnp.array_shapes(min_dims=0, max_dims=4, max_side=5)))
def test_tensor_round_trip(arr):
    back = loads_tensor(dumps_tensor(arr))
    assert back.shape == arr.shape
    assert back.tobytes() == np.asarray(arr, "<f4", order="C").tobytes()


@pytest.mark.parametrize("raw", [b"NOTMAGIC", b"MIMWTNSR", b"MIMWTNSR\x02\x00\x00\x00\x01\x00\x00\x00",
                                 dumps_tensor(np.zeros(3)) + b"\x00"])
def test_tensor_format_errors(raw):
    with pytest.raises(TensorFormatError):
        loads_tensor(raw)
