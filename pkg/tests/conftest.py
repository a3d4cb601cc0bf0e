from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mimw.pipeline import compile_program

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def compiled(source: str):
    res = compile_program(source)
    assert res.ok, [d.render() for d in res.diagnostics]
    return res.resolved


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
