import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from bilinmax.core import BilinearInstance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

REFERENCE = json.loads((Path(__file__).parent / "reference_values.json").read_text())


@pytest.fixture(scope="session")
def ref():
    """Values frozen by tests/oracles/derive_reference_values.py."""
    return REFERENCE


@pytest.fixture
def worked():
    return BilinearInstance.from_arrays(np.eye(2), np.diag([1.0, 0.25]), [1.0, 0.0])


@pytest.fixture
def unit_1d():
    return BilinearInstance.from_arrays([[1.0]], [[1.0]], [3.0])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def report():
    """Record one ``criterion N: PASS|FAIL`` line; shown in the terminal summary."""

    def _report(number, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report
