from __future__ import annotations

import numpy as np
import pytest

from pmudetect.data import MeasurementTable

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abcdefgh")), k)):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


def table_from(values, labels, names=None) -> MeasurementTable:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    names = names or tuple(f"f{j}" for j in range(values.shape[1]))
    return MeasurementTable(tuple(names), values, np.asarray(labels))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
