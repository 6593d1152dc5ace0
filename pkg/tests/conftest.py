import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyperocc import Dataset, PlantSpec, generate_planted  # noqa: E402


@pytest.fixture
def and7():
    """Six fair inputs in all 64 patterns; the seventh is their AND."""
    return generate_planted(64, 6, PlantSpec(range(6), 6, 6), seed=0, exhaustive=True)


@pytest.fixture
def three_by_three():
    """Three columns, three equally frequent values each."""
    vals = np.array([[0.0, 0.25, 0.75], [0.5, 1.0, 0.0], [1.0, 0.0, 0.5]])
    return Dataset(["A", "B", "C"], vals)


def random_binary(rng, max_rows=64, max_cols=8, min_cols=2):
    n_rows = int(rng.integers(2, max_rows + 1))
    n_cols = int(rng.integers(min_cols, max_cols + 1))
    p = rng.uniform(0.1, 0.9, size=n_cols)
    vals = (rng.random((n_rows, n_cols)) < p).astype(float)
    return Dataset([f"c{j}" for j in range(n_cols)], vals)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
