import numpy as np
import pytest

from helpers import ACCEPTANCE_RESULTS, small_graph
from motivkg.embed import HashEmbedder


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, ok, secs = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({secs:.2f}s)")


@pytest.fixture
def graph():
    return small_graph()


@pytest.fixture
def embedder():
    return HashEmbedder(64, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
