import numpy as np
import pytest

from streammatch.graph import BipartiteGraph


def random_graph(rng: np.random.Generator, max_p: int = 8, max_q: int = 8, p: float | None = None) -> BipartiteGraph:
    n_p = int(rng.integers(1, max_p + 1))
    n_q = int(rng.integers(1, max_q + 1))
    dens = float(rng.uniform(0.1, 0.7)) if p is None else p
    adj = tuple(tuple(int(v) for v in np.flatnonzero(rng.random(n_q) < dens)) for _ in range(n_p))
    return BipartiteGraph(n_p, n_q, adj)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(12345))


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
