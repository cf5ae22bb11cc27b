import random

import pytest

from packbound import graphs

# criterion lines collected by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_corpus(count=50, n_max=12, seed=2024):
    """Random graphs with n <= n_max cycling through edge probabilities 0.3/0.5/0.7."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        p = (0.3, 0.5, 0.7)[k % 3]
        out.append(graphs.random_graph(rng.randint(3, n_max), p, rng))
    return out


def named_graphs():
    c7 = graphs.cycle(7)
    return {
        "K1": graphs.complete(1),
        "K4": graphs.complete(4),
        "E4": graphs.empty(4),
        "P3": graphs.path(3),
        "C5": graphs.cycle(5),
        "C7": c7,
        "co-C7": graphs.complement(c7),
        "C5+C5": graphs.disjoint_union(graphs.cycle(5), graphs.cycle(5)),
    }


@pytest.fixture(scope="session")
def corpus():
    return random_corpus()
