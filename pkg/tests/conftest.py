import sys

import numpy as np
import pytest

from wsbmpl.model import WeightedNetwork


def random_network(n, rng, scale=1.0):
    A = rng.normal(scale=scale, size=(n, n))
    W = np.triu(A, 1)
    return WeightedNetwork(W + W.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
