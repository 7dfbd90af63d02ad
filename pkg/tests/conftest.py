import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from subchase.bench import random_coverage
from subchase.setfunc import Additive, CappedCardinality, ExplicitTable, all_masks

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def random_function(rng, n):
    """A random monotone submodular function of one of several shapes."""
    kind = rng.integers(5)
    if kind == 0:
        return random_coverage(n, rng)
    if kind == 1:
        return random_coverage(n, rng, weighted=True)
    if kind == 2:
        return CappedCardinality(n, int(rng.integers(1, n + 1)))
    if kind == 3:
        return Additive(rng.uniform(0.1, 3.0, n))
    # concave of additive: sqrt(w(S)) is monotone submodular
    w = rng.uniform(0.1, 2.0, n)
    return ExplicitTable(np.sqrt(all_masks(n).astype(float) @ w))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
