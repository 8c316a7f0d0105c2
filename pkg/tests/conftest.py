import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from latticekit.weights import ExplicitWeights, PODWeights, ProductWeights, SPODWeights  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_product(rng, d):
    return ProductWeights(rng.uniform(0.05, 1.0, d))


def random_pod(rng, d):
    order = np.concatenate(([1.0], np.cumprod(rng.uniform(0.5, 2.0, d))))
    return PODWeights(order, rng.uniform(0.05, 0.8, d))


def random_spod(rng, d, sigma=2):
    order = np.concatenate(([1.0], np.cumprod(rng.uniform(0.5, 2.0, sigma * d))))
    return SPODWeights(sigma, order, rng.uniform(0.02, 0.6, (d, sigma)))


def random_explicit(rng, d):
    table = {frozenset(): 1.0}
    for k in range(1, d + 1):
        for u in itertools.combinations(range(1, d + 1), k):
            table[frozenset(u)] = float(rng.uniform(0.0, 1.0) ** (2 * k))
    return ExplicitWeights(d, table)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line per criterion, at the end of the run."""
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
