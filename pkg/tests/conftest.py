import itertools
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gibbsium.lattice import Box, Config

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def line(k, lo=0):
    """The d=1 box {lo, ..., lo + k - 1}."""
    return Box(tuple((lo + i,) for i in range(k)), 1)


def all_configs(box, alphabet=(-1, 1)):
    for vals in itertools.product(alphabet, repeat=len(box)):
        yield Config(box, vals)


def ising_chain_energy(beta, h, spins, left=None, right=None):
    """Hand-written d=1 Ising energy of a row of spins with optional end spins."""
    s = list(spins)
    e = -h * sum(s) - beta * sum(a * b for a, b in zip(s, s[1:]))
    if left is not None:
        e -= beta * left * s[0]
    if right is not None:
        e -= beta * s[-1] * right
    return e


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
