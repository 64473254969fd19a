import numpy as np
import pytest

from symsur.megp import random_tree


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {status}")


def make_random_program(rng, d, max_depth=6, p_const=0.3):
    depth = int(rng.integers(0, max_depth + 1))
    return random_tree(
        rng, np.arange(d), depth, full=bool(rng.integers(2)), p_const=p_const
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
