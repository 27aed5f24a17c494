import numpy as np
import pytest
from hypothesis import settings

from pwqnet import fixtures

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def ex3():
    """The three-segment convex example used throughout."""
    return fixtures.three_segment()


@pytest.fixture
def h_alg1():
    return fixtures.alg1_lift()


@pytest.fixture
def h_qp():
    return fixtures.qp_lift()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}: {detail}")
