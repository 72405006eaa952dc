import numpy as np
import pytest

from rnndbn.numerics import make_rng

ACCEPTANCE_RESULTS = []


def record_acceptance(number, name, passed, detail):
    ACCEPTANCE_RESULTS.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {name} -- {detail}")


@pytest.fixture
def rng():
    return make_rng(12345)


def random_binary(rng, shape, p=0.5):
    return (rng.random(shape) < p).astype(float)


def all_binary(n):
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
