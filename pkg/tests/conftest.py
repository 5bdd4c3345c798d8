import numpy as np
import pytest

from hwselftest.nuspec import default_nu


@pytest.fixture(scope="session")
def nu5():
    return default_nu(5)


@pytest.fixture(scope="session")
def nu7():
    return default_nu(7)


@pytest.fixture(scope="session")
def nu3():
    return default_nu(3)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / abs(np.diag(r)))


def random_order_d(rng, d, n):
    """Random unitary on C^n with spectrum in the d-th roots of unity."""
    V = random_unitary(rng, n)
    return (V * np.exp(2j * np.pi * rng.integers(0, d, n) / d)) @ V.conj().T


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
