import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def binomial_tol(p, n, sigmas=4.0):
    return sigmas * (p * (1 - p) / n) ** 0.5


ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
