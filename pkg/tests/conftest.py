import random
from fractions import Fraction

import mpmath
import pytest

from quartic_melnikov.polyalg import BivariatePoly, iter_monomials

ACCEPTANCE_LINES = []


def rand_q(rng, num=9, den=6):
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def rand_poly(rng, degree, keep=lambda i, j: True, min_degree=0):
    return BivariatePoly({(i, j): rand_q(rng) for i, j in iter_monomials(degree)
                          if i + j >= min_degree and keep(i, j)})


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(autouse=True)
def _reset_precision():
    dps = mpmath.mp.dps
    yield
    mpmath.mp.dps = dps


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
