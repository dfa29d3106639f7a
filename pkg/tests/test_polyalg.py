from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quartic_melnikov.errors import DegreeError
from quartic_melnikov.polyalg import (
    BivariatePoly,
    OneForm,
    X,
    Y,
    as_fraction,
    decompose_one_form,
    format_rational,
    hpoly,
    hpoly_add,
    hpoly_degree,
    hpoly_eval,
    hpoly_mul,
    hpoly_scale,
    hpoly_str,
    iter_monomials,
    odd_even_split,
    parse_rational,
    perturbation_form,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def polys(max_degree=3):
    monos = list(iter_monomials(max_degree))
    return st.dictionaries(st.sampled_from(monos), rationals, max_size=len(monos)).map(BivariatePoly)


def test_rational_parsing_round_trip():
    assert parse_rational("-3/4") == F(-3, 4)
    assert parse_rational("7") == 7
    assert format_rational(F(6, 8)) == "3/4"
    assert format_rational(F(-5)) == "-5"
    assert as_fraction("2/3") == F(2, 3)
    with pytest.raises(ValueError):
        parse_rational("0.5")
    with pytest.raises(TypeError):
        as_fraction(0.5)


def test_basic_arithmetic():
    p = X**2 + 3 * Y - 1
    assert p.coeff(2, 0) == 1 and p.coeff(0, 1) == 3 and p.coeff(0, 0) == -1
    assert (p * p).degree == 4
    assert (p - p).is_zero()
    assert p.diff_x() == 2 * X
    assert p.diff_y() == BivariatePoly.const(3)
    assert (X**3).integrate_x() == BivariatePoly.monomial(4, 0, F(1, 4))
    assert (X * Y**3).divide_by_y() == X * Y**2
    assert p(F(1, 2), F(1)) == F(1, 4) + 3 - 1


@given(polys(), polys())
@settings(max_examples=60, deadline=None)
def test_ring_laws(p, q):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q).diff_x() == p.diff_x() + q.diff_x()
    assert (p * q).diff_y() == p.diff_y() * q + p * q.diff_y()
    assert p.integrate_x().diff_x() == p


@given(polys(4))
@settings(max_examples=40, deadline=None)
def test_json_round_trip_and_split(p):
    assert BivariatePoly.from_json(p.to_json()) == p
    odd, even = odd_even_split(p)
    assert odd + even == p
    assert all(j % 2 == 1 for (i, j), _ in odd.items())
    assert all(j % 2 == 0 for (i, j), _ in even.items())


@given(polys(3), polys(3))
@settings(max_examples=60, deadline=None)
def test_decomposition_is_exact(f, g):
    """g dx - f dy = dQ + y q dx as an identity of one-forms."""
    Q, q = decompose_one_form(f, g)
    assert Q.coeff(0, 0) == 0
    assert q.degree <= 2
    rebuilt = OneForm.exact(Q) + OneForm(Y * q, BivariatePoly())
    assert rebuilt == perturbation_form(f, g)


def test_decomposition_rejects_high_degree():
    with pytest.raises(DegreeError):
        decompose_one_form(X**4, BivariatePoly())


def test_exact_forms_are_closed():
    S = X**3 * Y - 2 * Y**2 + X
    assert OneForm.exact(S).d().is_zero()


def test_hpoly_helpers():
    p = hpoly(1, 2, 0, 0)
    assert p == (F(1), F(2))
    assert hpoly_add(p, (F(-1),)) == (F(0), F(2))
    assert hpoly_mul(p, p) == (1, 4, 4)
    assert hpoly_scale(p, F(1, 2)) == (F(1, 2), 1)
    assert hpoly_degree(p) == 1 and hpoly_degree(()) == -1
    assert hpoly_eval(p, F(3)) == 7
    assert hpoly_eval(p, mpmath.mpf(3)) == 7
    assert hpoly_str((F(-1, 2), 0, 3)) == "-1/2 + 3*h^2"
