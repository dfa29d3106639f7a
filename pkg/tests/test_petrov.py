from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quartic_melnikov.hamiltonian import hamiltonian_poly
from quartic_melnikov.petrov import francoise_coefficients, reassemble, reduce_form
from quartic_melnikov.polyalg import BivariatePoly, OneForm, X, Y, hpoly, iter_monomials

A_VALUES = [F(-1), F(3, 4), F(2), F(-3), F(1, 2)]
rationals = st.fractions(min_value=-10, max_value=10, max_denominator=7)


def forms(max_degree):
    monos = list(iter_monomials(max_degree))
    poly = st.dictionaries(st.sampled_from(monos), rationals, max_size=8).map(BivariatePoly)
    return st.builds(OneForm, poly, poly)


@given(forms(7), st.sampled_from(A_VALUES))
@settings(max_examples=60, deadline=None)
def test_reduction_reassembles_exactly(form, a):
    red = reduce_form(form, a)
    assert reassemble(red, a) == form
    assert all(i <= 2 for (_, i) in red.remainder)


@pytest.mark.parametrize("a", A_VALUES)
def test_basis_forms_are_irreducible(a):
    for i in range(3):
        red = reduce_form(OneForm(BivariatePoly.monomial(i, 1), BivariatePoly()), a)
        coeffs = red.coefficients()
        assert coeffs[i] == hpoly(1)
        assert all(coeffs[j] == () for j in range(3) if j != i)


@pytest.mark.parametrize("a", A_VALUES)
def test_exact_and_dH_multiples_vanish(a):
    H = hamiltonian_poly(a)
    S = X**3 * Y + Y**4 - X
    s = X**2 + Y
    form = OneForm.exact(S) + OneForm(s * H.diff_x(), s * H.diff_y())
    assert reduce_form(form, a).vanishes()


def test_i3_reduction_matches_module_identity():
    """I_3 = (2/a) I_2 - (1/a) I_1."""
    a = F(3, 4)
    red = reduce_form(OneForm(X**3 * Y, BivariatePoly()), a)
    assert red.coefficients() == ((), hpoly(-1 / a), hpoly(2 / a))


def test_francoise_stops_at_first_nonzero():
    a = F(-1)
    omega = OneForm(Y, BivariatePoly())  # M1 = I0
    out = francoise_coefficients(omega, a)
    assert len(out) == 1 and out[0][0] == hpoly(1)
    H = hamiltonian_poly(a)
    exact = OneForm(X * H.diff_x(), X * H.diff_y())  # x dH: M_k = 0 ... until x*omega
    out = francoise_coefficients(exact, a, 4)
    assert all(not any(c) for c in out[:-1])
