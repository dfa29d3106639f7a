import random
from fractions import Fraction as F

import mpmath
import pytest

from conftest import rand_poly, rand_q
from quartic_melnikov.abelian import basis_integrals, line_integral
from quartic_melnikov.errors import (
    DegenerateCaseC,
    DegreeError,
    HamiltonianPerturbation,
    NotVanishing,
    ReversibleCase,
)
from quartic_melnikov.hamiltonian import annuli, classify
from quartic_melnikov.melnikov import (
    CaseTag,
    Integrability,
    MelnikovForm,
    NormalForm,
    PerturbationSpec,
    case_c_ratios,
    case_of,
    eval_melnikov,
    even_part_shape,
    exact_melnikov,
    integrability_check,
    ladder_normal_form,
    m1_form,
    m1_vanishes,
    m2_form,
    m2_vanishes_case,
    m3_form,
    m3_vanishes,
    m4_form,
    melnikov_form,
    normal_form_of,
    odd_part_shape,
    oracle_form,
    perturbation_of,
)
from quartic_melnikov.polyalg import BivariatePoly, X, Y

A_VALUES = [F(-1), F(3, 4), F(2), F(-3), F(1, 2)]


def random_spec(rng):
    return PerturbationSpec(rand_poly(rng, 3), rand_poly(rng, 3))


def random_nf(rng):
    return NormalForm(rand_poly(rng, 4, min_degree=1), rand_q(rng) or 1, rand_q(rng))


def ladder(rng, a, case, generic_even):
    lam, mu = rand_q(rng) or 1, rand_q(rng) or 1
    if case is CaseTag.A_MU0:
        mu = 0
    elif case is CaseTag.B_LAMBDA0:
        lam = 0
    else:
        lam = mu * rng.choice(case_c_ratios(a))
    even = rand_poly(rng, 4, keep=lambda i, j: j % 2 == 0, min_degree=1) if generic_even else None
    return ladder_normal_form(a, case, lam, mu, rand_q(rng) or 1, rand_q(rng), rand_q(rng), rand_q(rng) or 1,
                              even=even)


def cases(a):
    return [CaseTag.A_MU0, CaseTag.B_LAMBDA0] + ([CaseTag.C_RESONANT] if case_c_ratios(a) else [])


@pytest.mark.parametrize("a", A_VALUES)
def test_m1_matches_exact_recursion(a, rng):
    for _ in range(20):
        p = random_spec(rng)
        assert exact_melnikov(p, a, 1)[0] == m1_form(p, a)


@pytest.mark.parametrize("a", A_VALUES)
def test_m2_matches_exact_recursion(a, rng):
    for _ in range(15):
        nf = random_nf(rng)
        forms = exact_melnikov(nf, a, 2)
        assert forms[0].is_zero()
        assert forms[1] == m2_form(nf, a)


@pytest.mark.parametrize("a", A_VALUES)
def test_m3_m4_match_exact_recursion(a, rng):
    for case in cases(a):
        for _ in range(4):
            nf = ladder(rng, a, case, True)
            forms = exact_melnikov(nf, a, 3)
            assert [f.is_zero() for f in forms[:2]] == [True, True]
            assert forms[2] == m3_form(nf, a)
            nf = ladder(rng, a, case, False)
            forms = exact_melnikov(nf, a, 4)
            assert all(f.is_zero() for f in forms[:3])
            assert forms[3] == m4_form(nf, a) and not forms[3].is_zero()


def test_normal_form_round_trip(rng):
    a = F(3, 4)
    for _ in range(10):
        nf = random_nf(rng)
        p = perturbation_of(nf, a)
        assert m1_form(p, a).is_zero()
        assert normal_form_of(p, a) == nf
        assert m1_vanishes(p, a) == nf


def test_normal_form_requires_vanishing_m1():
    p = PerturbationSpec(BivariatePoly(), Y)  # omega = y dx: M1 = I0
    assert m1_vanishes(p, -1) is None
    with pytest.raises(NotVanishing):
        normal_form_of(p, -1)


def test_degree_check():
    with pytest.raises(DegreeError):
        PerturbationSpec(X**4, BivariatePoly())


def test_hamiltonian_and_reversible_errors():
    a = F(-1)
    ham = NormalForm(X**2 * Y, 0, 0)
    with pytest.raises(HamiltonianPerturbation):
        m2_form(ham, a)
    assert integrability_check(ham) is Integrability.HAMILTONIAN
    rev = NormalForm(X**2 + Y**2, 1, 2)
    assert m2_form(rev, a).is_zero()
    assert integrability_check(rev) is Integrability.REVERSIBLE
    with pytest.raises(ReversibleCase):
        m3_form(rev, a)


def test_cases_and_shapes():
    a = F(3, 4)
    (t1, t2) = case_c_ratios(a)
    for t in (t1, t2):
        assert a * t**2 + 4 * t + 4 == 0
    assert case_of(NormalForm(X * Y, 1, 0), a) is CaseTag.A_MU0
    assert case_of(NormalForm(X * Y, 0, 1), a) is CaseTag.B_LAMBDA0
    assert case_of(NormalForm(X * Y, t1, 1), a) is CaseTag.C_RESONANT
    assert case_c_ratios(-1) == [] and case_c_ratios(2) == []
    nf = ladder_normal_form(a, CaseTag.A_MU0, 2, 0, 3)
    assert m2_vanishes_case(nf, a) == (CaseTag.A_MU0, odd_part_shape(CaseTag.A_MU0, 3, a))
    assert m3_vanishes(nf, a)
    with pytest.raises(ValueError):
        ladder_normal_form(a, CaseTag.A_MU0, 1, 1, 1)


def test_m4_requires_vanishing_m3():
    a = F(-1)
    nf = ladder_normal_form(a, CaseTag.B_LAMBDA0, 0, 1, 1, even=X**2 + Y**2)
    with pytest.raises(NotVanishing):
        m4_form(nf, a)


def test_degenerate_case_c_flagged():
    a, lam, mu = F(2), F(-3, 2), F(1)
    Q = odd_part_shape(CaseTag.C_RESONANT, 1, a, lam, mu) + even_part_shape(0, 0, 0, lam, mu, a)
    with pytest.raises(DegenerateCaseC):
        m4_form(NormalForm(Q, lam, mu), a, CaseTag.C_RESONANT)


def test_melnikov_form_follows_the_ladder(rng):
    a = F(-1)
    nf = ladder(rng, a, CaseTag.A_MU0, False)
    p = perturbation_of(nf, a)
    m = melnikov_form(p, a)
    assert m.k == 4 and m == m4_form(nf, a)
    with pytest.raises(NotVanishing):
        melnikov_form(random_spec(rng), a, order=2)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_closed_forms_match_quadrature(k):
    mpmath.mp.dps = 30
    rng = random.Random(k)
    a = F(3, 4)
    sys = classify(a)
    case = CaseTag.C_RESONANT
    if k == 1:
        p = random_spec(rng)
        closed, omega = m1_form(p, a), p.omega
    elif k == 2:
        nf = random_nf(rng)
        closed, omega = m2_form(nf, a), oracle_form(nf, a, 2)
    else:
        nf = ladder(rng, a, case, k == 3)
        closed = m3_form(nf, a, case) if k == 3 else m4_form(nf, a, case)
        omega = oracle_form(nf, a, k, case)
    for ann in annuli(sys):
        h = ann.h_lo + (ann.span / 2 if ann.bounded else 1)
        value = eval_melnikov(closed, basis_integrals(sys, ann, h), h)
        quad = line_integral(sys, ann, h, omega)
        assert abs(value - quad) <= 1e-6 * abs(quad)


def test_json_round_trips(rng):
    p = random_spec(rng)
    assert PerturbationSpec.from_json(p.to_json()) == p
    nf = random_nf(rng)
    assert NormalForm.from_json(nf.to_json()) == nf
    m = m1_form(p, -1)
    assert MelnikovForm.from_json(m.to_json()) == m
    assert "I0" in str(m)
