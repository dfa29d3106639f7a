from fractions import Fraction as F

import mpmath
import pytest

from quartic_melnikov.abelian import (
    abelian_value,
    basis_integrals,
    continue_ode,
    derivative_Ik,
    expand_series,
    integral_Ik,
    line_integral,
    picard_fuchs_derivatives,
    picard_fuchs_residual,
    reduction_rule,
    series_of_form,
)
from quartic_melnikov.config import RunConfig
from quartic_melnikov.errors import ExcludedParameter, LevelOutsideAnnulus, SingularSystem
from quartic_melnikov.hamiltonian import annuli, classify, get_annulus
from quartic_melnikov.polyalg import BivariatePoly, OneForm, X, Y, hpoly

CFG = RunConfig()


@pytest.fixture
def saddle():
    mpmath.mp.dps = 30
    sys = classify(-1)
    return sys, annuli(sys)[0]


def test_area_near_center(saddle):
    sys, ann = saddle
    assert abs(integral_Ik(sys, ann, mpmath.mpf("1e-4"), 0) / (2 * mpmath.pi * mpmath.mpf("1e-4")) - 1) < 2e-3


def test_period_near_center(saddle):
    sys, ann = saddle
    assert abs(derivative_Ik(sys, ann, mpmath.mpf("1e-6"), 0) / (2 * mpmath.pi) - 1) < 2e-3


def test_area_is_positive_and_increasing():
    mpmath.mp.dps = 30
    sys = classify(F(3, 4))
    for ann in annuli(sys):
        lo = ann.h_lo
        hi = ann.h_hi if ann.bounded else lo + 3
        hs = [lo + (hi - lo) * t / 6 for t in range(1, 6)]
        vals = [integral_Ik(sys, ann, h, 0) for h in hs]
        assert all(v > 0 for v in vals)
        assert vals == sorted(vals)


def test_series_examples():
    assert expand_series(F(1, 2), 4).coeffs(0)[2] == F(71, 48)
    assert expand_series(-1, 4).coeffs(0)[2] == F(49, 24)
    for a in (F(-1), F(3, 4), F(2)):
        s = expand_series(a, 4)
        assert s.coeffs(0)[2] == F(5, 3) - F(3, 8) * a
        assert s.coeffs(1)[3] == F(70, 9) - F(35, 12) * a
        assert s.V[0] == (1, 0, 0)
    with pytest.raises(ExcludedParameter):
        expand_series(F(8, 9), 3)


def test_series_matches_quadrature(saddle):
    sys, ann = saddle
    h = mpmath.mpf("0.005")
    s = expand_series(-1, 12)
    for q, v in zip(basis_integrals(sys, ann, h), s.evaluate(h)):
        assert abs(v / q - 1) < 1e-6


def test_series_satisfies_picard_fuchs_exactly():
    a = F(3, 4)
    s = expand_series(a, 10)
    # the truncated series satisfies the system through order h^9
    h = F(1, 10**6)
    I = [sum(c * h**k for k, c in enumerate(s.coeffs(j))) for j in range(3)]
    dI = [sum(k * c * h ** (k - 1) for k, c in enumerate(s.coeffs(j)) if k) for j in range(3)]
    res = picard_fuchs_residual(a, h, I, dI)
    assert all(abs(r) < F(1, 10**50) for r in res)


def test_reduction_identity_i3(saddle):
    sys, ann = saddle
    rule = reduction_rule(sys, 3)
    assert rule.coeffs == ((), hpoly(F(1)), hpoly(F(-2)))  # a = -1: I3 = -2 I2 + I1
    h = mpmath.mpf("0.02")
    I = [integral_Ik(sys, ann, h, k) for k in range(4)]
    assert abs(I[3] - (I[1] - 2 * I[2])) < 1e-20 * abs(I[3])


@pytest.mark.parametrize("k", [4, 5, 7])
def test_higher_reductions_match_quadrature(k):
    mpmath.mp.dps = 30
    sys = classify(F(3, 4))
    ann = get_annulus(sys, "exterior")
    h = ann.h_lo + 1
    direct = integral_Ik(sys, ann, h, k, RunConfig(max_direct_k=8))
    reduced = integral_Ik(sys, ann, h, k, RunConfig(max_direct_k=2))
    assert abs(direct / reduced - 1) < 1e-20


def test_picard_fuchs_with_quadrature(saddle):
    sys, ann = saddle
    h = mpmath.mpf("0.02")
    val = abelian_value(sys, ann, h, with_derivatives=True)
    res = picard_fuchs_residual(sys.a, h, val.I, val.dI)
    assert max(abs(r) for r in res) < 1e-20
    dI = picard_fuchs_derivatives(sys, val.I, h)
    for u, v in zip(dI, val.dI):
        assert abs(u / v - 1) < 1e-8


def test_picard_fuchs_singular_at_center(saddle):
    sys, _ = saddle
    with pytest.raises(SingularSystem):
        picard_fuchs_derivatives(sys, [1, 1, 1], 0)


def test_continuation(saddle):
    sys, ann = saddle
    h0, h1 = mpmath.mpf("0.001"), mpmath.mpf("0.03")
    got = continue_ode(sys, ann, h0, h1, basis_integrals(sys, ann, h0))
    for u, v in zip(got, basis_integrals(sys, ann, h1)):
        assert abs(u / v - 1) < 1e-6
    with pytest.raises(LevelOutsideAnnulus):
        continue_ode(sys, ann, mpmath.mpf("0.01"), mpmath.mpf("0.2"), got)


def test_line_integral_of_basis_forms():
    mpmath.mp.dps = 30
    sys = classify(F(3, 4))
    for ann in annuli(sys):
        h = ann.h_lo + (ann.span / 3 if ann.bounded else 1)
        I = basis_integrals(sys, ann, h)
        for j in range(3):
            li = line_integral(sys, ann, h, OneForm(X**j * Y, BivariatePoly()))
            assert abs(li / I[j] - 1) < 1e-20
        # exact forms integrate to zero
        ex = OneForm.exact(X**3 * Y**2 + X * Y)
        assert abs(line_integral(sys, ann, h, ex)) < 1e-20


@pytest.mark.parametrize("which", ["interior-origin", "interior-second", "exterior"])
def test_near_saddle_levels_converge(which):
    mpmath.mp.dps = 30
    sys = classify(F(3, 4))
    ann = get_annulus(sys, which)
    near = ann.h_hi - mpmath.mpf("1e-9") if which != "exterior" else ann.h_lo + mpmath.mpf("1e-9")
    I = basis_integrals(sys, ann, near)
    assert all(mpmath.isfinite(v) for v in I)
    assert I[0] > 0


def test_series_of_form_combines_linearly():
    s = expand_series(2, 5)
    alpha, beta = hpoly(0, 1), hpoly(2)
    combo = series_of_form(alpha, beta, (), s)
    assert combo[2] == s.coeffs(0)[1] + 2 * s.coeffs(1)[2]
