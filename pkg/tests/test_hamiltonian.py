from fractions import Fraction as F

import mpmath
import pytest

from quartic_melnikov.errors import ExcludedParameter, LevelOutsideAnnulus
from quartic_melnikov.hamiltonian import (
    AnnulusId,
    PointKind,
    Regime,
    annuli,
    check_level,
    classify,
    get_annulus,
    turning_points,
)


@pytest.mark.parametrize("a, regime", [(-1, Regime.SADDLE_LOOP), (F(1, 2), Regime.EIGHT_LOOP),
                                       (F(3, 4), Regime.EIGHT_LOOP), (1, Regime.CUSPIDAL_LOOP),
                                       (2, Regime.GLOBAL_CENTER)])
def test_regimes(a, regime):
    assert classify(a).regime is regime


@pytest.mark.parametrize("a", [0, F(8, 9), "8/9"])
def test_excluded(a):
    with pytest.raises(ExcludedParameter):
        classify(a)


def test_eight_loop_critical_points_exact():
    sys = classify(F(3, 4))
    kinds = [cp.kind for cp in sys.critical_points]
    assert kinds == [PointKind.CENTER, PointKind.SADDLE, PointKind.CENTER]
    xs = [cp.x_exact for cp in sys.critical_points]
    assert xs == [0, F(2, 3), 2]
    saddle = sys.critical_points[1]
    assert saddle.h_exact == F(2, 9) - F(16, 81) + F(3, 16) * F(16, 81)


def test_saddle_loop_level():
    mpmath.mp.dps = 30
    sys = classify(-1)
    (ann,) = annuli(sys)
    x = mpmath.sqrt(2) - 1
    assert ann.id is AnnulusId.UNIQUE
    assert mpmath.almosteq(ann.h_hi, x**2 / 2 - 2 * x**3 / 3 - x**4 / 4, 1e-25)
    assert mpmath.almosteq(ann.h_hi, mpmath.mpf("0.0310485835025399"), 1e-14)


def test_annuli_by_regime():
    assert [a.id for a in annuli(classify(F(3, 4)))] == [
        AnnulusId.INTERIOR_ORIGIN, AnnulusId.INTERIOR_SECOND, AnnulusId.EXTERIOR]
    assert [a.id for a in annuli(classify(1))] == [AnnulusId.INTERIOR_ORIGIN, AnnulusId.EXTERIOR]
    (g,) = annuli(classify(2))
    assert not g.bounded and g.h_lo == 0
    with pytest.raises(KeyError):
        get_annulus(classify(2), "exterior")


def test_second_center_annulus_is_above_second_center():
    sys = classify(F(3, 4))
    ann = get_annulus(sys, "interior-second")
    assert ann.h_lo_exact == sys.critical_points[2].h_exact
    assert ann.h_lo < ann.h_hi


def test_turning_points_solve_the_level():
    mpmath.mp.dps = 30
    sys = classify(F(3, 4))
    for ann in annuli(sys):
        h = ann.h_lo + (ann.span / 2 if ann.bounded else 1)
        xm, xp = turning_points(sys, ann, h)
        assert xm < ann.anchor < xp
        assert mpmath.almosteq(sys.U_mp(xm), h, 1e-25) and mpmath.almosteq(sys.U_mp(xp), h, 1e-25)


def test_exterior_oval_surrounds_all_critical_points():
    sys = classify(F(3, 4))
    ann = get_annulus(sys, "exterior")
    xm, xp = turning_points(sys, ann, ann.h_lo + F(1, 10))
    assert xm < 0 and xp > 2


def test_level_checks():
    mpmath.mp.dps = 30
    sys = classify(-1)
    (ann,) = annuli(sys)
    with pytest.raises(LevelOutsideAnnulus):
        check_level(ann, mpmath.mpf("0.2"))
    with pytest.raises(LevelOutsideAnnulus):
        check_level(ann, ann.h_hi * (1 - mpmath.mpf("1e-14")))
    check_level(ann, mpmath.mpf("1e-20"))  # center endpoint: strictly inside is enough
    with pytest.raises(LevelOutsideAnnulus):
        check_level(ann, 0)


def test_to_json_has_exact_values():
    data = classify(F(3, 4)).to_json()
    assert data["regime"] == "eight-loop"
    assert [cp["x"] for cp in data["critical_points"]] == ["0", "2/3", "2"]
    assert data["annuli"][2]["h_hi"] == "inf"
