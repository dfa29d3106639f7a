from fractions import Fraction as F

import mpmath
import numpy as np
import pytest

from quartic_melnikov.errors import InsufficientSamples, NoBoundAvailable, TargetInfeasible
from quartic_melnikov.hamiltonian import AnnulusId, Regime, annuli, classify, get_annulus
from quartic_melnikov.melnikov import MelnikovForm
from quartic_melnikov.zeroes import (
    basis_grid,
    bound_compliance,
    bound_for,
    count_sign_changes,
    count_zeros,
    default_levels,
    independence_check,
    j_basis,
    level_grid,
    sign_changes,
    small_cycle_builder,
)


@pytest.fixture(autouse=True)
def _dps():
    mpmath.mp.dps = 30


def test_sign_changes_skip_zeros():
    assert sign_changes([1, -1, 0, -2, 3]) == [0, 3]
    assert sign_changes([0, 0, 1, 2]) == []


def test_level_grid_stays_inside():
    for a in (F(-1), F(3, 4), F(2)):
        for ann in annuli(classify(a)):
            hs = level_grid(ann, 40)
            assert len(hs) == 40 and hs == sorted(hs)
            assert all(ann.contains(h) for h in hs)


@pytest.mark.parametrize("which", ["interior-origin", "interior-second", "exterior"])
def test_area_has_no_zeros(which):
    sys = classify(F(3, 4))
    rep = count_zeros(MelnikovForm(1, (1,)), sys, get_annulus(sys, which), grid_n=32)
    assert rep.count == 0
    if which == "exterior":
        assert rep.tail_certified


def test_single_planted_zero():
    sys = classify(-1)
    (ann,) = annuli(sys)
    h0 = F(1, 100)
    rep = count_zeros(MelnikovForm(1, (-h0, 1)), sys, ann, grid_n=64, refine=True)
    assert rep.count == 1
    lo, hi = rep.brackets[0]
    assert lo < mpmath.mpf(1) / 100 < hi
    assert hi - lo <= mpmath.mpf("1e-10") * ann.span * 1.01
    assert rep.to_json()["count"] == 1


CORPUS = [
    (F(-1), "unique", MelnikovForm(1, (F(-1, 100), 1))),
    (F(3, 4), "interior-origin", MelnikovForm(1, (), (1,), (-2,))),
    (F(3, 4), "exterior", MelnikovForm(1, (F(-1), 1), (3,), (-1, F(1, 2)))),
    (F(2), "unique", MelnikovForm(1, (F(1, 10), -1), (1,), (F(1, 3),))),
]


@pytest.mark.parametrize("a, which, form", CORPUS)
def test_grid_stability(a, which, form):
    sys = classify(a)
    ann = get_annulus(sys, which)
    small = count_zeros(form, sys, ann, grid_n=32).count
    large = count_zeros(form, sys, ann, grid_n=64).count
    assert large >= small


def test_grid_minimum():
    sys = classify(-1)
    with pytest.raises(ValueError):
        count_zeros(MelnikovForm(1, (1,)), sys, annuli(sys)[0], grid_n=8)


@pytest.mark.parametrize("regime, ann, n, bound", [
    (Regime.EIGHT_LOOP, AnnulusId.INTERIOR_ORIGIN, 1, 5),
    (Regime.EIGHT_LOOP, AnnulusId.INTERIOR_SECOND, 2, 8),
    (Regime.EIGHT_LOOP, AnnulusId.EXTERIOR, 1, 8),
    (Regime.SADDLE_LOOP, AnnulusId.UNIQUE, 1, 7),
    (Regime.SADDLE_LOOP, AnnulusId.UNIQUE, 0, 3),
])
def test_bounds(regime, ann, n, bound):
    assert bound_for(regime, ann, n) == bound


def test_no_bound_for_uncovered_regimes():
    with pytest.raises(NoBoundAvailable):
        bound_for(Regime.GLOBAL_CENTER, AnnulusId.UNIQUE, 1)
    with pytest.raises(NoBoundAvailable):
        bound_for(Regime.CUSPIDAL_LOOP, AnnulusId.EXTERIOR, 1)


def test_count_sign_changes_vectorized():
    M = np.array([[1.0, 1.0], [-1.0, 1e-20], [2.0, -1.0]])
    noise = np.full_like(M, 1e-15)
    assert count_sign_changes(M, noise).tolist() == [2, 1]


def test_bound_compliance_small_run():
    sys = classify(F(3, 4))
    ann = get_annulus(sys, "interior-origin")
    grid = basis_grid(sys, ann, 120)
    res = bound_compliance(sys, grid, 1, 500, np.random.default_rng(1))
    assert res.ok and res.max_count <= 5
    assert sum(res.histogram.values()) == 500


def test_j_basis_table():
    for a in (F(-1), F(1, 2), F(2), F(-8, 3), F(-8, 9)):
        jb = j_basis(a)
        for k in range(6):
            assert all(jb.series[k][j] == 0 for j in range(1, k + 1))
    a = F(3, 4)
    jb = j_basis(a)
    assert jb.combos[2] == ((), (1,), (-2,))
    assert jb.combos[3][1] == (F(-11, 3) + F(21, 40) * a,)
    assert jb.leading(2) == -F(5, 3) * a
    assert jb.leading(4) == F(154, 9) * a**4
    assert j_basis(F(-8, 3)).leading(3) == 0
    assert j_basis(F(-8, 9)).leading(5) == 0


def test_small_cycles_generic():
    res = small_cycle_builder(F(1, 2), 3, precision_digits=60)
    assert res.verified >= 3
    assert res.series_changes == 3
    deltas = res.deltas[1:5]
    assert all(x * y < 0 for x, y in zip(deltas, deltas[1:]))


def test_small_cycles_infeasible_on_wrong_side():
    with pytest.raises(TargetInfeasible):
        small_cycle_builder(F(-8, 3) + F(1, 100), 4, verify=False)
    with pytest.raises(TargetInfeasible):
        small_cycle_builder(F(1, 2), 7, verify=False)


def test_independence_n0_and_planted_column():
    sys = classify(-1)
    (ann,) = annuli(sys)
    hs = default_levels(ann, 12)
    rep = independence_check(sys, ann, 0, hs)
    assert rep.independent and rep.rank == 3
    a = sys.a
    planted = {3: (F(1),), 2: (-2 / a,), 1: (1 / a,)}
    rep = independence_check(sys, ann, 0, hs, extra_columns=[planted])
    assert rep.vanishing_columns == [3] and not rep.independent


def test_independence_n1_on_eight_loop():
    sys = classify(F(3, 4))
    for ann in annuli(sys):
        rep = independence_check(sys, ann, 1, default_levels(ann, 12))
        assert rep.independent and rep.rank == 6


def test_independence_needs_samples():
    sys = classify(-1)
    (ann,) = annuli(sys)
    with pytest.raises(InsufficientSamples):
        independence_check(sys, ann, 1, default_levels(ann, 5))
