"""The quartic Hamiltonian H = y^2/2 + x^2/2 - 2x^3/3 + a x^4/4.

Classifies the phase portrait by the parameter a, lists the period annuli
and locates the turning points of the oval through a given level.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath

from .errors import ExcludedParameter, LevelOutsideAnnulus
from .polyalg import BivariatePoly, as_fraction, format_rational, to_mpf

EXCLUDED = (Fraction(0), Fraction(8, 9))


class Regime(enum.Enum):
    SADDLE_LOOP = "saddle-loop"
    EIGHT_LOOP = "eight-loop"
    CUSPIDAL_LOOP = "cuspidal-loop"
    GLOBAL_CENTER = "global-center"


class PointKind(enum.Enum):
    CENTER = "center"
    SADDLE = "saddle"
    CUSP = "cusp"


class AnnulusId(enum.Enum):
    INTERIOR_ORIGIN = "interior-origin"
    INTERIOR_SECOND = "interior-second"
    EXTERIOR = "exterior"
    UNIQUE = "unique"


@dataclass(frozen=True)
class CriticalPoint:
    x: object  # mpf
    h: object  # mpf
    kind: PointKind
    x_exact: Optional[Fraction] = None
    h_exact: Optional[Fraction] = None


@dataclass(frozen=True)
class Annulus:
    """A period annulus: the ovals delta(h) for h in the open interval sigma.

    ``anchor`` is a point strictly inside every oval of the family; the
    turning points are the first crossings of U = h to either side of it.
    """

    id: AnnulusId
    h_lo: object
    h_hi: object
    lo_kind: str
    hi_kind: str
    anchor: object
    h_lo_exact: Optional[Fraction] = None
    h_hi_exact: Optional[Fraction] = None

    @property
    def bounded(self) -> bool:
        return self.h_hi != mpmath.inf

    @property
    def sigma(self) -> Tuple[object, object]:
        return (self.h_lo, self.h_hi)

    @property
    def span(self):
        return self.h_hi - self.h_lo

    def contains(self, h) -> bool:
        return self.h_lo < h < self.h_hi

    def to_json(self) -> dict:
        def fmt(v, exact):
            if exact is not None:
                return format_rational(exact)
            if v == mpmath.inf:
                return "inf"
            return mpmath.nstr(v, 20)

        return {
            "id": self.id.value,
            "h_lo": fmt(self.h_lo, self.h_lo_exact),
            "h_hi": fmt(self.h_hi, self.h_hi_exact),
            "lo_kind": self.lo_kind,
            "hi_kind": self.hi_kind,
        }


def rational_sqrt(q: Fraction) -> Optional[Fraction]:
    """Exact square root of a non-negative rational, or None."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def potential(a) -> BivariatePoly:
    a = as_fraction(a)
    return BivariatePoly({(2, 0): Fraction(1, 2), (3, 0): Fraction(-2, 3), (4, 0): a / 4})


def hamiltonian_poly(a) -> BivariatePoly:
    return potential(a) + BivariatePoly({(0, 2): Fraction(1, 2)})


def check_parameter(a) -> Fraction:
    a = as_fraction(a)
    if a in EXCLUDED:
        raise ExcludedParameter(f"a = {format_rational(a)} is excluded (a must differ from 0 and 8/9)")
    return a


@dataclass(eq=False)
class HamiltonianSystem:
    a: Fraction
    U: BivariatePoly
    H: BivariatePoly
    regime: Regime
    critical_points: List[CriticalPoint] = field(default_factory=list)

    def U_mp(self, x):
        a = to_mpf(self.a)
        return x * x * (mpmath.mpf(1) / 2 - x * (mpmath.mpf(2) / 3 - a * x / 4))

    def dU_mp(self, x):
        a = to_mpf(self.a)
        return x * (1 - x * (2 - a * x))

    @property
    def critical_values(self) -> list:
        return [cp.h for cp in self.critical_points]

    def to_json(self) -> dict:
        return {
            "a": format_rational(self.a),
            "regime": self.regime.value,
            "critical_points": [
                {
                    "x": format_rational(cp.x_exact) if cp.x_exact is not None else mpmath.nstr(cp.x, 25),
                    "h": format_rational(cp.h_exact) if cp.h_exact is not None else mpmath.nstr(cp.h, 25),
                    "kind": cp.kind.value,
                }
                for cp in self.critical_points
            ],
            "annuli": [ann.to_json() for ann in annuli(self)],
        }


def _regime(a: Fraction) -> Regime:
    if a < 0:
        return Regime.SADDLE_LOOP
    if a < 1:
        return Regime.EIGHT_LOOP
    if a == 1:
        return Regime.CUSPIDAL_LOOP
    return Regime.GLOBAL_CENTER


def classify(a) -> HamiltonianSystem:
    """Regime and critical points (roots of U'(x) = x(1 - 2x + a x^2))."""
    a = check_parameter(a)
    U = potential(a)
    sys = HamiltonianSystem(a=a, U=U, H=hamiltonian_poly(a), regime=_regime(a))
    points = [CriticalPoint(mpmath.mpf(0), mpmath.mpf(0), PointKind.CENTER, Fraction(0), Fraction(0))]
    disc = 1 - a
    if disc >= 0:
        s_exact = rational_sqrt(disc)
        s = mpmath.sqrt(to_mpf(disc))
        for sign in (-1, 1):
            x = (1 + sign * s) / to_mpf(a)
            x_exact = (1 + sign * s_exact) / a if s_exact is not None else None
            # U'' = 2x - 2 at these roots
            if disc == 0:
                kind = PointKind.CUSP
            else:
                kind = PointKind.CENTER if x > 1 else PointKind.SADDLE
            h_exact = U(x_exact) if x_exact is not None else None
            points.append(CriticalPoint(x, sys.U_mp(x), kind, x_exact, h_exact))
            if disc == 0:
                break
    points.sort(key=lambda cp: cp.x)
    sys.critical_points = points
    return sys


def _by_kind(sys: HamiltonianSystem, kind: PointKind) -> List[CriticalPoint]:
    return [cp for cp in sys.critical_points if cp.kind is kind]


def annuli(sys: HamiltonianSystem) -> List[Annulus]:
    origin = sys.critical_points[[cp.x for cp in sys.critical_points].index(0)]
    zero = mpmath.mpf(0)
    if sys.regime is Regime.GLOBAL_CENTER:
        return [Annulus(AnnulusId.UNIQUE, zero, mpmath.inf, "center", "infinity", zero, Fraction(0), None)]
    if sys.regime is Regime.CUSPIDAL_LOOP:
        cusp = _by_kind(sys, PointKind.CUSP)[0]
        return [
            Annulus(AnnulusId.INTERIOR_ORIGIN, zero, cusp.h, "center", "cusp", zero, Fraction(0), cusp.h_exact),
            Annulus(AnnulusId.EXTERIOR, cusp.h, mpmath.inf, "cusp", "infinity", zero, cusp.h_exact, None),
        ]
    saddles = _by_kind(sys, PointKind.SADDLE)
    if sys.regime is Regime.SADDLE_LOOP:
        low = min(saddles, key=lambda cp: cp.h)
        return [Annulus(AnnulusId.UNIQUE, zero, low.h, "center", "saddle", zero, Fraction(0), low.h_exact)]
    # eight loop
    saddle = saddles[0]
    second = [cp for cp in _by_kind(sys, PointKind.CENTER) if cp is not origin][0]
    return [
        Annulus(AnnulusId.INTERIOR_ORIGIN, zero, saddle.h, "center", "saddle", zero, Fraction(0), saddle.h_exact),
        Annulus(AnnulusId.INTERIOR_SECOND, second.h, saddle.h, "center", "saddle", second.x,
                second.h_exact, saddle.h_exact),
        Annulus(AnnulusId.EXTERIOR, saddle.h, mpmath.inf, "saddle", "infinity", saddle.x, saddle.h_exact, None),
    ]


def get_annulus(sys: HamiltonianSystem, ann_id) -> Annulus:
    if isinstance(ann_id, str):
        ann_id = AnnulusId(ann_id)
    for ann in annuli(sys):
        if ann.id is ann_id:
            return ann
    raise KeyError(f"{sys.regime.value} has no {ann_id.value} annulus")


def check_level(ann: Annulus, h, margin: float = 1e-12) -> None:
    """Reject levels outside sigma or too close to a degenerate endpoint.

    Saddle and cusp endpoints need a relative clearance ``margin``; a center
    endpoint only needs h strictly above it, since the oval shrinks to a
    nondegenerate ellipse there.
    """
    h = mpmath.mpf(h)
    if not ann.contains(h):
        raise LevelOutsideAnnulus(f"h = {mpmath.nstr(h, 12)} is outside {ann.id.value} annulus "
                                  f"({mpmath.nstr(ann.h_lo, 12)}, {mpmath.nstr(ann.h_hi, 12)})")
    scale = ann.span if ann.bounded else max(mpmath.mpf(1), abs(ann.h_lo))
    floor = mpmath.mpf(10) ** (-mpmath.mp.dps + 5) * max(mpmath.mpf(1), abs(ann.h_lo))
    for end, kind in ((ann.h_lo, ann.lo_kind), (ann.h_hi, ann.hi_kind)):
        if kind == "infinity":
            continue
        need = floor if kind == "center" else margin * scale
        if abs(h - end) <= need:
            raise LevelOutsideAnnulus(f"h = {mpmath.nstr(h, 12)} is within the endpoint margin of {kind} "
                                      f"level {mpmath.nstr(end, 12)}")


def _solve_level(sys: HamiltonianSystem, h, lo, hi):
    """Root of U(x) = h in [lo, hi], where U - h changes sign once."""
    f = lambda x: sys.U_mp(x) - h
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ArithmeticError("bracket does not straddle the level")
    eps = mpmath.mpf(2) ** (-mpmath.mp.prec + 4)
    x = (lo + hi) / 2
    for _ in range(20 * mpmath.mp.prec):
        fx = f(x)
        if fx == 0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        d = sys.dU_mp(x)
        step = fx / d if d != 0 else None
        cand = x - step if step is not None else None
        if cand is None or not (min(lo, hi) < cand < max(lo, hi)) or abs(step) > abs(hi - lo) / 2:
            cand = (lo + hi) / 2
            step = hi - lo
        if abs(step) <= eps * max(abs(cand), mpmath.mpf(1)):
            return cand
        x = cand
    raise ArithmeticError("turning point iteration did not converge")


def turning_points(sys: HamiltonianSystem, ann: Annulus, h, margin: float = 1e-12):
    """(x_minus, x_plus): the ends of the oval of ``ann`` on the level H = h."""
    h = mpmath.mpf(h)
    check_level(ann, h, margin)
    anchor = mpmath.mpf(ann.anchor)
    xs = [cp.x for cp in sys.critical_points]

    def walk(direction):
        prev = anchor
        ordered = sorted((x for x in xs if (x - anchor) * direction > 0), key=lambda x: direction * x)
        for x in ordered:
            if sys.U_mp(x) >= h:
                return _solve_level(sys, h, prev, x) if direction > 0 else _solve_level(sys, h, x, prev)
            prev = x
        step = max(mpmath.mpf(1), abs(prev))
        far = prev + direction * step
        while sys.U_mp(far) < h:
            step *= 2
            far = prev + direction * step
        return _solve_level(sys, h, prev, far) if direction > 0 else _solve_level(sys, h, far, prev)

    return walk(-1), walk(1)
