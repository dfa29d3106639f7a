"""Zeroes of Melnikov forms on period annuli.

* ``count_zeros``: sign changes on a level grid, log-spaced toward finite
  endpoints, with optional bisection refinement.
* ``bound_for``: the upper bounds 3n+2 (interior eight loop), 4n+4
  (exterior eight loop) and 4n+3 (saddle loop) for coefficient degree n.
* ``bound_compliance``: randomized, vectorized check of those bounds.
* ``j_basis`` / ``small_cycle_builder``: the J_0..J_5 combinations that are
  O(h^{k+1}) at the center, and alternating-coefficient combinations with
  many small positive zeroes.
* ``independence_check``: numerical rank of {h^i I_j} on sampled levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .abelian import basis_integrals, expand_series, integral_Ik, series_of_form
from .config import DEFAULT, RunConfig
from .errors import (
    FlatnessViolation,
    InsufficientSamples,
    NoBoundAvailable,
    TargetInfeasible,
)
from .hamiltonian import Annulus, AnnulusId, HamiltonianSystem, Regime, annuli, classify
from .melnikov import MelnikovForm, eval_melnikov
from .polyalg import HPoly, as_fraction, format_rational, hpoly, hpoly_eval

F = Fraction
EDGE = mpmath.mpf("1e-10")  # closest relative approach of grids to a finite endpoint


# --------------------------------------------------------------------------
# grids and sign changes

def h_cutoff(ann: Annulus):
    """Truncation level for unbounded annuli: 10^3 (1 + |h_lo|)."""
    return 1000 * (1 + abs(ann.h_lo))


def level_grid(ann: Annulus, n: int, h_max=None) -> list:
    """n levels inside sigma, log-spaced toward each finite endpoint."""
    if n < 2:
        raise ValueError("grid needs at least two points")
    lo = ann.h_lo
    if ann.bounded:
        span = ann.span
        half = n // 2
        e0, e1 = mpmath.log10(EDGE), mpmath.log10(mpmath.mpf(1) / 2)
        # the midpoint belongs to the lower half only
        low = mpmath.linspace(e0, e1, half)
        high = mpmath.linspace(e0, e1, n - half + 1)[:-1]
        pts = ([lo + span * mpmath.power(10, e) for e in low]
               + [ann.h_hi - span * mpmath.power(10, e) for e in high])
    else:
        top = mpmath.mpf(h_max) if h_max is not None else h_cutoff(ann)
        scale = 1 + abs(lo)
        exps = mpmath.linspace(mpmath.log10(EDGE), mpmath.log10((top - lo) / scale), n)
        pts = [lo + scale * mpmath.power(10, e) for e in exps]
    return sorted(set(pts))


def sign_changes(values: Sequence) -> List[int]:
    """Indices i such that values[i] and the next nonzero value differ in sign."""
    out = []
    prev = None
    for i, v in enumerate(values):
        if v == 0:
            continue
        if prev is not None and (values[prev] > 0) != (v > 0):
            out.append(prev)
        prev = i
    return out


@dataclass
class ZeroReport:
    annulus: Annulus
    brackets: List[Tuple[object, object]]
    grid_size: int
    refined: bool
    h_max: Optional[object] = None
    tail_certified: Optional[bool] = None

    @property
    def count(self) -> int:
        return len(self.brackets)

    @property
    def zeros(self) -> list:
        return [(lo + hi) / 2 for lo, hi in self.brackets]

    def to_json(self) -> dict:
        out = {
            "annulus": self.annulus.to_json(),
            "count": self.count,
            "brackets": [[mpmath.nstr(lo, 17), mpmath.nstr(hi, 17)] for lo, hi in self.brackets],
            "grid_size": self.grid_size,
            "refined": self.refined,
        }
        if self.h_max is not None:
            out["h_max"] = mpmath.nstr(self.h_max, 17)
            out["tail_certified"] = self.tail_certified
        return out


def _form_values(form: MelnikovForm, sys, ann, hs, config: RunConfig) -> list:
    with mpmath.workdps(config.precision_digits):
        return [eval_melnikov(form, basis_integrals(sys, ann, h, 2, False, config), h) for h in hs]


def count_zeros(form: MelnikovForm, sys: HamiltonianSystem, ann: Annulus, grid_n: int = 200,
                refine: bool = False, h_max=None, config: RunConfig = DEFAULT) -> ZeroReport:
    """Bracket the sign changes of the form on ``ann``.

    Unbounded annuli are cut at ``h_max`` (default 10^3 (1 + |h_lo|)); two
    extra samples at 10 h_max and 100 h_max certify that the sign has
    settled, i.e. that the leading growth term dominates beyond the cutoff.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    with mpmath.workdps(config.precision_digits):
        top = None if ann.bounded else (mpmath.mpf(h_max) if h_max is not None else h_cutoff(ann))
        hs = level_grid(ann, grid_n, top)
        vals = _form_values(form, sys, ann, hs, config)
        brackets = [(hs[i], hs[j]) for i, j in _pairs(vals)]
        tail = None
        if top is not None:
            far = [top * 10, top * 100]
            far_vals = _form_values(form, sys, ann, far, config)
            tail = sign_changes([vals[-1]] + far_vals) == []
        if refine:
            span = ann.span if ann.bounded else top - ann.h_lo
            brackets = [_bisect(form, sys, ann, lo, hi, EDGE * span, config) for lo, hi in brackets]
    return ZeroReport(ann, brackets, len(hs), refine, top, tail)


def _pairs(vals):
    nz = [i for i, v in enumerate(vals) if v != 0]
    return [(i, j) for i, j in zip(nz, nz[1:]) if (vals[i] > 0) != (vals[j] > 0)]


def _bisect(form, sys, ann, lo, hi, width, config):
    f_lo = _form_values(form, sys, ann, [lo], config)[0]
    while hi - lo > width:
        mid = (lo + hi) / 2
        f_mid = _form_values(form, sys, ann, [mid], config)[0]
        if f_mid == 0:
            return (mid, mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo, hi)


# --------------------------------------------------------------------------
# bounds

def bound_for(regime: Regime, ann_id, n: int) -> int:
    """Upper bound on zeroes of degree-n forms on the given annulus."""
    if isinstance(ann_id, Annulus):
        ann_id = ann_id.id
    ann_id = AnnulusId(ann_id)
    if n < 0:
        raise ValueError("n must be non-negative")
    if regime is Regime.EIGHT_LOOP:
        if ann_id in (AnnulusId.INTERIOR_ORIGIN, AnnulusId.INTERIOR_SECOND):
            return 3 * n + 2
        if ann_id is AnnulusId.EXTERIOR:
            return 4 * n + 4
    if regime is Regime.SADDLE_LOOP:
        return 4 * n + 3
    raise NoBoundAvailable(f"no zero bound is available for the {regime.value} regime "
                           f"({ann_id.value} annulus)")


@dataclass
class BasisGrid:
    """I_0, I_1, I_2 sampled on a level grid, as float64 arrays."""

    annulus: Annulus
    h: np.ndarray
    I: np.ndarray  # shape (N, 3)

    def design(self, n: int) -> np.ndarray:
        """Columns h^i I_j (i <= n, j = 0, 1, 2), each scaled to unit max."""
        cols = [self.h ** i * self.I[:, j] for i in range(n + 1) for j in range(3)]
        G = np.stack(cols, axis=1)
        return G / np.abs(G).max(axis=0)


def basis_grid(sys: HamiltonianSystem, ann: Annulus, grid_n: int = 600,
               config: RunConfig = DEFAULT) -> BasisGrid:
    with mpmath.workdps(config.precision_digits):
        top = None if ann.bounded else h_cutoff(ann)
        hs = level_grid(ann, grid_n, top)
        rows = [basis_integrals(sys, ann, h, 2, False, config) for h in hs]
    return BasisGrid(ann, np.array([float(h) for h in hs]), np.array([[float(v) for v in r] for r in rows]))


def count_sign_changes(M: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Sign changes down each column, ignoring entries at the noise level."""
    S = np.sign(M)
    S[np.abs(M) <= noise] = 0
    counts = np.zeros(M.shape[1], dtype=int)
    last = np.zeros(M.shape[1])
    for row in S:
        flip = (row != 0) & (last != 0) & (row != last)
        counts += flip
        last = np.where(row != 0, row, last)
    return counts


@dataclass
class ComplianceResult:
    regime: Regime
    annulus: Annulus
    n: int
    bound: int
    trials: int
    max_count: int
    histogram: Dict[int, int]
    violations: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "regime": self.regime.value,
            "annulus": self.annulus.id.value,
            "n": self.n,
            "bound": self.bound,
            "trials": self.trials,
            "max_count": self.max_count,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "violations": self.violations,
        }


def bound_compliance(sys: HamiltonianSystem, grid: BasisGrid, n: int, trials: int,
                     rng: np.random.Generator, batch: int = 2000) -> ComplianceResult:
    """Count zeroes of ``trials`` random degree-n forms and compare to the bound.

    Coefficients are standard normal on the column-normalized basis
    h^i I_j, so every basis function contributes on the same scale.
    Statistical evidence only: a grid can miss close pairs of zeroes.
    """
    ann = grid.annulus
    bound = bound_for(sys.regime, ann.id, n)
    G = grid.design(n)
    absG = np.abs(G)
    hist: Dict[int, int] = {}
    violations = []
    done = 0
    max_count = 0
    while done < trials:
        m = min(batch, trials - done)
        C = rng.standard_normal((G.shape[1], m))
        counts = count_sign_changes(G @ C, 1e-13 * (absG @ np.abs(C)))
        for c in counts:
            hist[int(c)] = hist.get(int(c), 0) + 1
        max_count = max(max_count, int(counts.max()))
        for idx in np.nonzero(counts > bound)[0]:
            violations.append({"count": int(counts[idx]), "coefficients": C[:, idx].tolist()})
        done += m
    return ComplianceResult(sys.regime, ann, n, bound, trials, max_count, hist, violations)


# --------------------------------------------------------------------------
# J basis near the center

J_LEADING = {
    2: lambda a: -F(5, 3) * a,
    3: lambda a: F(49, 32) * a**2 * (a + F(8, 3)),
    4: lambda a: F(154, 9) * a**4,
    5: lambda a: F(49, 128) * a**5 * (a + F(8, 9)),
}


def _j_table(a: Fraction) -> Dict[int, Tuple[HPoly, HPoly, HPoly]]:
    al1, be1, ga1 = a, -F(11, 3) + F(21, 40) * a, F(22, 3) - F(61, 20) * a
    al2 = F(208, 63) * a - F(2, 3) * a**2
    be2 = -F(2288, 189) + F(52, 9) * a + F(1, 4) * a**2
    ga2 = F(4576, 189) - F(1144, 63) * a + F(5, 6) * a**2
    de2 = F(8, 3) * a**2 + a**3
    al3 = F(17, 81) * a - F(775, 5148) * a**2 + F(63, 9152) * a**3
    be3 = -F(187, 243) + F(55, 72) * a - F(1085, 9152) * a**2 - F(189, 73216) * a**3
    ga3 = F(374, 243) - F(631, 324) * a + F(155, 288) * a**2 - F(315, 36608) * a**3
    de3 = F(119, 702) * a**2 - F(147, 1144) * a**3 - F(189, 18304) * a**4
    et3 = F(49, 234) * a**3
    return {
        0: (hpoly(1), (), ()),
        1: ((), hpoly(1), ()),
        2: ((), hpoly(1), hpoly(-2)),
        3: (hpoly(0, al1), hpoly(be1), hpoly(ga1)),
        4: (hpoly(0, al2), hpoly(be2, de2), hpoly(ga2)),
        5: (hpoly(0, al3), hpoly(be3, de3), hpoly(ga3, et3)),
    }


@dataclass(frozen=True)
class JBasis:
    """J_0..J_5 over (I_0, I_1, I_2) with exact series coefficients (c = 1)."""

    a: Fraction
    combos: Tuple[Tuple[HPoly, HPoly, HPoly], ...]
    series: Tuple[Tuple[Fraction, ...], ...]  # series[k][j] = coefficient of h^j in J_k

    def form(self, k: int) -> MelnikovForm:
        order = 1 if k <= 3 else 2
        return MelnikovForm(order, *self.combos[k])

    def leading(self, k: int) -> Fraction:
        return self.series[k][k + 1]


def j_basis(a, order: int = 10) -> JBasis:
    """Instantiate the J table at a and check J_k = O(h^{k+1}) exactly.

    Also checks the leading coefficients of J_2..J_5 against their closed
    forms.  Any mismatch is a transcription error: FlatnessViolation.
    """
    from .hamiltonian import check_parameter

    a = check_parameter(a)
    table = _j_table(a)
    s = expand_series(a, order)
    series = []
    for k in range(6):
        ser = list(series_of_form(*table[k], s)) + [F(0)] * (order + 2)
        ser = tuple(ser[: order + 1])
        bad = [j for j in range(1, k + 1) if ser[j] != 0]
        if bad:
            raise FlatnessViolation(f"J_{k} has nonzero h^{bad[0]} coefficient {ser[bad[0]]} at a = {a}")
        if k in J_LEADING and ser[k + 1] != J_LEADING[k](a):
            raise FlatnessViolation(f"J_{k} leading coefficient {ser[k + 1]} != {J_LEADING[k](a)} at a = {a}")
        series.append(ser)
    return JBasis(a, tuple(table[k] for k in range(6)), tuple(series))


# --------------------------------------------------------------------------
# small-amplitude constructions

@dataclass
class SmallCycleResult:
    a: Fraction
    target: int
    order: int
    resonant: bool
    weights: Tuple[Fraction, ...]
    combination: MelnikovForm
    deltas: Tuple[Fraction, ...]  # series coefficients (c = 1), index = power of h
    predicted: Tuple[Fraction, ...]  # |delta_j / delta_{j+1}|
    window: Tuple[object, object]
    report: Optional[ZeroReport] = None
    series_changes: int = 0

    @property
    def verified(self) -> int:
        return self.report.count if self.report is not None else 0

    def to_json(self) -> dict:
        out = {
            "a": format_rational(self.a),
            "target": self.target,
            "order": self.order,
            "resonant": self.resonant,
            "weights": [format_rational(w) for w in self.weights],
            "combination": self.combination.to_json(),
            "deltas": [format_rational(d) for d in self.deltas[1:]],
            "predicted_zeros": [mpmath.nstr(mpmath.mpf(r.numerator) / r.denominator, 6) for r in self.predicted],
            "window": [mpmath.nstr(self.window[0], 6), mpmath.nstr(self.window[1], 6)],
            "series_sign_changes": self.series_changes,
        }
        if self.report is not None:
            out["verified_sign_changes"] = self.report.count
            out["brackets"] = [[mpmath.nstr(lo, 10), mpmath.nstr(hi, 10)] for lo, hi in self.report.brackets]
        return out


def _edge(sys: HamiltonianSystem):
    """Distance from 0 to the nearest other critical value (or 1 if none)."""
    others = [abs(cp.h) for cp in sys.critical_points if cp.x != 0]
    return min(others) if others else mpmath.mpf(1)


def small_cycle_builder(a, target: int, order: Optional[int] = None, ratio: int = 1000,
                        h_top=None, verify: bool = True, precision_digits: int = 80,
                        points_per_decade: int = 12) -> SmallCycleResult:
    """A combination of J_0..J_m with ``target`` small positive zeroes.

    The series coefficients delta_1..delta_{target+1} alternate in sign and
    the predicted zeroes |delta_j / delta_{j+1}| are spaced by ``ratio``.
    ``order`` selects the span: M_1 (J_0..J_3, dimension 4) or M_2
    (J_0..J_5, dimension 6).  A target below the dimension uses J_0..J_target
    freely; a target equal to the dimension needs the resonance of the top
    J near a = -8/3 (M_1) or a = -8/9 (M_2), and is infeasible unless the
    two top coefficients already have opposite signs.
    """
    a = as_fraction(a)
    if order is None:
        order = 1 if target <= 4 else 2
    dim = 4 if order == 1 else 6
    if target < 1 or target > dim:
        raise TargetInfeasible(f"target {target} exceeds the dimension {dim} of the M_{order} span")
    resonant = target == dim
    m = dim - 1 if resonant else target
    jb = j_basis(a, order=target + 4)
    ser = jb.series
    ratio = F(ratio)

    # top coefficient and the largest predicted zero r_target
    if resonant:
        top, nxt = ser[m][target], ser[m][target + 1]
        if top == 0 or nxt == 0 or (top > 0) == (nxt > 0):
            raise TargetInfeasible(
                f"J_{m} coefficients {format_rational(top)}, {format_rational(nxt)} at a = {format_rational(a)} "
                "do not alternate; move a slightly past the resonant value")
        r_top = abs(top / nxt)
    else:
        lead = ser[m][m + 1]
        if lead == 0:
            raise TargetInfeasible(f"J_{m} has vanishing leading coefficient at a = {format_rational(a)}")
        if h_top is None:
            nxt = ser[m][m + 2]
            r_top = F(1, 100) * min(F(1), abs(lead / nxt) if nxt else F(1))
            with mpmath.workdps(30):
                edge = F(mpmath.nstr(_edge(classify(a)) / 20, 15))
            r_top = min(r_top, edge)
        else:
            r_top = as_fraction(h_top)
    # predicted zeroes r_1 < ... < r_target, spaced by ``ratio``
    radii = [r_top / ratio ** (target - j) for j in range(1, target + 1)]

    # target coefficients: delta_j = -delta_{j+1} r_j, anchored at the top of J_m
    want = {target + 1: ser[m][target + 1]}
    for j in range(target, 0, -1):
        want[j] = -want[j + 1] * radii[j - 1]
    # weights, solved upward: delta_j = sum_{k < j} w_k [J_k]_j involves w_{j-1} last
    w = [F(0)] * (m + 1)
    w[m] = F(1)
    for j in range(1, m + 1):
        partial = sum((w[k] * ser[k][j] for k in range(j - 1)), F(0))
        w[j - 1] = (want[j] - partial) / ser[j - 1][j]
    combo = MelnikovForm(order, (), (), ())
    for k in range(m + 1):
        combo = combo + jb.form(k).scaled(w[k])
    combo = MelnikovForm(order, *combo.coeffs)
    s = expand_series(a, target + 4)
    full = list(series_of_form(*combo.coeffs, s))
    deltas = tuple(full[: target + 2] + [F(0)] * max(0, target + 2 - len(full)))
    predicted = tuple(abs(deltas[j] / deltas[j + 1]) for j in range(1, target + 1))
    series_changes = len(sign_changes(list(deltas[1:])))

    with mpmath.workdps(30):
        sys30 = classify(a)
        hi = min(mpmath.mpf(100) * _q2mp(predicted[-1]), _edge(sys30) / 2)
        lo = _q2mp(predicted[0]) / 100
    result = SmallCycleResult(a, target, order, resonant, tuple(w), combo, deltas, predicted, (lo, hi),
                              None, series_changes)
    if verify:
        result.report = verify_small_cycles(result, precision_digits, points_per_decade)
    return result


def _q2mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def verify_small_cycles(result: SmallCycleResult, precision_digits: int = 80,
                        points_per_decade: int = 12) -> ZeroReport:
    """Sign changes of the combination, evaluated by quadrature, on a log grid."""
    if precision_digits < 60:
        raise ValueError("small-cycle verification needs at least 60 digits")
    config = RunConfig(precision_digits=precision_digits,
                       quad_tol=float(mpmath.mpf(10) ** (-(precision_digits - 15))))
    with mpmath.workdps(precision_digits):
        sys = classify(result.a)
        ann = annuli(sys)[0]
        lo, hi = mpmath.mpf(result.window[0]), mpmath.mpf(result.window[1])
        decades = float(mpmath.log10(hi / lo))
        n = max(16, int(decades * points_per_decade) + 1)
        hs = [lo * mpmath.power(hi / lo, mpmath.mpf(i) / (n - 1)) for i in range(n)]
        vals = _form_values(result.combination, sys, ann, hs, config)
        brackets = [(hs[i], hs[j]) for i, j in _pairs(vals)]
    return ZeroReport(ann, brackets, n, False)


# --------------------------------------------------------------------------
# independence of h^i I_j

@dataclass
class IndependenceReport:
    dimension: int
    singular_values: List[object]
    smallest: object
    rank: int
    independent: bool
    vanishing_columns: List[int]
    threshold: float

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "rank": self.rank,
            "smallest_scaled_singular_value": mpmath.nstr(self.smallest, 6),
            "independent": self.independent,
            "vanishing_columns": self.vanishing_columns,
        }


def default_levels(ann: Annulus, count: int) -> list:
    """Levels spread over the whole annulus (unbounded ones up to h_lo + 10(1 + |h_lo|))."""
    lo = ann.h_lo
    hi = ann.h_hi if ann.bounded else lo + 10 * (1 + abs(lo))
    return [lo + (hi - lo) * (mpmath.mpf(i) + mpmath.mpf(1) / 2) / count for i in range(count)]


def independence_check(sys: HamiltonianSystem, ann: Annulus, n: int, sample_hs: Sequence,
                       extra_columns: Sequence[Mapping[int, HPoly]] = (), threshold: float = 1e-8,
                       config: RunConfig = DEFAULT) -> IndependenceReport:
    """Scaled smallest singular value of the sample matrix of h^i I_j.

    ``extra_columns`` adds combinations sum_k c_k(h) I_k (k <= 5, each I_k
    by direct quadrature).  A column whose norm is below ``threshold``
    times the norm of its separate terms is reported as vanishing, which
    counts as a dependency.
    """
    dim = 3 * (n + 1) + len(extra_columns)
    if len(sample_hs) < dim:
        raise InsufficientSamples(f"need at least {dim} levels, got {len(sample_hs)}")
    with mpmath.workdps(config.precision_digits):
        rows, scales = [], []
        for h in sample_hs:
            h = mpmath.mpf(h)
            kmax = max([2] + [max(col) for col in extra_columns])
            I = [integral_Ik(sys, ann, h, k, config) for k in range(kmax + 1)]
            row = [h ** i * I[j] for i in range(n + 1) for j in range(3)]
            sc = [abs(v) for v in row]
            for col in extra_columns:
                terms = [hpoly_eval(c, h) * I[k] for k, c in col.items()]
                row.append(sum(terms))
                sc.append(sum(abs(t) for t in terms))
            rows.append(row)
            scales.append(sc)
        A = mpmath.matrix(rows)
        vanishing = []
        for j in range(A.cols):
            col_norm = mpmath.sqrt(sum(A[i, j] ** 2 for i in range(A.rows)))
            term_norm = mpmath.sqrt(sum(scales[i][j] ** 2 for i in range(A.rows)))
            if col_norm <= threshold * term_norm:
                vanishing.append(j)
            for i in range(A.rows):
                A[i, j] = A[i, j] / col_norm if col_norm else 0
        sv = sorted(mpmath.svd_r(A, compute_uv=False), reverse=True)
        smallest = sv[-1] if len(sv) >= dim else mpmath.mpf(0)
        rank = sum(1 for v in sv if v > threshold)
        independent = not vanishing and smallest > threshold
    return IndependenceReport(dim, list(sv), smallest, rank, independent, vanishing, threshold)
