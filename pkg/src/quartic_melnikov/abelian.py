"""The Abelian integrals I_k(h) = oint_{delta(h)} x^k y dx.

Numerics
    Quadrature over the oval uses x = m + w cos(theta).  The square-root
    endpoint behaviour of y is absorbed by the substitution, so the integrand
    is smooth and 2*pi-periodic in theta and the doubling trapezoid rule
    converges geometrically.  Near a homoclinic level the convergence slows
    down; past ``MAX_NODES`` the integral is redone with tanh-sinh.

Exact algebra
    Reduction of I_k (k >= 3) onto I_0, I_1, I_2, the Picard-Fuchs system in
    h, and its power-series solution at the center h = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .config import DEFAULT, RunConfig
from .errors import (
    ExcludedParameter,
    QuadratureNotConverged,
    SingularSystem,
    StepFailure,
)
from .hamiltonian import Annulus, HamiltonianSystem, check_level, check_parameter, turning_points
from .polyalg import HPoly, OneForm, hpoly, hpoly_add, hpoly_eval, hpoly_mul, to_mpf

MAX_NODES = 4096


@dataclass(frozen=True)
class AbelianValue:
    h: object
    I: Tuple[object, object, object]
    dI: Optional[Tuple[object, object, object]] = None


# --------------------------------------------------------------------------
# oval geometry and quadrature

@dataclass(frozen=True)
class Oval:
    """Oval of one annulus at level h, with h - U = (x - x_m)(x_p - x) R(x)."""

    h: object
    x_minus: object
    x_plus: object
    mid: object
    half: object
    r: Tuple[object, object, object]  # R(x) = r0 + r1 x + r2 x^2
    cuts: Tuple[object, ...] = ()  # theta in (0, pi) of critical points inside the oval

    def R(self, x):
        r0, r1, r2 = self.r
        return r0 + x * (r1 + x * r2)

    def dR(self, x):
        _, r1, r2 = self.r
        return r1 + 2 * r2 * x

    @property
    def pinched(self) -> bool:
        """True when R nearly vanishes at an interior critical point.

        The trapezoid rule then converges too slowly to be worth trying.
        """
        r0, r1, r2 = self.r
        for t in self.cuts:
            x = self.mid + self.half * mpmath.cos(t)
            if self.R(x) < mpmath.mpf("1e-3") * (abs(r0) + abs(r1 * x) + abs(r2 * x * x)):
                return True
        return False


def _oval_key(sys, ann, h, margin):
    return (str(sys.a), ann.id.value, mpmath.nstr(mpmath.mpf(h), mpmath.mp.dps + 5), mpmath.mp.prec, margin)


@lru_cache(maxsize=4096)
def _cached_oval(key, sys, ann, h, margin):
    xm, xp = turning_points(sys, ann, h, margin)
    a = to_mpf(sys.a)
    s, p = xm + xp, xm * xp
    r2 = a / 4
    r1 = s * r2 - mpmath.mpf(2) / 3
    r0 = s * r1 - p * r2 + mpmath.mpf(1) / 2
    mid, half = s / 2, (xp - xm) / 2
    # exterior ovals pass close to the saddle; R nearly vanishes there
    cuts = tuple(sorted(mpmath.acos((cp.x - mid) / half) for cp in sys.critical_points if xm < cp.x < xp))
    return Oval(mpmath.mpf(h), xm, xp, mid, half, (r0, r1, r2), cuts)


def oval(sys: HamiltonianSystem, ann: Annulus, h, config: RunConfig = DEFAULT) -> Oval:
    h = mpmath.mpf(h)
    return _cached_oval(_oval_key(sys, ann, h, config.endpoint_margin), sys, ann, h, config.endpoint_margin)


def _doubling_trapezoid(sample, period_half: bool, tol, n0: int = 16):
    """Vector trapezoid rule on [0, pi] (even integrands) or [0, 2 pi).

    ``sample(theta)`` returns a list of integrand values.  Returns
    (values, converged).  Convergence: every component changed by at most
    tol times the trapezoid of its absolute value.
    """
    length = mpmath.pi if period_half else 2 * mpmath.pi
    n = n0
    if period_half:
        pts = [sample(mpmath.mpf(0)), sample(mpmath.pi)]
        acc = [(u + v) / 2 for u, v in zip(*pts)]
        acc_abs = [(abs(u) + abs(v)) / 2 for u, v in zip(*pts)]
        for j in range(1, n):
            vals = sample(length * j / n)
            acc = [s + v for s, v in zip(acc, vals)]
            acc_abs = [s + abs(v) for s, v in zip(acc_abs, vals)]
    else:
        acc = None
        for j in range(n):
            vals = sample(length * j / n)
            if acc is None:
                acc = list(vals)
                acc_abs = [abs(v) for v in vals]
            else:
                acc = [s + v for s, v in zip(acc, vals)]
                acc_abs = [s + abs(v) for s, v in zip(acc_abs, vals)]
    est = [s * length / n for s in acc]
    while n < MAX_NODES:
        for j in range(n):
            vals = sample(length * (2 * j + 1) / (2 * n))
            acc = [s + v for s, v in zip(acc, vals)]
            acc_abs = [s + abs(v) for s, v in zip(acc_abs, vals)]
        n *= 2
        new = [s * length / n for s in acc]
        scale = [s * length / n for s in acc_abs]
        if all(abs(u - v) <= tol * max(sc, mpmath.mpf(10) ** (-mpmath.mp.dps)) for u, v, sc in zip(new, est, scale)):
            return new, True
        est = new
    return est, False


def _tanh_sinh_interval(sample, p, q, tol, max_level: int = 12):
    """Vector tanh-sinh rule on [p, q] with level halving.

    Nodes cluster double-exponentially at both ends, which resolves the
    near-singular behaviour of sqrt(R) next to a saddle.  Returns
    (values, abs_values, converged).
    """
    half = (q - p) / 2
    halfpi = mpmath.pi / 2
    tiny = mpmath.mpf(10) ** (-mpmath.mp.dps - 5)

    def node(s):
        z = halfpi * mpmath.sinh(s)
        ez = mpmath.exp(-2 * abs(z))
        w = half * halfpi * mpmath.cosh(s) * 4 * ez / (1 + ez) ** 2  # half * du/ds
        gap = half * 2 * ez / (1 + ez)  # distance of the node from the nearer end
        return (q - gap if s > 0 else p + gap), w, gap

    def row(s):
        t, w, gap = node(s)
        if w < tiny or gap <= 0:
            return None
        vals = sample(t)
        return [w * v for v in vals]

    def add(acc, acc_abs, s):
        r = row(s)
        if r is None:
            return False
        for i, v in enumerate(r):
            acc[i] += v
            acc_abs[i] += abs(v)
        return True

    first = sample((p + q) / 2)
    w0 = half * halfpi
    acc = [w0 * v for v in first]
    acc_abs = [abs(v) for v in acc]
    step = mpmath.mpf(1)
    for sign in (1, -1):
        k = 1
        while add(acc, acc_abs, sign * k * step):
            k += 1
    prev = [v * step for v in acc]
    for _ in range(max_level):
        step /= 2
        for sign in (1, -1):
            k = 1
            while True:
                if not add(acc, acc_abs, sign * k * step) and k > 8:
                    break
                k += 2
        est = [v * step for v in acc]
        scale = [v * step for v in acc_abs]
        if all(abs(u - v) <= tol * max(sc, tiny) for u, v, sc in zip(est, prev, scale)):
            return est, scale, True
        prev = est
    return prev, [v * step for v in acc_abs], False


def _tanh_sinh(sample, count: int, period_half: bool, tol, extra_cuts=()):
    length = mpmath.pi if period_half else 2 * mpmath.pi
    cuts = [length * j / 4 for j in range(5)]
    for t in extra_cuts:
        cuts += [t] if period_half else [t, 2 * mpmath.pi - t]
    cuts = sorted(set(cuts))
    total = [mpmath.mpf(0)] * count
    for p, q in zip(cuts, cuts[1:]):
        vals, _, ok = _tanh_sinh_interval(sample, p, q, tol)
        if not ok:
            raise QuadratureNotConverged(f"tanh-sinh did not converge on [{mpmath.nstr(p, 6)}, {mpmath.nstr(q, 6)}]")
        total = [u + v for u, v in zip(total, vals)]
    return total


def _oval_integrals(ov: Oval, ks: Sequence[int], derivative: bool, tol) -> list:
    two = mpmath.mpf(2)
    w2 = ov.half ** 2

    def sample(theta):
        c = mpmath.cos(theta)
        x = ov.mid + ov.half * c
        root = mpmath.sqrt(2 * ov.R(x))
        if derivative:
            base = two / root
        else:
            sn = mpmath.sin(theta)
            base = two * root * w2 * sn * sn
        return [base * x ** k for k in ks]

    vals, ok = (None, False) if ov.pinched else _doubling_trapezoid(sample, True, tol)
    if not ok:
        vals = _tanh_sinh(sample, len(ks), True, tol, ov.cuts)
    return vals


def basis_integrals(sys: HamiltonianSystem, ann: Annulus, h, kmax: int = 2,
                    derivative: bool = False, config: RunConfig = DEFAULT) -> list:
    """[I_0(h), ..., I_kmax(h)] (or their h-derivatives) by quadrature."""
    with mpmath.workdps(config.precision_digits):
        ov = oval(sys, ann, h, config)
        return _oval_integrals(ov, range(kmax + 1), derivative, mpmath.mpf(config.quad_tol))


def integral_Ik(sys: HamiltonianSystem, ann: Annulus, h, k: int, config: RunConfig = DEFAULT):
    """I_k(h) = 2 int_{x-}^{x+} x^k sqrt(2(h - U)) dx.

    Quadrature for k <= config.max_direct_k; higher k through the reduction
    onto I_0, I_1, I_2.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k <= config.max_direct_k:
        with mpmath.workdps(config.precision_digits):
            ov = oval(sys, ann, h, config)
            return _oval_integrals(ov, [k], False, mpmath.mpf(config.quad_tol))[0]
    rule = reduction_rule(sys, k)
    base = basis_integrals(sys, ann, h, 2, False, config)
    with mpmath.workdps(config.precision_digits):
        return sum(hpoly_eval(c, mpmath.mpf(h)) * v for c, v in zip(rule.coeffs, base))


def derivative_Ik(sys: HamiltonianSystem, ann: Annulus, h, k: int, config: RunConfig = DEFAULT):
    """I_k'(h) = oint x^k / y dx."""
    if k <= config.max_direct_k:
        with mpmath.workdps(config.precision_digits):
            ov = oval(sys, ann, h, config)
            return _oval_integrals(ov, [k], True, mpmath.mpf(config.quad_tol))[0]
    # d/dh of sum c_j(h) I_j
    rule = reduction_rule(sys, k)
    base = basis_integrals(sys, ann, h, 2, False, config)
    dbase = basis_integrals(sys, ann, h, 2, True, config)
    with mpmath.workdps(config.precision_digits):
        hh = mpmath.mpf(h)
        total = 0
        for c, v, dv in zip(rule.coeffs, base, dbase):
            dc = tuple(i * c[i] for i in range(1, len(c)))
            total += hpoly_eval(c, hh) * dv + hpoly_eval(dc, hh) * v
        return total


def abelian_value(sys, ann, h, with_derivatives: bool = False, config: RunConfig = DEFAULT) -> AbelianValue:
    I = tuple(basis_integrals(sys, ann, h, 2, False, config))
    dI = tuple(basis_integrals(sys, ann, h, 2, True, config)) if with_derivatives else None
    return AbelianValue(mpmath.mpf(h), I, dI)


def line_integral(sys: HamiltonianSystem, ann: Annulus, h, form: OneForm,
                  config: RunConfig = DEFAULT):
    """oint_{delta(h)} P dx + R dy, oriented so that oint y dx > 0.

    Parametrizes the whole oval: x = m + w cos t, y = -w sin t sqrt(2 R(x)).
    Used as the independent check of every closed-form Melnikov function.
    """
    with mpmath.workdps(config.precision_digits):
        ov = oval(sys, ann, h, config)
        P, R = form.P, form.R

        def sample(t):
            c, s = mpmath.cos(t), mpmath.sin(t)
            x = ov.mid + ov.half * c
            S = mpmath.sqrt(2 * ov.R(x))
            y = -ov.half * s * S
            dx = -ov.half * s
            dS = ov.dR(x) * dx / S
            dy = -ov.half * c * S - ov.half * s * dS
            return [P(x, y) * dx + R(x, y) * dy]

        vals, ok = (None, False) if ov.pinched else _doubling_trapezoid(sample, False, mpmath.mpf(config.quad_tol))
        if not ok:
            vals = _tanh_sinh(sample, 1, False, mpmath.mpf(config.quad_tol), ov.cuts)
        return vals[0]


# --------------------------------------------------------------------------
# reductions

@dataclass(frozen=True)
class ReductionRule:
    """I_k = coeffs[0](h) I_0 + coeffs[1](h) I_1 + coeffs[2](h) I_2."""

    k: int
    coeffs: Tuple[HPoly, HPoly, HPoly]


@lru_cache(maxsize=None)
def _reduction_table(a: Fraction, kmax: int) -> tuple:
    rows: List[Tuple[HPoly, HPoly, HPoly]] = [
        (hpoly(1), (), ()),
        ((), hpoly(1), ()),
        ((), (), hpoly(1)),
    ]

    def combo(*terms):
        out = [(), (), ()]
        for factor, row in terms:
            for j in range(3):
                out[j] = hpoly_add(out[j], hpoly_mul(factor, row[j]))
        return tuple(out)

    k = 0
    while len(rows) <= kmax:
        # (k+6)/6 a I_{k+3} = (4k+18)/9 I_{k+2} - (k+3)/3 I_{k+1} + (2k/3) h I_{k-1}
        lead = Fraction(k + 6, 6) * a
        terms = [
            (hpoly(Fraction(4 * k + 18, 9) / lead), rows[k + 2]),
            (hpoly(-Fraction(k + 3, 3) / lead), rows[k + 1]),
        ]
        if k >= 1:
            terms.append((hpoly(0, Fraction(2 * k, 3) / lead), rows[k - 1]))
        rows.append(combo(*terms))
        k += 1
    return tuple(rows)


def reduction_rule(sys_or_a, k: int) -> ReductionRule:
    """Express I_k over (I_0, I_1, I_2) by iterating the k-recursion."""
    a = sys_or_a.a if isinstance(sys_or_a, HamiltonianSystem) else Fraction(sys_or_a)
    if a == 0:
        raise ExcludedParameter("a = 0")
    if k < 0:
        raise ValueError("k must be non-negative")
    return ReductionRule(k, _reduction_table(a, k)[k])


# --------------------------------------------------------------------------
# Picard-Fuchs system (A h + B) I' = I

def picard_fuchs_matrices(a) -> Tuple[list, list]:
    """Rational matrices A, B with (A h + B) (I0', I1', I2')^T = (I0, I1, I2)^T."""
    a = Fraction(a)
    F = Fraction
    A = [
        [F(4, 3), F(0), F(0)],
        [F(2, 9) / a, F(1), F(0)],
        [-(F(4, 15) / a - F(56, 135) / a ** 2), F(4, 15) / a, F(4, 5)],
    ]
    B = [
        [F(0), -F(2, 9) / a, -(F(1, 3) - F(4, 9) / a)],
        [F(0), F(1, 4) / a - F(10, 27) / a ** 2, -(F(13, 18) / a - F(20, 27) / a ** 2)],
        [F(0), F(29, 45) / a ** 2 - F(56, 81) / a ** 3, F(4, 15) / a - F(46, 27) / a ** 2 + F(112, 81) / a ** 3],
    ]
    return A, B


def picard_fuchs_residual(a, h, I: Sequence, dI: Sequence) -> list:
    """(A h + B) I' - I, component-wise."""
    A, B = picard_fuchs_matrices(a)
    exact = isinstance(h, (int, Fraction))
    conv = (lambda q: q) if exact else to_mpf
    out = []
    for i in range(3):
        row = sum((conv(A[i][j]) * h + conv(B[i][j])) * dI[j] for j in range(3))
        out.append(row - I[i])
    return out


def picard_fuchs_derivatives(sys: HamiltonianSystem, I: Sequence, h, max_condition=None):
    """Solve the Picard-Fuchs system for (I0', I1', I2')."""
    A, B = picard_fuchs_matrices(sys.a)
    h = mpmath.mpf(h)
    M = mpmath.matrix(3, 3)
    for i in range(3):
        for j in range(3):
            M[i, j] = to_mpf(A[i][j]) * h + to_mpf(B[i][j])
    det = (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
           - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
           + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    cond = mpmath.cond(M) if det != 0 else mpmath.inf
    limit = max_condition if max_condition is not None else mpmath.mpf(10) ** (mpmath.mp.dps // 2)
    if cond > limit:
        raise SingularSystem(f"Picard-Fuchs matrix is near-singular at h = {mpmath.nstr(h, 10)}", condition=cond)
    sol = mpmath.lu_solve(M, mpmath.matrix([mpmath.mpf(v) for v in I]))
    return [sol[i] for i in range(3)]


def continue_ode(sys: HamiltonianSystem, ann: Annulus, h0, h1, I_at_h0: Sequence,
                 rtol: float = 1e-12, config: RunConfig = DEFAULT) -> list:
    """Carry (I0, I1, I2) from h0 to h1 along the Picard-Fuchs flow."""
    from scipy.integrate import solve_ivp

    check_level(ann, h0, config.endpoint_margin)
    check_level(ann, h1, config.endpoint_margin)
    start = [float(v) for v in I_at_h0]
    if mpmath.mpf(h0) == mpmath.mpf(h1):
        return [mpmath.mpf(v) for v in I_at_h0]
    A, B = picard_fuchs_matrices(sys.a)
    An = np.array([[float(v) for v in row] for row in A])
    Bn = np.array([[float(v) for v in row] for row in B])

    def rhs(h, I):
        M = An * h + Bn
        if np.linalg.cond(M) > 1e12:
            raise SingularSystem(f"Picard-Fuchs matrix singular near h = {h}", condition=np.linalg.cond(M))
        return np.linalg.solve(M, I)

    sol = solve_ivp(rhs, (float(h0), float(h1)), start, method="DOP853", rtol=rtol,
                    atol=1e-14 * max(1.0, max(abs(v) for v in start)))
    if not sol.success:
        raise StepFailure(sol.message)
    return [mpmath.mpf(v) for v in sol.y[:, -1]]


# --------------------------------------------------------------------------
# power series at the center h = 0

@dataclass(frozen=True)
class SeriesExpansion:
    """I_j(h) = c * sum_{k=1}^{order} V[k-1][j] h^k + O(h^(order+1))."""

    a: Fraction
    order: int
    V: Tuple[Tuple[Fraction, Fraction, Fraction], ...]
    center: Fraction = Fraction(0)

    def coeffs(self, j: int) -> HPoly:
        """Series of I_j / c as an h-polynomial (zero constant term)."""
        return hpoly(0, *[v[j] for v in self.V])

    def evaluate(self, h, c=None, derivative: bool = False) -> list:
        c = 2 * mpmath.pi if c is None else c
        out = []
        for j in range(3):
            p = self.coeffs(j)
            if derivative:
                p = tuple(i * p[i] for i in range(1, len(p)))
            out.append(c * hpoly_eval(p, mpmath.mpf(h)))
        return out

    def to_json(self) -> dict:
        from .polyalg import format_rational

        return {
            "a": format_rational(self.a),
            "order": self.order,
            "normalization": "I'(0) = (c, 0, 0), c factored out",
            "I0": {f"h^{k + 1}": format_rational(v[0]) for k, v in enumerate(self.V)},
            "I1": {f"h^{k + 1}": format_rational(v[1]) for k, v in enumerate(self.V)},
            "I2": {f"h^{k + 1}": format_rational(v[2]) for k, v in enumerate(self.V)},
        }


def _solve_exact(M, rhs):
    """Gaussian elimination over the rationals; None if singular."""
    n = len(M)
    aug = [list(row) + [r] for row, r in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] / aug[col][col]
                aug[r] = [u - f * v for u, v in zip(aug[r], aug[col])]
    return [aug[i][n] / aug[i][i] for i in range(n)]


@lru_cache(maxsize=64)
def _series(a: Fraction, N: int) -> tuple:
    A, B = picard_fuchs_matrices(a)
    V = [[Fraction(1), Fraction(0), Fraction(0)]]
    # order h^k of (A h + B) I' = I:  (k+1) B V_{k+1} + (k A - E) V_k = 0,
    # solved for (V_{0,k}, V_{1,k+1}, V_{2,k+1}) since B has a zero first column.
    for k in range(1, N + 1):
        Vk = V[k - 1]
        M, rhs = [], []
        for i in range(3):
            e_i0 = 1 if i == 0 else 0
            M.append([-(e_i0 - k * A[i][0]), (k + 1) * B[i][1], (k + 1) * B[i][2]])
            rhs.append(sum(((1 if i == j else 0) - k * A[i][j]) * Vk[j] for j in (1, 2)))
        if k == 1:
            # V_{0,1} = 1 is the normalization; the system is rank 2 here.
            sol = None
            for r1, r2 in ((0, 1), (0, 2), (1, 2)):
                sub = _solve_exact([M[r1][1:], M[r2][1:]], [rhs[r1] - M[r1][0], rhs[r2] - M[r2][0]])
                if sub is not None:
                    sol = [Fraction(1)] + sub
                    break
            if sol is None or any(
                sum(M[i][j] * sol[j] for j in range(3)) != rhs[i] for i in range(3)
            ):
                raise ArithmeticError("inconsistent first step of the series recursion")
        else:
            sol = _solve_exact(M, rhs)
            if sol is None:
                raise ArithmeticError(f"singular series recursion at k = {k}")
        Vk[0] = sol[0]
        V.append([Fraction(0), sol[1], sol[2]])
    return tuple(tuple(v) for v in V[:N])


def expand_series(sys_or_a, N: int) -> SeriesExpansion:
    """Exact Taylor coefficients of I_0, I_1, I_2 at h = 0 through h^N."""
    a = sys_or_a.a if isinstance(sys_or_a, HamiltonianSystem) else check_parameter(sys_or_a)
    check_parameter(a)
    if N < 1:
        raise ValueError("order must be >= 1")
    return SeriesExpansion(a, N, _series(a, N))


def hpoly_times_series(p: HPoly, series: SeriesExpansion, j: int) -> HPoly:
    """Taylor coefficients of p(h) I_j(h) / c, truncated to the series order."""
    prod = hpoly_mul(p, series.coeffs(j))
    return prod[: series.order + 1]


def series_of_form(alpha: HPoly, beta: HPoly, gamma: HPoly, series: SeriesExpansion) -> HPoly:
    """Taylor coefficients of (alpha I0 + beta I1 + gamma I2)/c."""
    out = ()
    for p, j in ((alpha, 0), (beta, 1), (gamma, 2)):
        out = hpoly_add(out, hpoly_times_series(p, series, j))
    return out[: series.order + 1]
