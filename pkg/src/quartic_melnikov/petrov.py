"""Exact reduction of polynomial one-forms in the Petrov module of H.

Every polynomial one-form splits as

    omega = dS + s dH + sum_{k, i<=2} p_{k,i} H^k x^i y dx,

so that oint_{delta(h)} omega = alpha(h) I_0 + beta(h) I_1 + gamma(h) I_2 with
alpha = sum_k p_{k,0} h^k, and so on.  When the remainder vanishes the form
is dS + s dH and ``s`` feeds the next step of the Francoise recursion:
M_{k+1} = oint s_k omega.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, List, Tuple

from .hamiltonian import hamiltonian_poly, potential
from .polyalg import BivariatePoly, HPoly, OneForm, hpoly


@dataclass(frozen=True)
class Reduction:
    S: BivariatePoly
    s: BivariatePoly
    remainder: Dict[Tuple[int, int], Fraction]

    def coefficients(self) -> Tuple[HPoly, HPoly, HPoly]:
        """(alpha, beta, gamma) as h-polynomials."""
        out = []
        for i in range(3):
            terms = {k: c for (k, j), c in self.remainder.items() if j == i and c}
            n = max(terms, default=-1) + 1
            out.append(hpoly(*[terms.get(k, 0) for k in range(n)]))
        return tuple(out)

    def vanishes(self) -> bool:
        return not any(self.remainder.values())


class _HPowers:
    def __init__(self, a):
        self.H = hamiltonian_poly(a)
        self._cache = [BivariatePoly.const(1)]

    def __getitem__(self, k: int) -> BivariatePoly:
        while len(self._cache) <= k:
            self._cache.append(self._cache[-1] * self.H)
        return self._cache[k]


def reduce_form(form: OneForm, a) -> Reduction:
    a = Fraction(a)
    Hp = _HPowers(a)
    minus_2U = potential(a) * -2
    S = BivariatePoly()
    s = BivariatePoly()
    P = form.P
    # c x^i y^j dy = d(c x^i y^(j+1)/(j+1)) - c i/(j+1) x^(i-1) y^(j+1) dx
    for (i, j), c in form.R.items():
        S = S + BivariatePoly.monomial(i, j + 1, c / (j + 1))
        if i:
            P = P - BivariatePoly.monomial(i - 1, j + 1, c * i / (j + 1))

    rem: Dict[Tuple[int, int], Fraction] = defaultdict(Fraction)
    u_pows = [BivariatePoly.const(1)]
    for j, row in sorted(P.y_slices().items()):
        g = BivariatePoly({(i, 0): c for i, c in row.items()})
        m = j // 2
        while len(u_pows) <= m:
            u_pows.append(u_pows[-1] * minus_2U)
        # y^(2m) = (2H - 2U)^m
        for k in range(m + 1):
            gk = g * u_pows[m - k] * (comb(m, k) * 2 ** k)
            if j % 2 == 0:
                # H^k g dx = d(H^k G) - k H^(k-1) G dH
                G = gk.integrate_x()
                S = S + Hp[k] * G
                if k:
                    s = s - Hp[k - 1] * G * k
            else:
                for (i, _), c in gk.items():
                    rem[(k, i)] += c

    # x^(m+3) y dx = [2m H x^(m-1) - (3+m) x^(m+1) + (6+4m/3) x^(m+2)] y dx / D
    #                + [-d(x^m y^3) + 3 x^m y dH] / D,      D = a (6+m)/2
    while True:
        big = [key for key, v in rem.items() if v and key[1] >= 3]
        if not big:
            break
        k, l = max(big, key=lambda t: (t[1], t[0]))
        c = rem.pop((k, l))
        m = l - 3
        c2 = c / (a * (6 + m) / 2)
        if m >= 1:
            rem[(k + 1, m - 1)] += c2 * 2 * m
        rem[(k, m + 1)] -= c2 * (3 + m)
        rem[(k, m + 2)] += c2 * (6 + Fraction(4 * m, 3))
        F = BivariatePoly.monomial(m, 3)
        S = S - Hp[k] * F * c2
        if k:
            s = s + Hp[k - 1] * F * (c2 * k)
        s = s + Hp[k] * BivariatePoly.monomial(m, 1, 3 * c2)
    clean = {key: v for key, v in rem.items() if v}
    return Reduction(S, s, clean)


def reassemble(red: Reduction, a) -> OneForm:
    """dS + s dH + remainder, for checking a reduction against its input."""
    a = Fraction(a)
    H = hamiltonian_poly(a)
    Hp = _HPowers(a)
    out = OneForm.exact(red.S) + OneForm(red.s * H.diff_x(), red.s * H.diff_y())
    for (k, i), c in red.remainder.items():
        out = out + OneForm(Hp[k] * BivariatePoly.monomial(i, 1, c), BivariatePoly())
    return out


def francoise_coefficients(omega: OneForm, a, max_order: int = 4) -> List[Tuple[HPoly, HPoly, HPoly]]:
    """Coefficients of M_1, M_2, ... up to the first non-vanishing one.

    M_1 = oint omega; while M_k vanishes, s_k omega is the next form.
    """
    out = []
    current = omega
    for _ in range(max_order):
        red = reduce_form(current, a)
        out.append(red.coefficients())
        if not red.vanishes():
            break
        current = omega * red.s
    return out
