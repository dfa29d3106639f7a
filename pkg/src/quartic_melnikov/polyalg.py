"""Exact rational polynomials in x, y and polynomial one-forms P dx + R dy.

Coefficients are :class:`fractions.Fraction`; nothing here ever rounds.
Univariate polynomials in the level h (the alpha/beta/gamma coefficients of
Melnikov forms) are plain tuples of Fractions, constant term first.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

import mpmath

from .errors import DegreeError

Monomial = Tuple[int, int]
HPoly = Tuple[Fraction, ...]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {value!r} as an exact rational")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not re.fullmatch(r"[+-]?\d+(/[+-]?\d+)?", text):
        raise ValueError(f"not a rational literal: {text!r}")
    return Fraction(text)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_mpf(q: Fraction):
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


class BivariatePoly:
    """Sparse polynomial in x and y with Fraction coefficients.

    Instances are immutable; the term map never stores zeros.
    """

    __slots__ = ("_terms", "_hash", "_mp_cache")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: Dict[Monomial, Fraction] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in {(i, j)}")
            c = as_fraction(c)
            if c:
                clean[(int(i), int(j))] = c
        self._terms = clean
        self._hash = None
        self._mp_cache = None

    # construction helpers -------------------------------------------------
    @classmethod
    def const(cls, c) -> "BivariatePoly":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c=1) -> "BivariatePoly":
        return cls({(i, j): c})

    @classmethod
    def x(cls) -> "BivariatePoly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "BivariatePoly":
        return cls({(0, 1): 1})

    @classmethod
    def from_x_coeffs(cls, coeffs: Sequence, power_of_y: int = 0) -> "BivariatePoly":
        return cls({(i, power_of_y): c for i, c in enumerate(coeffs)})

    # mapping-like access ---------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(self._terms.items())

    def coeff(self, i: int, j: int = 0) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    @property
    def degree_x(self) -> int:
        return max((i for i, _ in self._terms), default=-1)

    @property
    def degree_y(self) -> int:
        return max((j for _, j in self._terms), default=-1)

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "BivariatePoly":
        if isinstance(other, BivariatePoly):
            return other
        return BivariatePoly.const(as_fraction(other))

    def __add__(self, other) -> "BivariatePoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return BivariatePoly(out)

    __radd__ = __add__

    def __neg__(self) -> "BivariatePoly":
        return BivariatePoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "BivariatePoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "BivariatePoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "BivariatePoly":
        if not isinstance(other, BivariatePoly):
            c = as_fraction(other)
            return BivariatePoly({m: c * v for m, v in self._terms.items()})
        out: Dict[Monomial, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return BivariatePoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "BivariatePoly":
        return self * (1 / as_fraction(other))

    def __pow__(self, n: int) -> "BivariatePoly":
        if n < 0:
            raise ValueError("negative power")
        result = BivariatePoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, BivariatePoly):
            return self._terms == other._terms
        try:
            return self._terms == BivariatePoly.const(as_fraction(other))._terms
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # calculus -------------------------------------------------------------
    def diff_x(self) -> "BivariatePoly":
        return BivariatePoly({(i - 1, j): i * c for (i, j), c in self._terms.items() if i})

    def diff_y(self) -> "BivariatePoly":
        return BivariatePoly({(i, j - 1): j * c for (i, j), c in self._terms.items() if j})

    def integrate_x(self) -> "BivariatePoly":
        """Antiderivative in x with no x-free constant added."""
        return BivariatePoly({(i + 1, j): c / (i + 1) for (i, j), c in self._terms.items()})

    def integrate_y(self) -> "BivariatePoly":
        return BivariatePoly({(i, j + 1): c / (j + 1) for (i, j), c in self._terms.items()})

    # structure ------------------------------------------------------------
    def filter(self, predicate) -> "BivariatePoly":
        return BivariatePoly({m: c for m, c in self._terms.items() if predicate(*m)})

    def odd_even_split(self) -> Tuple["BivariatePoly", "BivariatePoly"]:
        return odd_even_split(self)

    def y_slices(self) -> Dict[int, Dict[int, Fraction]]:
        """Group coefficients by the power of y: {j: {i: c}}."""
        out: Dict[int, Dict[int, Fraction]] = {}
        for (i, j), c in self._terms.items():
            out.setdefault(j, {})[i] = c
        return out

    def divide_by_y(self) -> "BivariatePoly":
        if any(j == 0 for _, j in self._terms):
            raise ValueError("polynomial is not divisible by y")
        return BivariatePoly({(i, j - 1): c for (i, j), c in self._terms.items()})

    def x_coeffs(self) -> list:
        """Coefficient list in x of a polynomial that does not involve y."""
        if self.degree_y > 0:
            raise ValueError("polynomial depends on y")
        return [self.coeff(i, 0) for i in range(self.degree_x + 1)]

    # evaluation -----------------------------------------------------------
    def __call__(self, x, y=0):
        return eval_poly(self, x, y)

    def _mp_coeffs(self):
        prec = mpmath.mp.prec
        cache = self._mp_cache
        if cache is None or cache[0] != prec:
            table = [
                (j, [(i, to_mpf(c)) for i, c in sorted(row.items(), reverse=True)])
                for j, row in sorted(self.y_slices().items(), reverse=True)
            ]
            cache = (prec, table)
            self._mp_cache = cache
        return cache[1]

    # printing & I/O -------------------------------------------------------
    def sorted_terms(self) -> list:
        """Terms in graded lexicographic order, x before y."""
        return sorted(self._terms.items(), key=lambda t: (t[0][0] + t[0][1], t[0][1]))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (i, j), c in self.sorted_terms():
            mono = "*".join(
                s for s in (_pow_str("x", i), _pow_str("y", j)) if s
            )
            coef = format_rational(c)
            if not mono:
                parts.append(coef)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{coef}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"BivariatePoly({str(self)!r})"

    def to_json(self) -> Dict[str, str]:
        return {f"x^{i}*y^{j}": format_rational(c) for (i, j), c in self.sorted_terms()}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "BivariatePoly":
        terms = {}
        for key, value in data.items():
            m = re.fullmatch(r"\s*x\^(\d+)\s*\*\s*y\^(\d+)\s*", key)
            if not m:
                raise ValueError(f"bad monomial key {key!r}")
            terms[(int(m.group(1)), int(m.group(2)))] = parse_rational(str(value))
        return cls(terms)


def _pow_str(var: str, n: int) -> str:
    if n == 0:
        return ""
    return var if n == 1 else f"{var}^{n}"


X = BivariatePoly.x()
Y = BivariatePoly.y()


def eval_poly(p: BivariatePoly, x, y=0):
    """Evaluate ``p`` at (x, y) by nested Horner.

    Fraction/int arguments give an exact Fraction; anything else is treated
    as an mpmath number at the current working precision.
    """
    exact = isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction))
    if exact:
        rows = [
            (j, sorted(row.items(), reverse=True))
            for j, row in sorted(p.y_slices().items(), reverse=True)
        ]
        zero = Fraction(0)
    else:
        x = mpmath.mpf(x) if not isinstance(x, mpmath.mpc) else x
        y = mpmath.mpf(y) if not isinstance(y, mpmath.mpc) else y
        rows = p._mp_coeffs()
        zero = mpmath.mpf(0)
    total = zero
    prev_j = None
    for j, row in rows:
        if prev_j is not None:
            total *= y ** (prev_j - j)
        acc = zero
        prev_i = None
        for i, c in row:
            if prev_i is not None:
                acc *= x ** (prev_i - i)
            acc += c
            prev_i = i
        acc *= x ** prev_i
        total += acc
        prev_j = j
    if prev_j:
        total *= y ** prev_j
    return total


def odd_even_split(q: BivariatePoly) -> Tuple[BivariatePoly, BivariatePoly]:
    """Split into the parts odd and even in y: returns (odd, even)."""
    return q.filter(lambda i, j: j % 2 == 1), q.filter(lambda i, j: j % 2 == 0)


class OneForm:
    """The polynomial one-form P dx + R dy."""

    __slots__ = ("P", "R")

    def __init__(self, P: BivariatePoly | None = None, R: BivariatePoly | None = None):
        self.P = P if P is not None else BivariatePoly()
        self.R = R if R is not None else BivariatePoly()

    @classmethod
    def exact(cls, S: BivariatePoly) -> "OneForm":
        """dS."""
        return cls(S.diff_x(), S.diff_y())

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.P + other.P, self.R + other.R)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.P - other.P, self.R - other.R)

    def __neg__(self) -> "OneForm":
        return OneForm(-self.P, -self.R)

    def __mul__(self, s) -> "OneForm":
        return OneForm(self.P * s, self.R * s)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, OneForm) and self.P == other.P and self.R == other.R

    def __hash__(self):
        return hash((self.P, self.R))

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.R.is_zero()

    def d(self) -> BivariatePoly:
        """Exterior derivative, as the coefficient of dx^dy."""
        return self.R.diff_x() - self.P.diff_y()

    @property
    def degree(self) -> int:
        return max(self.P.degree, self.R.degree)

    def __repr__(self) -> str:
        return f"OneForm(({self.P}) dx + ({self.R}) dy)"


def perturbation_form(f: BivariatePoly, g: BivariatePoly) -> OneForm:
    """omega = g dx - f dy for the field x' = H_y + eps f, y' = -H_x + eps g."""
    return OneForm(g, -f)


def decompose_one_form(f: BivariatePoly, g: BivariatePoly) -> Tuple[BivariatePoly, BivariatePoly]:
    """Write g dx - f dy = dQ + y q dx exactly.

    The dy part is integrated by parts,
    -c x^i y^j dy = d(-c x^i y^(j+1)/(j+1)) + c i/(j+1) x^(i-1) y^(j+1) dx,
    then pure-x terms of the dx part are absorbed into Q.  Returns (Q, q) with
    Q(0, 0) = 0 and deg q <= 2.
    """
    if f.degree > 3 or g.degree > 3:
        raise DegreeError("f and g must have total degree <= 3")
    Q = BivariatePoly()
    dx_part = g
    for (i, j), c in (-f).items():
        Q = Q + BivariatePoly.monomial(i, j + 1, c / (j + 1))
        if i:
            dx_part = dx_part - BivariatePoly.monomial(i - 1, j + 1, c * i / (j + 1))
    pure_x = dx_part.filter(lambda i, j: j == 0)
    Q = Q + pure_x.integrate_x()
    q = (dx_part - pure_x).divide_by_y()
    return Q, q


# univariate polynomials in h -------------------------------------------------

def hpoly(*coeffs) -> HPoly:
    """Normalized tuple of Fractions with trailing zeros removed."""
    out = [as_fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def hpoly_add(p: Sequence, q: Sequence) -> HPoly:
    n = max(len(p), len(q))
    return hpoly(*[(p[k] if k < len(p) else 0) + (q[k] if k < len(q) else 0) for k in range(n)])


def hpoly_scale(p: Sequence, c) -> HPoly:
    c = as_fraction(c)
    return hpoly(*[c * v for v in p])


def hpoly_mul(p: Sequence, q: Sequence) -> HPoly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, u in enumerate(p):
        for j, v in enumerate(q):
            out[i + j] += u * v
    return hpoly(*out)


def hpoly_eval(p: Sequence, h):
    """Horner evaluation; exact for Fraction h, mpmath otherwise."""
    if isinstance(h, (int, Fraction)):
        acc = Fraction(0)
        for c in reversed(p):
            acc = acc * h + c
        return acc
    acc = mpmath.mpf(0)
    for c in reversed(p):
        acc = acc * h + to_mpf(c)
    return acc


def hpoly_degree(p: Sequence) -> int:
    return len(hpoly(*p)) - 1


def hpoly_str(p: Sequence, var: str = "h") -> str:
    p = hpoly(*p)
    if not p:
        return "0"
    parts = []
    for k, c in enumerate(p):
        if c == 0:
            continue
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        coef = format_rational(c)
        parts.append(coef if not mono else (mono if c == 1 else f"{coef}*{mono}"))
    return " + ".join(parts).replace("+ -", "- ")


def iter_monomials(max_degree: int) -> Iterable[Monomial]:
    """All (i, j) with i + j <= max_degree, in graded order."""
    for d in range(max_degree + 1):
        for j in range(d + 1):
            yield (d - j, j)
