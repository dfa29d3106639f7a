"""Melnikov functions M_1..M_4 of cubic perturbations of dH = 0.

The perturbed system is x' = H_y + eps f, y' = -H_x + eps g, with Pfaffian
form omega = g dx - f dy.  Every M_k is written as

    M_k(h) = alpha_k(h) I_0(h) + beta_k(h) I_1(h) + gamma_k(h) I_2(h).

Two independent routes compute the coefficients:

* closed forms (``m1_form`` .. ``m4_form``), transcribed term by term from
  the published derivation and evaluated at a fixed rational a;
* the exact Francoise recursion (``francoise_forms``) driven by the Petrov
  module reduction in :mod:`petrov`.

The quadrature oracles integrate omega_k = s_{k-1} omega over the oval,
with s_1 = L, s_2, s_3 assembled from the published displays
(``s2_published``, ``s3_published``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import List, Mapping, Optional, Tuple

import mpmath

from .errors import (
    DegenerateCaseC,
    DegreeError,
    HamiltonianPerturbation,
    NotVanishing,
    ReversibleCase,
)
from .hamiltonian import hamiltonian_poly, potential, rational_sqrt
from .petrov import francoise_coefficients
from .polyalg import (
    BivariatePoly,
    HPoly,
    OneForm,
    X,
    Y,
    as_fraction,
    decompose_one_form,
    format_rational,
    hpoly,
    hpoly_add,
    hpoly_degree,
    hpoly_eval,
    hpoly_scale,
    hpoly_str,
    odd_even_split,
    parse_rational,
    perturbation_form,
)

F = Fraction
ODD_COEFFS = ((0, 1), (1, 1), (2, 1), (3, 1), (0, 3), (1, 3))


class CaseTag(enum.Enum):
    """Shape of the odd part Q_1 once M_1 = M_2 = 0."""

    A_MU0 = "A"
    B_LAMBDA0 = "B"
    C_RESONANT = "C"
    D_REVERSIBLE = "D"


class Integrability(enum.Enum):
    HAMILTONIAN = "hamiltonian"
    REVERSIBLE = "reversible"
    NOT_INTEGRABLE = "not-integrable"


# --------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class MelnikovForm:
    """alpha I_0 + beta I_1 + gamma I_2 with alpha, beta, gamma in Q[h]."""

    k: int
    alpha: HPoly = ()
    beta: HPoly = ()
    gamma: HPoly = ()

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, hpoly(*getattr(self, name)))

    @property
    def coeffs(self) -> Tuple[HPoly, HPoly, HPoly]:
        return (self.alpha, self.beta, self.gamma)

    def is_zero(self) -> bool:
        return not (self.alpha or self.beta or self.gamma)

    @property
    def degree(self) -> int:
        return max(hpoly_degree(c) for c in self.coeffs)

    def scaled(self, c) -> "MelnikovForm":
        return MelnikovForm(self.k, *(hpoly_scale(p, c) for p in self.coeffs))

    def __add__(self, other: "MelnikovForm") -> "MelnikovForm":
        return MelnikovForm(self.k, *(hpoly_add(p, q) for p, q in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "MelnikovForm") -> "MelnikovForm":
        return self + other.scaled(-1)

    def __str__(self) -> str:
        return (f"M{self.k} = ({hpoly_str(self.alpha)})*I0 + ({hpoly_str(self.beta)})*I1"
                f" + ({hpoly_str(self.gamma)})*I2")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "alpha": [format_rational(c) for c in self.alpha],
            "beta": [format_rational(c) for c in self.beta],
            "gamma": [format_rational(c) for c in self.gamma],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MelnikovForm":
        def read(key):
            return tuple(parse_rational(str(c)) for c in data.get(key, []))

        return cls(int(data.get("k", 1)), read("alpha"), read("beta"), read("gamma"))


def eval_melnikov(form: MelnikovForm, basis, h=None):
    """alpha(h) I_0 + beta(h) I_1 + gamma(h) I_2.

    ``basis`` is an AbelianValue or a plain (h, (I0, I1, I2)) pair.
    """
    if h is None:
        h, I = basis.h, basis.I
    else:
        I = basis
    h = mpmath.mpf(h) if not isinstance(h, (int, Fraction)) else h
    return sum(hpoly_eval(c, h) * v for c, v in zip(form.coeffs, I))


@dataclass(frozen=True)
class PerturbationSpec:
    """A cubic perturbation (f, g); the decomposition is derived on demand."""

    f: BivariatePoly
    g: BivariatePoly

    def __post_init__(self):
        if self.f.degree > 3 or self.g.degree > 3:
            raise DegreeError("f and g must be cubic polynomials (total degree <= 3)")

    @classmethod
    def from_coeffs(cls, f_coeffs: Mapping[Tuple[int, int], object],
                    g_coeffs: Mapping[Tuple[int, int], object]) -> "PerturbationSpec":
        return cls(BivariatePoly(dict(f_coeffs)), BivariatePoly(dict(g_coeffs)))

    @classmethod
    def from_json(cls, data: Mapping) -> "PerturbationSpec":
        return cls(BivariatePoly.from_json(data.get("f", {})), BivariatePoly.from_json(data.get("g", {})))

    def to_json(self) -> dict:
        return {"f": self.f.to_json(), "g": self.g.to_json()}

    @cached_property
    def decomposition(self) -> Tuple[BivariatePoly, BivariatePoly]:
        return decompose_one_form(self.f, self.g)

    @property
    def Q(self) -> BivariatePoly:
        return self.decomposition[0]

    @property
    def q(self) -> BivariatePoly:
        return self.decomposition[1]

    def c(self, i: int, j: int) -> Fraction:
        return self.q.coeff(i, j)

    @property
    def omega(self) -> OneForm:
        return perturbation_form(self.f, self.g)


@dataclass(frozen=True)
class NormalForm:
    """omega = d[Q - (a lam/5 - 2 mu/5) x^5 - (a mu/6) x^6] + (lam x + mu x^2) dH."""

    Q: BivariatePoly
    lam: Fraction
    mu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        object.__setattr__(self, "mu", as_fraction(self.mu))
        if self.Q.degree > 4:
            raise DegreeError("Q must have degree <= 4")
        if self.Q.coeff(0, 0):
            raise ValueError("Q must have no constant term")

    def q(self, i: int, j: int) -> Fraction:
        return self.Q.coeff(i, j)

    @property
    def Q1(self) -> BivariatePoly:
        return odd_even_split(self.Q)[0]

    @property
    def Q2(self) -> BivariatePoly:
        return odd_even_split(self.Q)[1]

    @property
    def L(self) -> BivariatePoly:
        return BivariatePoly({(1, 0): self.lam, (2, 0): self.mu})

    def potential_part(self, a) -> BivariatePoly:
        a = as_fraction(a)
        return BivariatePoly({(5, 0): -(a * self.lam / 5 - F(2, 5) * self.mu), (6, 0): -a * self.mu / 6})

    def omega(self, a) -> OneForm:
        H = hamiltonian_poly(a)
        L = self.L
        return OneForm.exact(self.Q + self.potential_part(a)) + OneForm(L * H.diff_x(), L * H.diff_y())

    def replace(self, Q=None, lam=None, mu=None) -> "NormalForm":
        return NormalForm(self.Q if Q is None else Q, self.lam if lam is None else lam,
                          self.mu if mu is None else mu)

    def to_json(self) -> dict:
        return {"Q": self.Q.to_json(), "lambda": format_rational(self.lam), "mu": format_rational(self.mu)}

    @classmethod
    def from_json(cls, data: Mapping) -> "NormalForm":
        return cls(BivariatePoly.from_json(data["Q"]), parse_rational(str(data["lambda"])),
                   parse_rational(str(data["mu"])))


def _B(a) -> BivariatePoly:
    """B = U(x) = x^2/2 - 2x^3/3 + a x^4/4."""
    return potential(a)


def normal_form_of(p: PerturbationSpec, a) -> NormalForm:
    """Rewrite omega in normal form; requires c00 = c10 = c20 = c02 = 0.

    With lam = -2 c01, mu = -c11 the remainder y q dx = -y^2 L'/2 dx equals
    L dH - d(L H) + B L' dx modulo exact forms, so
    Q_nf = Q - L H + int B L' dx + (a lam/5 - 2 mu/5) x^5 + (a mu/6) x^6.
    """
    a = as_fraction(a)
    Q, q = p.decomposition
    if any(q.coeff(i, j) for (i, j) in ((0, 0), (1, 0), (2, 0), (0, 2))):
        raise NotVanishing("M1 does not vanish identically")
    lam, mu = -2 * q.coeff(0, 1), -q.coeff(1, 1)
    L = BivariatePoly({(1, 0): lam, (2, 0): mu})
    H = hamiltonian_poly(a)
    nf_Q = Q - L * H + (_B(a) * L.diff_x()).integrate_x()
    nf_Q = nf_Q + BivariatePoly({(5, 0): a * lam / 5 - F(2, 5) * mu, (6, 0): a * mu / 6})
    return NormalForm(nf_Q, lam, mu)


def perturbation_of(nf: NormalForm, a) -> PerturbationSpec:
    """The cubic (f, g) whose form is nf.omega(a)."""
    om = nf.omega(a)
    return PerturbationSpec(-om.R, om.P)


# --------------------------------------------------------------------------
# closed forms

def m1_form(p: PerturbationSpec, a) -> MelnikovForm:
    a = as_fraction(a)
    c = p.c
    return MelnikovForm(
        1,
        hpoly(c(0, 0), F(12, 7) * c(0, 2)),
        hpoly(c(1, 0) - F(2, 7) / a * c(0, 2)),
        hpoly(c(2, 0) + (F(4, 7) / a - F(3, 7)) * c(0, 2)),
    )


def m1_vanishes(p: PerturbationSpec, a) -> Optional[NormalForm]:
    """The normal form when M_1 is identically zero, otherwise None."""
    if not m1_form(p, a).is_zero():
        return None
    return normal_form_of(p, a)


def m2_form(nf: NormalForm, a) -> MelnikovForm:
    a = as_fraction(a)
    lam, mu, q = nf.lam, nf.mu, nf.q
    if lam == 0 and mu == 0:
        raise HamiltonianPerturbation("lambda = mu = 0: the perturbation is Hamiltonian, M_k = 0 for all k")
    q01, q11, q21, q31, q03, q13 = (q(i, j) for i, j in ODD_COEFFS)
    mix = lam * q13 + 2 * mu * q03
    Q0 = hpoly(lam * q01,
               F(12, 7) * lam * q03 + F(1, 7) / a * mix + F(8, 189) / a**2 * mu * q13)
    Q1 = hpoly(lam * q11 + 2 * mu * q01 - F(2, 7) / a * lam * q03 - F(1, 42) / a**2 * mix
               - F(4, 567) / a**3 * mu * q13,
               F(3, 2) * lam * q13 + 3 * mu * q03 + F(4, 9) / a * mu * q13)
    Q2 = hpoly(lam * q21 + 2 * mu * q11 + (F(4, 7) / a - F(3, 7)) * lam * q03
               + (F(1, 21) / a**2 - F(2, 7) / a) * mix
               + (F(8, 567) / a**3 - F(16, 189) / a**2) * mu * q13,
               F(8, 3) * mu * q13)
    Q3 = lam * q31 + 2 * mu * q21 + (F(1, 2) / a - F(3, 8)) * mix + (F(4, 27) / a**2 - F(5, 9) / a) * mu * q13
    Q4 = 2 * mu * q31 + (F(8, 9) / a - F(2, 3)) * mu * q13
    alpha = hpoly_add(hpoly_scale(Q0, -1), hpoly(0, -F(4, 7) / a * Q4))
    beta = hpoly_add(hpoly_scale(Q1, -1), hpoly(Q3 / a + F(44, 21) / a**2 * Q4))
    gamma = hpoly_add(hpoly_scale(Q2, -1), hpoly(-2 / a * Q3 + (F(8, 7) / a - F(88, 21) / a**2) * Q4))
    return MelnikovForm(2, alpha, beta, gamma)


def case_of(nf: NormalForm, a) -> CaseTag:
    """Case from (lam, mu) alone; C needs a lam^2 + 4 lam mu + 4 mu^2 = 0."""
    a = as_fraction(a)
    lam, mu = nf.lam, nf.mu
    if lam == 0 and mu == 0:
        raise HamiltonianPerturbation("lambda = mu = 0: the perturbation is Hamiltonian")
    if mu == 0:
        return CaseTag.A_MU0
    if lam == 0:
        return CaseTag.B_LAMBDA0
    if a * lam**2 + 4 * lam * mu + 4 * mu**2 == 0:
        return CaseTag.C_RESONANT
    return CaseTag.D_REVERSIBLE


def odd_part_shape(case: CaseTag, q11, a, lam=0, mu=1) -> BivariatePoly:
    """The odd part Q_1 forced by M_1 = M_2 = 0, with free parameter q11."""
    a, q11 = as_fraction(a), as_fraction(q11)
    if case is CaseTag.A_MU0:
        return BivariatePoly({(1, 1): q11, (2, 1): -2 * q11, (3, 1): a * q11})
    if case is CaseTag.B_LAMBDA0:
        return BivariatePoly({(0, 1): -q11 / 2, (1, 1): q11, (2, 1): -a * q11 / 2})
    if case is CaseTag.C_RESONANT:
        return BivariatePoly({(1, 1): q11, (2, 1): a * F(lam) / (2 * F(mu)) * q11})
    return BivariatePoly()


def m2_vanishes_case(nf: NormalForm, a) -> Tuple[CaseTag, BivariatePoly]:
    """Classify a normal form with M_2 = 0 into cases A-D and return Q_1."""
    if not m2_form(nf, a).is_zero():
        raise NotVanishing("M2 does not vanish identically")
    case = case_of(nf, a)
    shape = odd_part_shape(case, nf.q(1, 1), a, nf.lam, nf.mu)
    if shape != nf.Q1:  # pragma: no cover - would contradict the case analysis
        raise ArithmeticError(f"odd part {nf.Q1} does not match the case {case.value} shape {shape}")
    return case, shape


def _kappa(case: CaseTag, nf: NormalForm) -> Fraction:
    return nf.mu * nf.q(1, 1) if case is CaseTag.B_LAMBDA0 else -nf.lam * nf.q(1, 1)


def _require_q11(case: CaseTag, nf: NormalForm) -> None:
    if case is CaseTag.D_REVERSIBLE or nf.q(1, 1) == 0:
        raise ReversibleCase("Q_1 = 0: the perturbation is time-reversible and M_k = 0 for all k")


def m3_form(nf: NormalForm, a, case: Optional[CaseTag] = None) -> MelnikovForm:
    a = as_fraction(a)
    if case is None:
        case, _ = m2_vanishes_case(nf, a)
    _require_q11(case, nf)
    lam, mu, q = nf.lam, nf.mu, nf.q
    kappa = _kappa(case, nf)
    q10, q20, q30, q40 = q(1, 0), q(2, 0), q(3, 0), q(4, 0)
    q02, q12, q22 = q(0, 2), q(1, 2), q(2, 2)

    p0 = hpoly(q10, F(4, 7) * q12 + F(2, 21) / a * q22)
    p1 = hpoly(2 * q20 - F(2, 21) / a * q12 - F(1, 63) / a**2 * q22, q22)
    p2 = 3 * q30 + (F(4, 21) / a - F(1, 7)) * q12 + (F(2, 63) / a**2 - F(4, 21) / a) * q22
    p3 = 4 * q40 + (F(1, 3) / a - F(1, 4)) * q22
    p4 = 2 * mu - a * lam
    p5 = -a * mu
    r1 = 2 * q02
    r2 = 2 * lam - 4 * q02 + 2 * q12
    r3 = 2 * mu - 4 * lam + 2 * a * q02 - 4 * q12 + 2 * q22
    r4 = 2 * a * lam - 4 * mu + 2 * a * q12 - 4 * q22
    r5 = 2 * a * mu + 2 * a * q22

    s3, s4, s5 = p3 + r3, p4 + r4, p5 + r5
    alpha = hpoly_add(p0, hpoly(0, F(4, 7) / a * s4 + F(26, 21) / a**2 * s5))
    beta = hpoly_add(p1, hpoly(r1 - s3 / a - F(44, 21) / a**2 * s4
                               - (F(286, 63) / a**3 - F(5, 4) / a**2) * s5, s5 / a))
    gamma = hpoly(p2 + r2 + 2 / a * s3 + (F(88, 21) / a**2 - F(8, 7) / a) * s4
                  + (F(572, 63) / a**3 - F(209, 42) / a**2) * s5)
    return MelnikovForm(3, *(hpoly_scale(c, kappa) for c in (alpha, beta, gamma)))


def even_part_shape(q20, q02, q04, lam, mu, a) -> BivariatePoly:
    """The even part Q_2 forced by M_3 = 0 (free parameters q20, q02, q04)."""
    a, q20, q02, q04, lam, mu = map(as_fraction, (a, q20, q02, q04, lam, mu))
    return BivariatePoly({
        (2, 0): q20,
        (3, 0): -F(4, 3) * q20 - lam / 3,
        (4, 0): a / 2 * q20 + lam / 2 - mu / 4,
        (0, 2): q02,
        (1, 2): -lam / 3,
        (2, 2): -mu / 3,
        (0, 4): q04,
    })


def m3_vanishes(nf: NormalForm, a) -> bool:
    """True when the even part has the shape forced by M_3 = 0."""
    expected = even_part_shape(nf.q(2, 0), nf.q(0, 2), nf.q(0, 4), nf.lam, nf.mu, a)
    return nf.Q2 == expected


def m4_form(nf: NormalForm, a, case: Optional[CaseTag] = None) -> MelnikovForm:
    a = as_fraction(a)
    if case is None:
        case, _ = m2_vanishes_case(nf, a)
    _require_q11(case, nf)
    if not m3_vanishes(nf, a):
        raise NotVanishing("M3 does not vanish identically (even part of Q has the wrong shape)")
    lam, mu, q11 = nf.lam, nf.mu, nf.q(1, 1)
    if case is CaseTag.A_MU0:
        c = lam * q11**3
        return MelnikovForm(4, (0, 2 * c), (-(F(3, 4) - F(2, 3) / a) * c, -3 * a * c),
                            ((F(3, 2) - F(4, 3) / a) * c,))
    if case is CaseTag.B_LAMBDA0:
        c = -mu * q11**3 / 2
        return MelnikovForm(4, (c,), (-2 * c,), (a * c,))
    if 2 * lam + 3 * mu == 0:
        raise DegenerateCaseC("2 lambda + 3 mu = 0 forces a = 8/9, which is excluded")
    c = -(lam**2 / mu**2 + F(3, 2) * lam / mu) * q11**3
    return MelnikovForm(4, (), (2 * mu * c,), (a * lam * c,))


def integrability_check(nf: NormalForm) -> Integrability:
    if nf.lam == 0 and nf.mu == 0:
        return Integrability.HAMILTONIAN
    if all(nf.q(i, j) == 0 for i, j in ODD_COEFFS):
        return Integrability.REVERSIBLE
    return Integrability.NOT_INTEGRABLE


def case_c_ratios(a) -> List[Fraction]:
    """Rational t = lam/mu with a t^2 + 4 t + 4 = 0, i.e. t = 2(-1 +- sqrt(1 - a))/a."""
    a = as_fraction(a)
    if a > 1:
        return []
    root = rational_sqrt(1 - a)
    if root is None:
        return []
    return sorted({2 * (-1 + root) / a, 2 * (-1 - root) / a})


# --------------------------------------------------------------------------
# ladder constructors

def ladder_normal_form(a, case: CaseTag, lam, mu, q11, q20=0, q02=0, q04=0, even=None) -> NormalForm:
    """A normal form with M_1 = M_2 = 0 in the given case.

    ``even`` (a BivariatePoly) overrides the even part; by default the even
    part has the shape forced by M_3 = 0, so that M_4 is the first
    non-trivial coefficient.
    """
    a = as_fraction(a)
    lam, mu = as_fraction(lam), as_fraction(mu)
    if case is CaseTag.A_MU0 and (mu != 0 or lam == 0):
        raise ValueError("case A needs mu = 0 and lambda != 0")
    if case is CaseTag.B_LAMBDA0 and (lam != 0 or mu == 0):
        raise ValueError("case B needs lambda = 0 and mu != 0")
    if case is CaseTag.C_RESONANT and (lam * mu == 0 or a * lam**2 + 4 * lam * mu + 4 * mu**2 != 0):
        raise ValueError("case C needs lambda mu != 0 and a lambda^2 + 4 lambda mu + 4 mu^2 = 0")
    Q1 = odd_part_shape(case, q11, a, lam, mu)
    Q2 = even if even is not None else even_part_shape(q20, q02, q04, lam, mu, a)
    return NormalForm(Q1 + Q2.filter(lambda i, j: j % 2 == 0), lam, mu)


# --------------------------------------------------------------------------
# published s_2, s_3 and the oracle one-forms omega_k

def s2_published(nf: NormalForm, a, case: Optional[CaseTag] = None) -> BivariatePoly:
    """s_2 with (lam x + mu x^2) omega = dS_2 + s_2 dH, per case A, B, C."""
    a = as_fraction(a)
    if case is None:
        case = case_of(nf, a)
    lam, mu, q = nf.lam, nf.mu, nf.q
    q02, q12, q22, q04, q11 = q(0, 2), q(1, 2), q(2, 2), q(0, 4), q(1, 1)
    H = hamiltonian_poly(a)
    x = X
    if case is CaseTag.A_MU0:
        return (lam**2 * x**2 - lam * q11 * Y
                + 2 * lam * (q02 * x + q12 / 2 * x**2 + q22 / 3 * x**3)
                + 4 * lam * q04 * (2 * x * H - x**3 / 3 + x**4 / 3 - a / 10 * x**5))
    if case is CaseTag.B_LAMBDA0:
        return (mu**2 * x**4 + mu * q11 * Y
                + 4 * mu * (q02 / 2 * x**2 + q12 / 3 * x**3 + q22 / 4 * x**4)
                + 8 * mu * q04 * (x**2 * H - x**4 / 4 + F(4, 15) * x**5 - a / 12 * x**6))
    if case is CaseTag.C_RESONANT:
        L = nf.L
        return (L * L - lam * q11 * Y + 2 * lam * q02 * x + (lam * q12 + 2 * mu * q02) * x**2
                + F(2, 3) * (lam * q22 + 2 * mu * q12) * x**3 + mu * q22 * x**4
                + 4 * q04 * (2 * L * H - lam / 3 * x**3 + (lam / 3 - mu / 2) * x**4
                             - (a / 10 * lam - F(8, 15) * mu) * x**5 - a / 6 * mu * x**6))
    raise ReversibleCase("case D: Q_1 = 0 and the perturbation is time-reversible")


def _aux_A(nf: NormalForm, a) -> BivariatePoly:
    lam, mu, x = nf.lam, nf.mu, X
    return (lam * (x**3 / 3 - x**4 / 3 + a / 10 * x**5)
            + mu * (x**4 / 2 - F(8, 15) * x**5 + a / 6 * x**6))


def s3_published(nf: NormalForm, a, case: Optional[CaseTag] = None) -> BivariatePoly:
    """s_3 with s_2 omega = dS_3 + s_3 dH, under the M_3 = 0 constraints."""
    a = as_fraction(a)
    if case is None:
        case = case_of(nf, a)
    _require_q11(case, nf)
    kappa = _kappa(case, nf)
    q20, q02, q04 = nf.q(2, 0), nf.q(0, 2), nf.q(0, 4)
    H = hamiltonian_poly(a)
    L, A, B = nf.L, _aux_A(nf, a), _B(a)
    Lx = L.diff_x()
    Xi = (((2 * q20 - L) * B + A / 2) * Lx).integrate_x()  # dX = [(2 q20 - L) B + A/2] dL
    Ups = (B * B * Lx).integrate_x()  # dY = B^2 dL
    Q1 = nf.Q1
    y2 = Y * Y
    bracket = (2 * q20 - L) * B + A / 2 + (q02 - L / 3) * y2 + q04 * y2 * y2
    return (kappa * Y * (2 * q20 + F(4, 3) * L + 2 * q02 + 4 * q04 * y2) - 8 * q04 * L * Q1
            + 4 * q02**2 * L + F(8, 3) * q02 * L * L + F(10, 27) * L**3
            + 4 * q04 * (L + 6 * q02) * (2 * L * H - A)
            + 8 * q04 * Xi + 96 * q04**2 * (L * H * H - A * H + Ups)
            - 8 * q04 * L * bracket - kappa * Q1.divide_by_y())


def oracle_form(nf: NormalForm, a, k: int, case: Optional[CaseTag] = None) -> OneForm:
    """omega_k = s_{k-1} omega, with s_0 = 1, s_1 = L and the published s_2, s_3."""
    om = nf.omega(a)
    if k == 1:
        return om
    if k == 2:
        return om * nf.L
    if k == 3:
        return om * s2_published(nf, a, case)
    if k == 4:
        return om * s3_published(nf, a, case)
    raise ValueError("orders 1..4 only")


# --------------------------------------------------------------------------
# exact Francoise recursion

def francoise_forms(omega: OneForm, a, max_order: int = 4) -> List[MelnikovForm]:
    """M_1, M_2, ... by exact reduction in the Petrov module.

    Stops at the first non-vanishing coefficient or at ``max_order``.
    """
    return [MelnikovForm(k + 1, *coeffs)
            for k, coeffs in enumerate(francoise_coefficients(omega, as_fraction(a), max_order))]


def exact_melnikov(nf_or_spec, a, max_order: int = 4) -> List[MelnikovForm]:
    if isinstance(nf_or_spec, NormalForm):
        om = nf_or_spec.omega(a)
    else:
        om = nf_or_spec.omega
    return francoise_forms(om, a, max_order)


def melnikov_form(p: PerturbationSpec, a, order: Optional[int] = None) -> MelnikovForm:
    """The first non-vanishing M_k (or M_order) from the closed forms.

    Raises NotVanishing when ``order`` is requested but a lower M_k is not
    identically zero; HamiltonianPerturbation / ReversibleCase when the
    ladder stops because the perturbation is integrable.
    """
    a = as_fraction(a)
    m1 = m1_form(p, a)
    if order == 1 or (order is None and not m1.is_zero()):
        return m1
    if not m1.is_zero():
        raise NotVanishing("M1 does not vanish identically")
    nf = normal_form_of(p, a)
    m2 = m2_form(nf, a)
    if order == 2 or (order is None and not m2.is_zero()):
        return m2
    if not m2.is_zero():
        raise NotVanishing("M2 does not vanish identically")
    case, _ = m2_vanishes_case(nf, a)
    m3 = m3_form(nf, a, case)
    if order == 3 or (order is None and not m3.is_zero()):
        return m3
    if not m3.is_zero():
        raise NotVanishing("M3 does not vanish identically")
    return m4_form(nf, a, case)
