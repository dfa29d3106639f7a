"""Melnikov functions of cubic perturbations of a quartic Hamiltonian.

The unperturbed system has H = y^2/2 + x^2/2 - 2x^3/3 + a x^4/4 (a != 0, 8/9).
Modules:

* :mod:`polyalg`      exact bivariate polynomials and one-forms
* :mod:`hamiltonian`  phase-portrait regimes, period annuli, turning points
* :mod:`abelian`      the integrals I_k by quadrature, reductions, Picard-Fuchs
  system and exact series at the center
* :mod:`melnikov`     M_1..M_4 closed forms, quadrature oracles, exact recursion
* :mod:`zeroes`       zero counting, bounds, small-amplitude constructions
* :mod:`cli`          command-line entry point
"""

from .errors import MelnikovError

__version__ = "0.1.0"

__all__ = ["MelnikovError", "__version__"]
