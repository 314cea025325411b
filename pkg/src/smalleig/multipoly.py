"""Sparse multivariate polynomials over the coefficient derivatives.

Variables ``a_1 .. a_J`` stand for the successive derivatives of the
coefficient function at the origin.  Monomials are exponent tuples; the
*weight* of a monomial is ``sum(j * e_j)`` over variables ``a_j``, which is
the grading the perturbation recursion preserves.

Coefficients may be floats or ``fractions.Fraction``; arithmetic never mixes
the two inside one polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

__all__ = ["MultiPoly"]

CLEANUP_EPS = 1e-12


def _is_zero(c) -> bool:
    if isinstance(c, Fraction):
        return c == 0
    return abs(c) <= CLEANUP_EPS


@dataclass(frozen=True)
class MultiPoly:
    """Polynomial as a map from exponent tuple to coefficient."""

    nvars: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for expo, coeff in self.terms.items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != self.nvars:
                raise ValueError("exponent tuple length does not match nvars")
            if any(e < 0 for e in expo):
                raise ValueError("negative exponent")
            if not _is_zero(coeff):
                clean[expo] = coeff
        object.__setattr__(self, "terms", clean)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value) -> "MultiPoly":
        return cls(nvars, {tuple([0] * nvars): value})

    @classmethod
    def variable(cls, nvars: int, j: int, coeff=1.0) -> "MultiPoly":
        """The monomial ``coeff * a_j`` (j is 1-based)."""
        expo = [0] * nvars
        expo[j - 1] = 1
        return cls(nvars, {tuple(expo): coeff})

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            terms[expo] = terms.get(expo, 0) + coeff
        return MultiPoly(self.nvars, terms)

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + other.scaled(-1)

    def scaled(self, factor) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: c * factor for e, c in self.terms.items()})

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                terms[expo] = terms.get(expo, 0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    # -- queries ---------------------------------------------------------

    def coefficient(self, expo) -> float:
        return self.terms.get(tuple(expo), 0)

    def linear_coefficient(self, j: int):
        """Coefficient of the bare variable ``a_j``."""
        expo = [0] * self.nvars
        expo[j - 1] = 1
        return self.terms.get(tuple(expo), 0)

    def evaluate(self, values) -> float:
        """Evaluate at concrete values ``a_1 .. a_nvars``."""
        if len(values) < self.nvars:
            values = list(values) + [0.0] * (self.nvars - len(values))
        total = 0
        for expo, coeff in self.terms.items():
            term = coeff
            for v, e in zip(values, expo):
                if e:
                    term = term * v ** e
            total += term
        return total

    def weights(self) -> set[int]:
        """Set of monomial weights present, weight = sum(j * e_j)."""
        return {sum((j + 1) * e for j, e in enumerate(expo)) for expo in self.terms}

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for expo in sorted(self.terms):
            factors = [f"a{j + 1}" + (f"^{e}" if e > 1 else "")
                       for j, e in enumerate(expo) if e]
            mono = "*".join(factors) if factors else "1"
            parts.append(f"({self.terms[expo]})*{mono}")
        return " + ".join(parts)
