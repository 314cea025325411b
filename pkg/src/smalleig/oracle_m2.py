"""Exact rational oracle for the quadratic case m = 2.

At level K the threshold constant is -(2K + 1) and the eps = 0 operator
acts diagonally on the functions ``H_k(y) exp(-y^2/2)`` (unnormalized
physicists' Hermite polynomials times the Gaussian), with eigenvalue
``2 (k - K)``.  Multiplication by y maps H_k to ``H_{k+1}/2 + k H_{k-1}``,
so the whole perturbation recursion closes over the rationals: the deflated
inverse is exact division by ``2 (k - K)`` away from mode K.

Inner products carry the weights ``<H_j, H_k> = delta_jk 2^k k! sqrt(pi)``;
the sqrt(pi) factor cancels in every normalized quantity, so all arithmetic
below is pure ``fractions.Fraction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegreeOverflowError
from .multipoly import MultiPoly

__all__ = ["HermiteVector", "exact_apply_y", "exact_moments",
           "exact_lambda_series", "exact_lambda_polynomials", "exact_c",
           "N_CAP_DEFAULT"]

N_CAP_DEFAULT = 8


@dataclass(frozen=True)
class HermiteVector:
    """Rational coefficients of ``sum_k c_k H_k(y) exp(-y^2/2)``."""

    coeffs: dict[int, Fraction]
    k_max: int

    def __post_init__(self):
        clean = {int(k): Fraction(c) for k, c in self.coeffs.items() if c != 0}
        if any(k < 0 for k in clean):
            raise ValueError("negative Hermite index")
        top = max(clean, default=0)
        if top > self.k_max:
            raise DegreeOverflowError(
                f"Hermite degree {top} exceeds cap {self.k_max}")
        object.__setattr__(self, "coeffs", clean)

    def add(self, other: "HermiteVector") -> "HermiteVector":
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            coeffs[k] = coeffs.get(k, Fraction(0)) + c
        return HermiteVector(coeffs, max(self.k_max, other.k_max))

    def scaled(self, factor) -> "HermiteVector":
        f = Fraction(factor)
        return HermiteVector({k: c * f for k, c in self.coeffs.items()}, self.k_max)

    def is_zero(self) -> bool:
        return not self.coeffs


def _weight(k: int) -> int:
    return 2 ** k * math.factorial(k)


def weighted_dot(u: HermiteVector, v: HermiteVector) -> Fraction:
    """Inner product over the Hermite weights, with sqrt(pi) dropped."""
    total = Fraction(0)
    for k, c in u.coeffs.items():
        d = v.coeffs.get(k)
        if d is not None:
            total += c * d * _weight(k)
    return total


def exact_apply_y(v: HermiteVector, p: int = 1) -> HermiteVector:
    """Exact coefficients of ``y**p`` times the vector.

    One application sends H_k to ``H_{k+1}/2 + k H_{k-1}``; repeated p
    times.  Raises when the degree would pass the vector's cap.
    """
    if p < 0:
        raise ValueError("power must be nonnegative")
    cur = v
    for _ in range(p):
        nxt: dict[int, Fraction] = {}
        for k, c in cur.coeffs.items():
            nxt[k + 1] = nxt.get(k + 1, Fraction(0)) + c / 2
            if k >= 1:
                nxt[k - 1] = nxt.get(k - 1, Fraction(0)) + c * k
        cur = HermiteVector(nxt, v.k_max)
    return cur


def _solve_deflated(rhs: HermiteVector, K: int) -> HermiteVector:
    """Exact inverse of the level-K operator away from its kernel mode."""
    if rhs.coeffs.get(K, Fraction(0)) != 0:
        raise ArithmeticError("right-hand side has a kernel component")
    return HermiteVector({k: c / (2 * (k - K)) for k, c in rhs.coeffs.items()},
                         rhs.k_max)


def exact_moments(K: int, j_max: int, k_max: int | None = None) -> list[Fraction]:
    """Moments of the normalized level-K kernel, exact."""
    if k_max is None:
        k_max = K + j_max + 1
    psi = HermiteVector({K: Fraction(1)}, k_max)
    norm = weighted_dot(psi, psi)
    out = []
    for j in range(j_max + 1):
        out.append(weighted_dot(exact_apply_y(psi, j), psi) / norm)
    return out


def exact_c(K: int, N: int) -> list[Fraction]:
    """Linear coefficients c_n = mu_n / n! for n = 1..N at level K."""
    mu = exact_moments(K, N)
    return [mu[n] / math.factorial(n) for n in range(1, N + 1)]


def _degree_cap(K: int, N: int) -> int:
    # each perturbation order raises the Hermite degree by at most its index
    return K + N * N + N


def exact_lambda_series(K: int, taylor, N: int,
                        n_cap: int = N_CAP_DEFAULT) -> list[Fraction]:
    """Exact expansion orders 1..N for rational Taylor data at level K."""
    if K < 0:
        raise ValueError("level must be nonnegative")
    if not 1 <= N <= n_cap:
        raise ValueError(f"order must lie in 1..{n_cap}")
    taylor = [Fraction(t) for t in taylor] + [Fraction(0)] * max(0, N - len(taylor))
    k_max = _degree_cap(K, N)
    psi = HermiteVector({K: Fraction(1)}, k_max)
    norm = weighted_dot(psi, psi)

    def beta(j: int, v: HermiteVector) -> HermiteVector:
        # y^j scaled by a_j / j!  (m = 2, so the power of y is exactly j)
        return exact_apply_y(v, j).scaled(taylor[j - 1] / math.factorial(j))

    lambdas: list[Fraction] = [Fraction(0)]
    history = [psi]
    for n in range(1, N + 1):
        lam = weighted_dot(beta(n, psi), psi) / norm
        for j in range(1, n):
            lam += weighted_dot(beta(j, history[n - j]), psi) / norm
        rhs = HermiteVector({}, k_max)
        for j in range(1, n + 1):
            lam_j = lambdas[j] if j < n else lam
            rhs = rhs.add(beta(j, history[n - j]).scaled(-1))
            if lam_j != 0:
                rhs = rhs.add(history[n - j].scaled(lam_j))
        history.append(_solve_deflated(rhs, K))
        lambdas.append(lam)
    return lambdas[1:]


def exact_lambda_polynomials(K: int, N: int,
                             n_cap: int = N_CAP_DEFAULT) -> list[MultiPoly]:
    """Exact expansion orders 1..N as polynomials in a_1..a_N at level K.

    Same recursion as the numeric series, run over vectors of polynomials;
    every coefficient is a Fraction.
    """
    if K < 0:
        raise ValueError("level must be nonnegative")
    if not 1 <= N <= n_cap:
        raise ValueError(f"order must lie in 1..{n_cap}")
    k_max = _degree_cap(K, N)
    psi = HermiteVector({K: Fraction(1)}, k_max)
    norm = weighted_dot(psi, psi)
    zero = tuple([0] * N)

    def mono_shift(expo: tuple[int, ...], j: int) -> tuple[int, ...]:
        out = list(expo)
        out[j - 1] += 1
        return tuple(out)

    lambdas: list[MultiPoly] = [MultiPoly.zero(N)]
    history: list[dict[tuple[int, ...], HermiteVector]] = [{zero: psi}]
    for n in range(1, N + 1):
        lam_terms: dict[tuple[int, ...], Fraction] = {}
        for j in range(1, n + 1):
            inv_jfact = Fraction(1, math.factorial(j))
            for expo, vec in history[n - j].items():
                val = weighted_dot(exact_apply_y(vec, j), psi) * inv_jfact / norm
                if val != 0:
                    mono = mono_shift(expo, j)
                    lam_terms[mono] = lam_terms.get(mono, Fraction(0)) + val
        lam = MultiPoly(N, lam_terms)

        rhs: dict[tuple[int, ...], HermiteVector] = {}
        for j in range(1, n + 1):
            inv_jfact = Fraction(1, math.factorial(j))
            for expo, vec in history[n - j].items():
                mono = mono_shift(expo, j)
                term = exact_apply_y(vec, j).scaled(-inv_jfact)
                rhs[mono] = rhs[mono].add(term) if mono in rhs else term
            lam_j = lambdas[j] if j < n else lam
            for le, lc in lam_j.terms.items():
                for expo, vec in history[n - j].items():
                    mono = tuple(a + b for a, b in zip(le, expo))
                    term = vec.scaled(lc)
                    rhs[mono] = rhs[mono].add(term) if mono in rhs else term
        phi = {expo: _solve_deflated(vec, K) for expo, vec in rhs.items()
               if not vec.is_zero()}
        lambdas.append(lam)
        history.append(phi)
    return lambdas[1:]
