"""Small-eigenvalue perturbation series, moments, and the solvability verdict.

On the threshold set the eps = 0 operator has a one-dimensional kernel
spanned by a normalized eigenfunction psi0.  Writing the eps-family as an
operator power series ``B(eps) ~ sum_j beta_j eps^j`` with

    beta_j = (branch sign) * (m-1) * a_j / j! * y^(m-2+j),   j >= 1,

the tracked small eigenvalue expands as ``lambda(eps) ~ sum_n L_n eps^n``
where each order is fixed by solvability against the kernel:

    L_n   = <beta_n psi0, psi0> + sum_{j<n} <beta_j phi_{n-j}, psi0>
    B0 phi_n = - sum_{j<=n} (beta_j - L_j) phi_{n-j},   phi_n  perp  psi0.

The corrector solve uses the deflated inverse of B0.  Each order is linear
in the top derivative ``a_n`` with coefficient

    c_n = (branch sign) * (m-1) * mu_{m-2+n} / n!

where ``mu_j`` are the moments of psi0^2; solving ``L_n = 0`` for ``a_n``
yields the forced derivative values.  Run with numbers for a concrete
coefficient, or over the polynomial ring in ``a_1 .. a_N`` for the full
structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConvergenceError, MonomialCapError, NotOnSigmaError)
from .hermite import BasisSpec, power_diags, densify_diags
from .linalg import DeflatedSolver, eigh
from .multipoly import MultiPoly
from .spectrum import (DIM_CAP, DIM_START, ModelParams, _accuracy_floor,
                       assemble, sigma_set)

__all__ = ["MomentTable", "PerturbSeries", "Decision", "Tolerances",
           "kernel_and_moments", "moment_recurrence_residual",
           "lambda_series", "lambda_polynomials", "decide", "forced_taylor",
           "ForcedTaylor"]

MONOMIAL_CAP = 20000


@dataclass(frozen=True)
class Tolerances:
    """Zero-test thresholds used by the decision logic."""

    tol_sigma: float = 1e-6
    tol_lambda: float = 1e-7
    c_floor_rel: float = 1e-6
    eig_tol: float = 1e-9


@dataclass(frozen=True)
class MomentTable:
    """Moments ``mu_j = integral y^j psi0(y)^2 dy`` for j = 0..j_max.

    Indices below zero count as zero.  The kernel sign is fixed so the first
    significant basis coefficient of psi0 is positive.  Normalization and
    positivity of the even moments are structural and checked on build.
    """

    m: int
    alpha: float
    branch: str
    mu: dict[int, float]
    basis: BasisSpec

    def __post_init__(self):
        if abs(self.mu.get(0, 0.0) - 1.0) > 1e-9:
            raise ValueError("zeroth moment must be the unit normalization")
        bad = [j for j, v in self.mu.items() if j % 2 == 0 and v <= 0.0]
        if bad:
            raise ValueError(f"even moments must be positive, got indices {bad}")

    def value(self, j: int) -> float:
        if j < 0:
            return 0.0
        if j not in self.mu:
            raise KeyError(f"moment index {j} not computed (have 0..{max(self.mu)})")
        return self.mu[j]

    @property
    def j_max(self) -> int:
        return max(self.mu)


@dataclass(frozen=True)
class PerturbSeries:
    """Orders 0..N of the small-eigenvalue expansion plus its correctors."""

    m: int
    alpha: float
    branch: str
    order: int
    lambdas: tuple[float, ...]          # index n; lambdas[0] == 0.0
    phis: tuple[np.ndarray, ...]        # correctors phi_1..phi_N
    c: dict[int, float]                 # linear coefficient of a_n per order
    forced: dict[int, float]            # value of a_n that zeroes that order
    moments: MomentTable
    basis: BasisSpec
    kernel_value: float
    psi0: np.ndarray


@dataclass(frozen=True)
class Decision:
    """Solvability verdict to a finite order."""

    verdict: str                       # NotOnSigma_Solvable | Solvable | NonsolvableToOrder
    m: int
    a0: float
    order: int
    branch: str | None = None
    witness_order: int | None = None
    lambda_value: float | None = None
    exceptions: tuple[int, ...] = ()
    sigma_distance: float | None = None
    sigma_element: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.verdict not in ("NotOnSigma_Solvable", "Solvable", "NonsolvableToOrder"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.m % 2 == 0:
            if self.exceptions:
                raise ValueError("even m admits no exception orders")
            if self.witness_order is not None and self.witness_order % 2:
                raise ValueError("even m cannot witness at odd order")
        elif len(self.exceptions) > max(self.m - 3, 0):
            raise ValueError(f"exception set larger than m-3 = {self.m - 3}")


# ---------------------------------------------------------------------------
# kernel and moments


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(vec) > 0.1 * np.abs(vec).max()))
    return vec if vec[idx] > 0 else -vec


def _kernel_at_dim(params: ModelParams, dim: int, on_sigma_rel: float = 0.05):
    """Decompose the eps = 0 operator; return (solver, psi0, basis, pairs)."""
    basis = BasisSpec(dim, params.scale)
    mat = assemble(params, 0.0, basis)
    pairs = eigh(mat)
    vals = np.array([p.value for p in pairs])
    order = np.argsort(np.abs(vals))
    gap = abs(float(vals[order[1]]))
    small = abs(float(vals[order[0]]))
    floor = _accuracy_floor(params, 0.0, dim)
    if small > max(on_sigma_rel * gap, 10.0 * floor):
        raise NotOnSigmaError(
            f"constant {params.alpha} is not on the threshold set for branch "
            f"{params.branch}: smallest eigenvalue {small:.3g} vs gap {gap:.3g}")
    solver = DeflatedSolver(mat, gap_floor=0.5 * gap, pairs=pairs)
    psi0 = _fix_sign(solver.kernel)
    return solver, psi0, basis, mat


def _moments_of(psi0: np.ndarray, basis: BasisSpec, j_max: int) -> dict[int, float]:
    powers = power_diags(basis, j_max)
    out = {}
    for j in range(j_max + 1):
        pj = densify_diags(powers[j], basis.dim)
        out[j] = float(psi0 @ pj @ psi0)
    return out


def kernel_and_moments(m: int, alpha: float, branch: str, j_max: int,
                       tol: float = 1e-9, scale: float | None = None,
                       ) -> tuple[np.ndarray, MomentTable, BasisSpec]:
    """Converged kernel eigenfunction and its moments up to ``j_max``.

    Doubles the basis until every moment is stable to ``tol`` relative to
    its own size (or the float accuracy floor if that is larger).
    """
    params = ModelParams(m, branch, alpha, (), scale)
    dim = DIM_START
    prev = None
    while dim <= DIM_CAP:
        _, psi0, basis, _ = _kernel_at_dim(params, dim)
        mu = _moments_of(psi0, basis, j_max)
        if prev is not None:
            floor = _accuracy_floor(params, 0.0, dim)
            drift = max(abs(mu[j] - prev[j]) / max(1.0, abs(mu[j])) for j in mu)
            if drift < max(tol, floor):
                table = MomentTable(m, alpha, branch, mu, basis)
                return psi0, table, basis
        prev = mu
        dim *= 2
    raise ConvergenceError(f"moments not stable at dimension cap {DIM_CAP}")


def moment_recurrence_residual(table: MomentTable, j: int) -> float:
    """Residual of the three-term moment identity at index ``j``.

    The identity couples ``mu_{2m+j-1}``, ``mu_{m+j-1}`` and ``mu_{j-1}``
    through the kernel equation; a near-zero residual certifies both the
    moments and the kernel eigenfunction.  The coupling constant is the full
    weight of the low-order potential term, ``(m-1) * alpha`` with the
    branch sign.
    """
    if j < -2:
        raise ValueError("index must be at least -2")
    m = table.m
    coupling = (1 if table.branch == "+" else -1) * (m - 1) * table.alpha
    lhs = (2 * m + 2 * j + 2) * table.value(2 * m + j - 1)
    lhs += (m + 2 * j + 2) * coupling * table.value(m + j - 1)
    rhs = 0.5 * j * (j + 1) * (j + 2) * table.value(j - 1)
    return lhs - rhs


# ---------------------------------------------------------------------------
# numeric series


def _beta_matrices(params: ModelParams, basis: BasisSpec, n_top: int) -> list[np.ndarray | None]:
    """Dense beta_j (with the Taylor value folded in) for j = 1..n_top."""
    m, s = params.m, params.sign
    powers = power_diags(basis, m - 2 + n_top)
    out: list[np.ndarray | None] = [None]
    for j in range(1, n_top + 1):
        aj = params.taylor[j - 1] if j <= len(params.taylor) else 0.0
        if aj == 0.0:
            out.append(None)
        else:
            w = s * (m - 1) * aj / math.factorial(j)
            out.append(w * densify_diags(powers[m - 2 + j], basis.dim))
    return out


def _series_at_dim(params: ModelParams, N: int, dim: int) -> PerturbSeries:
    solver, psi0, basis, mat = _kernel_at_dim(params, dim)
    betas = _beta_matrices(params, basis, N)
    mu = _moments_of(psi0, basis, params.m - 2 + N)

    lambdas = [0.0]
    phis: list[np.ndarray] = []
    history: list[np.ndarray] = [psi0]  # phi_0 = psi0
    for n in range(1, N + 1):
        lam = 0.0
        if betas[n] is not None:
            lam += float(psi0 @ betas[n] @ psi0)
        for j in range(1, n):
            if betas[j] is not None:
                lam += float(psi0 @ betas[j] @ history[n - j])
        rhs = np.zeros(basis.dim)
        for j in range(1, n + 1):
            lam_j = lambdas[j] if j < n else lam
            if betas[j] is not None:
                rhs -= betas[j] @ history[n - j]
            if lam_j != 0.0:
                rhs += lam_j * history[n - j]
        phi = solver.solve(rhs)
        lambdas.append(lam)
        phis.append(phi)
        history.append(phi)

    s = params.sign
    c = {n: s * (params.m - 1) * mu[params.m - 2 + n] / math.factorial(n)
         for n in range(1, N + 1)}
    mu_max = max(abs(v) for v in mu.values())
    forced = {}
    for n in range(1, N + 1):
        if abs(c[n]) > 1e-6 * mu_max:
            a_n = params.taylor[n - 1] if n <= len(params.taylor) else 0.0
            forced[n] = a_n - lambdas[n] / c[n]
    table = MomentTable(params.m, params.alpha, params.branch, mu, basis)
    return PerturbSeries(params.m, params.alpha, params.branch, N,
                         tuple(lambdas), tuple(phis), c, forced, table,
                         basis, solver.kernel_value, psi0)


def lambda_series(params: ModelParams, N: int, tol: float = 1e-9) -> PerturbSeries:
    """Numeric expansion orders 1..N for a concrete Taylor coefficient list.

    Doubles the basis until the orders are stable to ``tol`` (or the float
    accuracy floor).  Missing Taylor entries count as zero.
    """
    if N < 0:
        raise ValueError("order must be nonnegative")
    dim = DIM_START
    prev = None
    while dim <= DIM_CAP:
        series = _series_at_dim(params, N, dim)
        if prev is not None:
            floor = _accuracy_floor(params, 0.0, dim)
            drift = max((abs(a - b) for a, b
                         in zip(series.lambdas, prev.lambdas)), default=0.0)
            if drift < max(tol, floor):
                return series
        prev = series
        dim *= 2
    raise ConvergenceError(f"series orders not stable at dimension cap {DIM_CAP}")


# ---------------------------------------------------------------------------
# polynomial series

# A corrector in polynomial mode is a map monomial -> basis vector; the
# expansion order is then a scalar polynomial in the same variables.


def _poly_series_at_dim(params: ModelParams, N: int, dim: int
                        ) -> tuple[list[MultiPoly], list[float], MomentTable, BasisSpec]:
    solver, psi0, basis, _ = _kernel_at_dim(params, dim)
    m, s = params.m, params.sign
    powers = power_diags(basis, m - 2 + N)
    beta_mats = [None] + [s * (m - 1) / math.factorial(j)
                          * densify_diags(powers[m - 2 + j], basis.dim)
                          for j in range(1, N + 1)]
    mu = _moments_of(psi0, basis, m - 2 + N)

    def var(j: int) -> tuple[int, ...]:
        e = [0] * N
        e[j - 1] = 1
        return tuple(e)

    zero_expo = tuple([0] * N)
    lambdas: list[MultiPoly] = [MultiPoly.zero(N)]
    history: list[dict[tuple[int, ...], np.ndarray]] = [{zero_expo: psi0}]
    for n in range(1, N + 1):
        # beta_j acting on a polynomial corrector multiplies each monomial
        # by a_j and each vector by the beta matrix
        lam_terms: dict[tuple[int, ...], float] = {}
        for j in range(1, n + 1):
            bj = beta_mats[j]
            for expo, vec in history[n - j].items():
                mono = tuple(e + v for e, v in zip(expo, var(j)))
                contrib = float(psi0 @ bj @ vec)
                lam_terms[mono] = lam_terms.get(mono, 0.0) + contrib
        lam = MultiPoly(N, lam_terms)

        rhs: dict[tuple[int, ...], np.ndarray] = {}
        for j in range(1, n + 1):
            bj = beta_mats[j]
            for expo, vec in history[n - j].items():
                mono = tuple(e + v for e, v in zip(expo, var(j)))
                acc = rhs.setdefault(mono, np.zeros(basis.dim))
                acc -= bj @ vec
            lam_j = lambdas[j] if j < n else lam
            for le, lc in lam_j.terms.items():
                for expo, vec in history[n - j].items():
                    mono = tuple(a + b for a, b in zip(le, expo))
                    acc = rhs.setdefault(mono, np.zeros(basis.dim))
                    acc += lc * vec
        if len(rhs) > MONOMIAL_CAP:
            raise MonomialCapError(f"monomial count {len(rhs)} exceeds cap")
        phi = {expo: solver.solve(vec) for expo, vec in rhs.items()
               if float(np.abs(vec).max()) > 0.0}
        lambdas.append(lam)
        history.append(phi)

    c = [s * (m - 1) * mu[m - 2 + n] / math.factorial(n) for n in range(1, N + 1)]
    table = MomentTable(m, params.alpha, params.branch, mu, basis)
    return lambdas[1:], c, table, basis


def lambda_polynomials(m: int, alpha: float, branch: str, N: int,
                       tol: float = 1e-9, scale: float | None = None
                       ) -> tuple[list[MultiPoly], list[float], MomentTable]:
    """Expansion orders 1..N as polynomials in the variables a_1..a_N.

    The linear coefficient of ``a_n`` in order n is the returned ``c[n-1]``;
    every monomial of order n has weight exactly n.
    """
    if N < 1:
        raise ValueError("order must be positive")
    params = ModelParams(m, branch, alpha, (), scale)
    dim = DIM_START
    prev = None
    while dim <= DIM_CAP:
        polys, c, table, basis = _poly_series_at_dim(params, N, dim)
        if prev is not None:
            floor = _accuracy_floor(params, 0.0, dim)
            drift = 0.0
            for p_new, p_old in zip(polys, prev):
                monos = set(p_new.terms) | set(p_old.terms)
                for e in monos:
                    drift = max(drift, abs(p_new.terms.get(e, 0.0) - p_old.terms.get(e, 0.0)))
            if drift < max(tol, floor):
                return polys, c, table
        prev = polys
        dim *= 2
    raise ConvergenceError(f"polynomial orders not stable at dimension cap {DIM_CAP}")


# ---------------------------------------------------------------------------
# decision logic


def _locate_on_sigma(m: int, a0: float, tolerances: Tolerances,
                     halfwidth: float = 1.0, scale: float | None = None
                     ) -> tuple[str | None, float, float | None]:
    """Branch containing a0 (within tol_sigma), its distance and element."""
    window = (a0 - halfwidth, a0 + halfwidth)
    best = (math.inf, None, None)
    for branch in ("+", "-"):
        ss = sigma_set(m, branch, window, tol=min(tolerances.tol_sigma * 1e-2, 1e-8),
                       scale=scale)
        dist, elem = ss.distance(a0)
        if dist < best[0]:
            best = (dist, branch, elem)
    dist, branch, elem = best
    if dist > tolerances.tol_sigma:
        return None, dist, elem
    if m % 2 == 1:
        branch = "+"  # both branches share the set; orders map by parity sign
    return branch, dist, elem


def decide(m: int, a0: float, taylor: tuple[float, ...] | list[float], N: int,
           tolerances: Tolerances | None = None, scale: float | None = None) -> Decision:
    """Solvability verdict for the instance, to expansion order N.

    Off the threshold set the operator is solvable outright.  On it, the
    first nonvanishing expansion order is a solvability witness; if all
    orders through N vanish the verdict is nonsolvable-to-order-N, with the
    set E of orders whose linear coefficient was below the zero floor (no
    constraint checkable there).
    """
    if N < 1:
        raise ValueError("order must be at least 1")
    tolerances = tolerances or Tolerances()
    branch, dist, elem = _locate_on_sigma(m, a0, tolerances, scale=scale)
    if branch is None:
        return Decision("NotOnSigma_Solvable", m, a0, N,
                        sigma_distance=dist, sigma_element=elem,
                        tolerances=tolerances)
    params = ModelParams(m, branch, a0, tuple(taylor), scale)
    series = lambda_series(params, N, tol=tolerances.eig_tol)
    mu_max = max(abs(v) for v in series.moments.mu.values())
    c_floor = tolerances.c_floor_rel * mu_max
    # Exception orders exist only for odd m; even m zeroes the odd orders by
    # parity, which is a structural identity rather than a lost constraint.
    exceptions = ()
    if m % 2 == 1:
        exceptions = tuple(n for n in range(1, N + 1) if abs(series.c[n]) <= c_floor)
    for n in range(1, N + 1):
        if abs(series.lambdas[n]) > tolerances.tol_lambda:
            return Decision("Solvable", m, a0, N, branch=branch,
                            witness_order=n, lambda_value=series.lambdas[n],
                            exceptions=tuple(e for e in exceptions if e < n),
                            sigma_distance=dist, sigma_element=elem,
                            tolerances=tolerances)
    return Decision("NonsolvableToOrder", m, a0, N, branch=branch,
                    exceptions=exceptions, sigma_distance=dist,
                    sigma_element=elem, tolerances=tolerances)


@dataclass(frozen=True)
class ForcedTaylor:
    """Derivative values forced by requiring every order to vanish."""

    entries: tuple[tuple[int, float], ...]
    taylor: tuple[float, ...]
    obstruction_order: int | None = None
    obstruction_value: float | None = None


def forced_taylor(m: int, a0: float, partial_taylor, N: int,
                  tolerances: Tolerances | None = None,
                  scale: float | None = None) -> ForcedTaylor:
    """Force derivatives order by order so the expansion vanishes through N.

    Orders whose linear coefficient is solid get the unique value that
    zeroes that order (user-supplied values there are overwritten); orders
    with a vanishing coefficient stay free, but if the order cannot vanish
    the instance is solvable and the obstruction is reported instead of an
    error.
    """
    tolerances = tolerances or Tolerances()
    branch, dist, _ = _locate_on_sigma(m, a0, tolerances, scale=scale)
    if branch is None:
        raise NotOnSigmaError(f"a0={a0} is not within {tolerances.tol_sigma} "
                              f"of the threshold set for m={m}")
    taylor = list(partial_taylor) + [0.0] * max(0, N - len(partial_taylor))
    taylor = taylor[:N]
    entries = []
    for n in range(1, N + 1):
        params = ModelParams(m, branch, a0, tuple(taylor), scale)
        series = lambda_series(params, n, tol=tolerances.eig_tol)
        mu_max = max(abs(v) for v in series.moments.mu.values())
        c_floor = tolerances.c_floor_rel * mu_max
        if abs(series.c[n]) > c_floor:
            forced_val = taylor[n - 1] - series.lambdas[n] / series.c[n]
            taylor[n - 1] = forced_val
            entries.append((n, forced_val))
        elif abs(series.lambdas[n]) > tolerances.tol_lambda:
            return ForcedTaylor(tuple(entries), tuple(taylor),
                                obstruction_order=n,
                                obstruction_value=series.lambdas[n])
    return ForcedTaylor(tuple(entries), tuple(taylor))
