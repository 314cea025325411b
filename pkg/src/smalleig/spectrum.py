"""Operator assembly, threshold sets, and the tracked small eigenvalue.

The model family is

    B(eps) = -d^2/dy^2 + y^(2(m-1)) +/- (m-1) * y^(m-2) * (a0 + b(eps*y))

with the coefficient perturbation ``b`` represented by its Taylor data
``taylor[j-1] = a^(j)(0)``.  The threshold set for a branch collects the
constants ``a0`` for which the eps = 0 operator is singular; on it the
operator family has a unique eigenvalue near zero whose behaviour in eps
carries the solvability information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceError, CrossingAmbiguityError,
                     InstabilityError, RankDeficientError, WindowCountError)
from .hermite import BasisSpec, densify_diags, kinetic_diags, power_diags
from .linalg import EigenPair, OpMatrix, eigh

__all__ = ["ModelParams", "SigmaSet", "SmallEigenConfig", "assemble",
           "eigenpairs_converged", "sigma_set", "small_eigenvalue",
           "sweep_fit", "SweepFit", "DEFAULT_EPS_GRID"]

DEFAULT_EPS_GRID = tuple(2.0 ** (-k) for k in range(3, 11))
DIM_START = 64
DIM_CAP = 2048


def default_scale(m: int) -> float:
    """Basis length scale adapted to the growth of the confining power.

    m = 2 keeps scale 1 (the basis is then the exact eigenbasis at eps = 0);
    steeper wells want narrower basis functions.  Chosen empirically so the
    eigenvalues of interest converge within the dimension cap.
    """
    table = {2: 1.0, 3: 0.8, 4: 0.65, 5: 0.5, 6: 0.45}
    return table.get(m, 2.7 / m)


@dataclass(frozen=True)
class ModelParams:
    """One problem instance: power m, branch sign, a(0), Taylor data.

    ``scale`` overrides the basis length scale; None picks the per-m default.
    """

    m: int
    branch: str = "+"
    alpha: float = 0.0
    taylor: tuple[float, ...] = ()
    scale: float | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.branch not in ("+", "-"):
            raise ValueError("branch must be '+' or '-'")
        if self.scale is None:
            object.__setattr__(self, "scale", default_scale(self.m))
        vals = (self.alpha, *self.taylor, self.scale)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "taylor", tuple(float(t) for t in self.taylor))

    @property
    def sign(self) -> int:
        return 1 if self.branch == "+" else -1

    @property
    def taylor_order(self) -> int:
        return len(self.taylor)

    def with_alpha(self, alpha: float) -> "ModelParams":
        return ModelParams(self.m, self.branch, alpha, self.taylor, self.scale)


@dataclass(frozen=True)
class SigmaSet:
    """Computed threshold constants for one (m, branch)."""

    m: int
    branch: str
    elements: tuple[float, ...]
    window: tuple[float, float]
    tol: float
    basis_used: BasisSpec
    crossing_indices: tuple[int, ...] = ()

    def __post_init__(self):
        el = tuple(sorted(float(e) for e in self.elements))
        object.__setattr__(self, "elements", el)
        for a, b in zip(el, el[1:]):
            if b - a <= 10.0 * self.tol:
                raise ValueError("threshold elements closer than discreteness allows")
        if self.m % 2 == 0 and el:
            bad = [e for e in el if (e >= 0 if self.branch == "+" else e <= 0)]
            if bad:
                raise ValueError(f"even-m threshold elements have wrong sign: {bad}")

    def distance(self, a0: float) -> tuple[float, float | None]:
        """Distance from a0 to the set and the nearest element."""
        if not self.elements:
            return math.inf, None
        best = min(self.elements, key=lambda e: abs(e - a0))
        return abs(best - a0), best

    def principal(self) -> float:
        """Element of smallest absolute value."""
        if not self.elements:
            raise ValueError("empty threshold set")
        return min(self.elements, key=abs)


@dataclass(frozen=True)
class SmallEigenConfig:
    """Window and sweep configuration for the tracked small eigenvalue.

    ``theta`` is the half-width of the window around zero; when None it is
    chosen at runtime as half the second-smallest eigenvalue magnitude of
    the eps = 0 operator.
    """

    theta: float | None = None
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID
    fit_order: int = 3

    def __post_init__(self):
        if self.theta is not None and self.theta <= 0:
            raise ValueError("theta must be positive")
        if any(e <= 0 for e in self.eps_grid):
            raise ValueError("eps grid must be positive")
        if self.fit_order < 0:
            raise ValueError("fit_order must be nonnegative")


# ---------------------------------------------------------------------------
# assembly


def _coefficient_weights(params: ModelParams, eps: float) -> dict[int, float]:
    """Weight of each power of y in the potential, keyed by the power."""
    m, s = params.m, params.sign
    weights = {2 * (m - 1): 1.0}
    w = weights.get(m - 2, 0.0) + s * (m - 1) * params.alpha
    if w != 0.0 or m == 2:
        weights[m - 2] = w
    if eps != 0.0:
        for j, aj in enumerate(params.taylor, start=1):
            if aj != 0.0:
                p = m - 2 + j
                weights[p] = weights.get(p, 0.0) + s * (m - 1) * (aj / math.factorial(j)) * eps ** j
    return weights


def _assemble_array(params: ModelParams, eps: float, basis: BasisSpec) -> np.ndarray:
    weights = _coefficient_weights(params, eps)
    p_top = max(weights)
    powers = power_diags(basis, p_top)
    total: dict[int, np.ndarray] = {d: v.copy() for d, v in kinetic_diags(basis).items()}
    for p, w in weights.items():
        for d, v in powers[p].items():
            tgt = total.setdefault(d, np.zeros(basis.dim))
            tgt += w * v
    return densify_diags(total, basis.dim)


def assemble(params: ModelParams, eps: float, basis: BasisSpec) -> OpMatrix:
    """Discretized operator for the given instance at coupling ``eps``.

    With eps = 0 this is the threshold-test operator for ``alpha``.  If the
    truncated potential makes the matrix dip far below its unperturbed
    range the assembly is rejected; use a smaller eps or more Taylor terms.
    """
    arr = _assemble_array(params, eps, basis)
    mat = OpMatrix(arr, bandwidth=max(2 * (params.m - 1),
                                      params.m - 2 + params.taylor_order, 2))
    if eps != 0.0 and params.taylor:
        base = _assemble_array(params, 0.0, basis)
        lowest = float(np.linalg.eigvalsh(arr)[0])
        lowest0 = float(np.linalg.eigvalsh(base)[0])
        alpha_norm = (params.m - 1) * abs(params.alpha) * float(
            max(np.abs(v).max() for v in power_diags(basis, max(params.m - 2, 1))[params.m - 2].values()))
        floor = lowest0 - 10.0 * max(alpha_norm, 1.0)
        if lowest < floor:
            raise InstabilityError(
                f"lowest eigenvalue {lowest:.3g} below stability floor {floor:.3g}; "
                "reduce eps or extend the Taylor data")
    return mat


# ---------------------------------------------------------------------------
# convergence control


def _lowest_values(params: ModelParams, eps: float, dim: int, count: int) -> np.ndarray:
    basis = BasisSpec(dim, params.scale)
    arr = _assemble_array(params, eps, basis)
    return np.linalg.eigvalsh(arr)[:count]


def _accuracy_floor(params: ModelParams, eps: float, dim: int) -> float:
    """Absolute eigenvalue accuracy achievable at this dimension.

    Dense symmetric solvers are backward stable, so low eigenvalues carry an
    absolute error of a modest multiple of eps_mach * ||A||; the norm grows
    with the top power of the potential and caps the meaningful tolerance.
    """
    basis = BasisSpec(dim, params.scale)
    weights = _coefficient_weights(params, eps)
    norm = (2.0 * dim + 1.0) / (2.0 * basis.scale ** 2) * 2.0
    for p, w in weights.items():
        norm += abs(w) * (basis.scale * math.sqrt(2.0 * (dim + p))) ** p
    return 64.0 * np.finfo(float).eps * norm


def converged_dim(params: ModelParams, eps: float, n_wanted: int, tol: float,
                  dim_start: int = DIM_START, dim_cap: int = DIM_CAP) -> int:
    """Smallest power-of-two dimension at which the lowest ``n_wanted``
    eigenvalues are stable under doubling, to within ``tol`` or the float
    accuracy floor of the doubled matrix, whichever is larger."""
    dim = dim_start
    prev = _lowest_values(params, eps, dim, n_wanted)
    while 2 * dim <= dim_cap:
        cur = _lowest_values(params, eps, 2 * dim, n_wanted)
        tol_eff = max(tol, _accuracy_floor(params, eps, 2 * dim))
        if np.max(np.abs(cur - prev)) < tol_eff:
            return 2 * dim
        prev = cur
        dim *= 2
    raise ConvergenceError(
        f"eigenvalues not stable at dimension cap {dim_cap}; "
        f"last iterates {prev[:n_wanted]} vs cap dim")


def eigenpairs_converged(params: ModelParams, eps: float, n_wanted: int,
                         tol: float = 1e-9) -> tuple[list[EigenPair], BasisSpec]:
    """Lowest ``n_wanted`` eigenpairs, refined by doubling the basis until
    the eigenvalues move less than ``tol``."""
    if n_wanted < 1:
        raise ValueError("n_wanted must be at least 1")
    dim = converged_dim(params, eps, n_wanted, tol)
    basis = BasisSpec(dim, params.scale)
    pairs = eigh(assemble(params, eps, basis))
    return pairs[:n_wanted], basis


# ---------------------------------------------------------------------------
# threshold set


def _base_and_coupling(params: ModelParams, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense alpha-independent part and the alpha-coupling matrix."""
    basis = BasisSpec(dim, params.scale)
    m = params.m
    powers = power_diags(basis, 2 * (m - 1))
    total = {d: v.copy() for d, v in kinetic_diags(basis).items()}
    for d, v in powers[2 * (m - 1)].items():
        total.setdefault(d, np.zeros(dim))
        total[d] += v
    base = densify_diags(total, dim)
    pos = densify_diags(powers[m - 2], dim)
    return base, pos


def _scan_values(params: ModelParams, alphas: np.ndarray, dim: int,
                 n_track: int) -> np.ndarray:
    base, pos = _base_and_coupling(params, dim)
    s = params.sign
    out = np.empty((alphas.size, n_track))
    for i, a in enumerate(alphas):
        arr = base + s * (params.m - 1) * a * pos
        out[i] = np.linalg.eigvalsh(arr)[:n_track]
    return out


def _bisect_curve(base: np.ndarray, pos: np.ndarray, sign: int, m: int,
                  k: int, lo: float, hi: float, tol: float) -> float:
    def value(a: float) -> float:
        arr = base + sign * (m - 1) * a * pos
        return float(np.linalg.eigvalsh(arr)[k])

    flo, fhi = value(lo), value(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise CrossingAmbiguityError("lost bracket during bisection")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = value(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def sigma_set(m: int, branch: str, window: tuple[float, float],
              tol: float = 1e-8, step: float = 0.05, scale: float | None = None,
              _refine_depth: int = 0) -> SigmaSet:
    """All threshold constants in ``window`` for the given branch.

    Scans the window, tracks each sorted eigenvalue curve of the eps = 0
    assembly, brackets every sign change and bisects it to ``tol``.  Curves
    are simple, so sorted-index tracking is sound; if two tracked curves
    come too close at a scan point the step is refined and the scan retried.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("window must be a finite nonempty interval")
    if tol <= 0:
        raise ValueError("tol must be positive")
    params = ModelParams(m, branch, 0.0, (), scale)
    scale = params.scale

    # size the tracked block from the window ends and middle, then converge
    probe_alphas = (lo, 0.5 * (lo + hi), hi)
    n_track = 4
    for a in probe_alphas:
        vals = _lowest_values(params.with_alpha(a), 0.0, DIM_START, 24)
        n_track = max(n_track, int(np.sum(vals < 1.0)) + 3)
    tol_eig = max(min(0.1 * tol, 1e-9), 1e-10)
    dim = max(converged_dim(params.with_alpha(a), 0.0, n_track, tol_eig)
              for a in probe_alphas)

    n_steps = max(2, int(math.ceil((hi - lo) / step)))
    alphas = np.linspace(lo, hi, n_steps + 1)
    curves = _scan_values(params, alphas, dim, n_track)

    # tracking ambiguity: adjacent sorted curves indistinguishable at a node
    gaps = np.diff(curves, axis=1)
    if np.any(gaps < 10.0 * tol):
        if _refine_depth >= 3:
            raise CrossingAmbiguityError(
                "eigenvalue curves remain closer than the tolerance after refinement")
        return sigma_set(m, branch, window, tol, step / 4.0, scale, _refine_depth + 1)

    base, pos = _base_and_coupling(params, dim)
    roots: list[tuple[float, int]] = []
    for k in range(n_track - 1):  # top tracked curve is a buffer, not searched
        col = curves[:, k]
        for i in range(n_steps):
            if col[i] == 0.0:
                roots.append((float(alphas[i]), k))
            elif col[i] * col[i + 1] < 0:
                r = _bisect_curve(base, pos, params.sign, m, k,
                                  float(alphas[i]), float(alphas[i + 1]), tol)
                roots.append((r, k))
        if col[-1] == 0.0:
            roots.append((float(alphas[-1]), k))

    roots.sort()
    merged: list[tuple[float, int]] = []
    for r, k in roots:
        if merged and abs(r - merged[-1][0]) <= 10.0 * tol:
            continue
        merged.append((r, k))
    return SigmaSet(m, branch, tuple(r for r, _ in merged), (lo, hi), tol,
                    BasisSpec(dim, scale), tuple(k for _, k in merged))


# ---------------------------------------------------------------------------
# small eigenvalue and its eps sweep


def auto_theta(params: ModelParams, dim: int | None = None) -> float:
    """Half the second-smallest eigenvalue magnitude of the eps = 0 operator."""
    if dim is None:
        dim = converged_dim(params, 0.0, 4, 1e-9)
    vals = np.sort(np.abs(_lowest_values(params, 0.0, dim, 12)))
    return 0.5 * float(vals[1])


def small_eigenvalue(params: ModelParams, eps: float,
                     cfg: SmallEigenConfig | None = None,
                     tol: float = 1e-10) -> float:
    """The unique eigenvalue of the eps-operator inside ``[-theta, theta]``.

    Raises :class:`WindowCountError` when the window holds zero or several
    eigenvalues (theta too large, or eps outside the tracking regime).
    """
    cfg = cfg or SmallEigenConfig()
    cap = auto_theta(params)  # half the spectral gap of the eps = 0 operator
    theta = cfg.theta if cfg.theta is not None else cap
    if theta > cap * (1 + 1e-12):
        raise WindowCountError(
            f"theta {theta:g} exceeds half the spectral gap "
            f"{2 * cap:g} of the eps=0 operator")
    n_inspect = 12
    dim = converged_dim(params, eps, n_inspect, tol)
    vals = _lowest_values(params, eps, dim, n_inspect)
    # deep threshold constants sit under many negative eigenvalues; widen
    # the inspected block until it covers the whole window
    while vals[-1] < theta and n_inspect < dim:
        n_inspect = min(2 * n_inspect, dim)
        vals = _lowest_values(params, eps, dim, n_inspect)
    inside = vals[np.abs(vals) <= theta]
    if inside.size != 1:
        raise WindowCountError(
            f"{inside.size} eigenvalues inside [-{theta:g}, {theta:g}] at eps={eps:g}")
    return float(inside[0])


@dataclass(frozen=True)
class SweepFit:
    """Least-squares fit of the small eigenvalue against powers of eps."""

    coefficients: tuple[float, ...]
    residual: float
    eps_grid: tuple[float, ...]
    values: tuple[float, ...]


def sweep_fit(params: ModelParams, cfg: SmallEigenConfig | None = None) -> SweepFit:
    """Fit the measured small eigenvalue to a polynomial in eps.

    Needs at least ``2 * (fit_order + 1)`` grid points.  Orders beyond 3-4
    are numerically ill-posed on dyadic grids; the fit reports its residual
    so callers can judge.
    """
    cfg = cfg or SmallEigenConfig()
    if len(cfg.eps_grid) < 2 * (cfg.fit_order + 1):
        raise ValueError(
            f"eps grid has {len(cfg.eps_grid)} points; "
            f"need at least {2 * (cfg.fit_order + 1)} for order {cfg.fit_order}")
    values = [small_eigenvalue(params, e, cfg) for e in cfg.eps_grid]
    eps = np.asarray(cfg.eps_grid, dtype=float)
    design = np.vander(eps, cfg.fit_order + 1, increasing=True)
    rank = np.linalg.matrix_rank(design)
    if rank < cfg.fit_order + 1:
        raise RankDeficientError(
            f"design matrix rank {rank} below {cfg.fit_order + 1}")
    coeffs, res, *_ = np.linalg.lstsq(design, np.asarray(values), rcond=None)
    resid = float(np.sqrt(res[0])) if res.size else 0.0
    return SweepFit(tuple(float(c) for c in coeffs), resid,
                    tuple(float(e) for e in eps), tuple(float(v) for v in values))
