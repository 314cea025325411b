"""Grid reenactment of the nonsolvability mechanism.

From a perturbation series whose orders vanish through A, approximate null
profiles are synthesized per frequency tau, superposed over a dyadic band
[lam/4, 4*lam] into a wave packet on an (x, t) grid, localized by a scaled
cutoff, and fed into the solvability inequality

    |<g, h>|  <=  const * ||h||_CB * ||L g||_CB

whose two sides are measured as the packet frequency grows.  The packet and
its image under the operator are evaluated mode by mode: time derivatives
act as exact frequency factors and the x-side action comes from the ladder
algebra of the basis, so the measured operator image is limited only by the
series residuals and the cutoff cross terms, not by grid differencing.

The grid differencing operator ``apply_L`` is provided for cross-validation
against the mode-exact route and for applying the operator to arbitrary
grid functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (BoundaryError, ConstructionError, ResolutionError)
from .hermite import BasisSpec, basis_values, derivative_coefficients
from .perturbation import PerturbSeries, lambda_series, _beta_matrices
from .spectrum import ModelParams, assemble

__all__ = ["WitnessConfig", "GridFn2D", "WitnessPoint", "PacketFields",
           "build_profile", "build_G", "apply_L", "hormander_ratio",
           "packet_fields", "taylor_coefficient_values", "tau_symbol_values",
           "write_grid_csv"]

RESOLUTION_FACTOR = 0.1


# ---------------------------------------------------------------------------
# smooth cutoffs


def _transition(w):
    """C-infinity step: 0 for w <= 0, 1 for w >= 1."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    out[w >= 1.0] = 1.0
    mid = (w > 0.0) & (w < 1.0)
    if np.any(mid):
        wm = w[mid]
        a = np.exp(-1.0 / wm)
        b = np.exp(-1.0 / (1.0 - wm))
        out[mid] = a / (a + b)
    return out


def _transition_derivs(w):
    """(S, S', S'') of the smooth step, elementwise."""
    w = np.asarray(w, dtype=float)
    s = _transition(w)
    s1 = np.zeros_like(w)
    s2 = np.zeros_like(w)
    mid = (w > 0.0) & (w < 1.0)
    if np.any(mid):
        wm = w[mid]
        sig = np.exp(-1.0 / wm)
        sig_c = np.exp(-1.0 / (1.0 - wm))
        d = sig + sig_c
        # sigma'(w) = sigma / w^2; the complementary factor flips sign
        sig1 = sig / wm ** 2
        sigc1 = -sig_c / (1.0 - wm) ** 2
        sig2 = sig * (1.0 / wm ** 4 - 2.0 / wm ** 3)
        sigc2 = sig_c * (1.0 / (1.0 - wm) ** 4 - 2.0 / (1.0 - wm) ** 3)
        d1 = sig1 + sigc1
        d2 = sig2 + sigc2
        s1[mid] = (sig1 * d - sig * d1) / d ** 2
        s2[mid] = (sig2 * d - sig * d2) / d ** 2 - 2.0 * d1 * (sig1 * d - sig * d1) / d ** 3
    return s, s1, s2


def band_bump(s):
    """Smooth bump supported on (1/4, 4), identically 1 on [1/2, 2]."""
    s = np.asarray(s, dtype=float)
    return _transition((s - 0.25) * 4.0) * _transition((4.0 - s) / 2.0)


@lru_cache(maxsize=None)
def _reference_bump(n: int = 201, max_order: int = 4):
    """Normalized 2-D product bump on [-1, 1]^2 with its derivative maxima.

    Returns (integral-normalized max orders dict, grid integral).  The bump
    integrates to exactly 1 on its own reference grid by construction.
    """
    u = np.linspace(-1.0, 1.0, n)
    du = u[1] - u[0]
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        q = np.where(np.abs(u) < 1.0, np.exp(-1.0 / np.maximum(1.0 - u * u, 1e-300)), 0.0)
    h = np.outer(q, q)
    h = h / (h.sum() * du * du)
    maxima = {}
    layer = {(0, 0): h}
    maxima[0] = float(np.abs(h).max())
    for order in range(1, max_order + 1):
        new = {}
        for (bx, bt), arr in layer.items():
            new[(bx + 1, bt)] = np.gradient(arr, du, axis=0)
            new[(bx, bt + 1)] = np.gradient(arr, du, axis=1)
        layer = new
        maxima[order] = max(float(np.abs(a).max()) for a in layer.values())
    return maxima


def _cb_norm(values: np.ndarray, dx: float, dt: float, order: int) -> float:
    """Max over the grid of all mixed difference-quotient derivatives up to
    the given total order."""
    out = float(np.abs(values).max())
    layer = {(0, 0): values}
    for _ in range(order):
        new = {}
        for (bx, bt), arr in layer.items():
            new[(bx + 1, bt)] = np.gradient(arr, dx, axis=0)
            new[(bx, bt + 1)] = np.gradient(arr, dt, axis=1)
        layer = new
        out = max(out, max(float(np.abs(a).max()) for a in layer.values()))
    return out


# ---------------------------------------------------------------------------
# configuration and grid values


@dataclass(frozen=True)
class WitnessConfig:
    """Grids, truncation order, and cutoff geometry for the packet runs.

    The x grid must resolve the lam_max^(1/m) oscillation scale and the t
    grid the lam_max scale; the factory enforces step <= 0.1 times those
    scales.  The cutoff is radial in the zoom coordinates
    (lam^(1/(2m)) x, lam^(1/2) t): identically one inside ``zeta_inner``,
    vanishing outside ``zeta_outer``.
    """

    m: int
    lambda_list: tuple[float, ...]
    A: int = 8
    B: int = 2
    x_extent: float = 0.0
    x_step: float = 0.0
    t_extent: float = 0.0
    t_step: float = 0.0
    zeta_inner: float = 2.0
    zeta_outer: float = 4.0

    def __post_init__(self):
        if self.m < 2 or self.A < 0 or self.B < 0:
            raise ValueError("bad m, A, or B")
        if not self.lambda_list or any(l <= 0 for l in self.lambda_list):
            raise ValueError("lambda list must be positive")
        if not 0 < self.zeta_inner < self.zeta_outer:
            raise ValueError("cutoff radii must satisfy 0 < inner < outer")
        lam_max = max(self.lambda_list)
        if self.x_step > RESOLUTION_FACTOR * lam_max ** (-1.0 / self.m) * (1 + 1e-9):
            raise ResolutionError(
                f"x step {self.x_step:g} too coarse for lam_max {lam_max:g}")
        if self.t_step > RESOLUTION_FACTOR / lam_max * (1 + 1e-9):
            raise ResolutionError(
                f"t step {self.t_step:g} too coarse for lam_max {lam_max:g}")

    @classmethod
    def for_lambdas(cls, m: int, lambdas, A: int = 8, B: int = 2,
                    zeta_inner: float = 2.0, zeta_outer: float = 4.0,
                    margin: float = 1.3) -> "WitnessConfig":
        lam_min, lam_max = min(lambdas), max(lambdas)
        x_ext = margin * zeta_outer * lam_min ** (-1.0 / (2.0 * m))
        t_ext = margin * zeta_outer * lam_min ** (-0.5)
        return cls(m, tuple(float(l) for l in lambdas), A, B,
                   x_extent=x_ext, x_step=RESOLUTION_FACTOR * lam_max ** (-1.0 / m),
                   t_extent=t_ext, t_step=RESOLUTION_FACTOR / lam_max,
                   zeta_inner=zeta_inner, zeta_outer=zeta_outer)

    @property
    def x_grid(self) -> np.ndarray:
        n = int(math.ceil(2.0 * self.x_extent / self.x_step))
        return np.linspace(-self.x_extent, self.x_extent, n + 1)

    @property
    def t_grid(self) -> np.ndarray:
        n = int(math.ceil(2.0 * self.t_extent / self.t_step))
        # even count keeps the FFT dual lattice simple
        n += n % 2
        return -self.t_extent + np.arange(n) * (2.0 * self.t_extent / n)


@dataclass(frozen=True)
class GridFn2D:
    """Complex values on the tensor grid x_grid x t_grid."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    compact_support: bool = False

    def __post_init__(self):
        if self.values.shape != (self.x.size, self.t.size):
            raise ValueError("value shape does not match the grids")
        if not np.all(np.isfinite(self.values.view(float))):
            raise ValueError("non-finite grid values")


def taylor_coefficient_values(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """The coefficient a(x) = a0 + sum a_j x^j / j! on the grid (truncated)."""
    a = np.full(x.shape, params.alpha)
    for j, aj in enumerate(params.taylor, start=1):
        if aj:
            a = a + aj * x ** j / math.factorial(j)
    return a


# ---------------------------------------------------------------------------
# per-mode synthesis


def _series_for(params: ModelParams, A: int, series: PerturbSeries | None,
                warn_tol: float = 1e-6) -> PerturbSeries:
    if series is None or series.order < A:
        series = lambda_series(params, A)
    bad = [n for n in range(1, A + 1) if abs(series.lambdas[n]) > warn_tol]
    if bad:
        warnings.warn(
            f"expansion orders {bad} are not negligible; the null profile "
            "construction is only meaningful on nonsolvable instances",
            stacklevel=3)
    return series


class _ModeSynth:
    """Shared per-mode evaluation of the profile, its x derivative, and the
    operator symbol acting on it."""

    def __init__(self, params: ModelParams, series: PerturbSeries, A: int):
        self.m = params.m
        self.A = A
        basis = series.basis
        dim = basis.dim
        self.basis = BasisSpec(dim + 1, basis.scale)
        J = params.taylor_order

        coeffs = [series.psi0] + [series.phis[n - 1] for n in range(1, A + 1)]
        mat = assemble(params, 0.0, basis).entries
        betas = _beta_matrices(params, basis, max(J, 1))
        tails = []
        for n in range(0, A + J + 1):
            r = np.zeros(dim)
            if n <= A:
                r += mat @ coeffs[n]
            for j in range(1, min(J, n) + 1):
                if n - j <= A and betas[j] is not None:
                    r += betas[j] @ coeffs[n - j]
            tails.append(r)
        deriv = [derivative_coefficients(c, basis) for c in coeffs]

        def pad(v):
            return np.concatenate([v, [0.0] * (dim + 1 - v.size)])

        self.profile_c = np.column_stack([pad(c) for c in coeffs])
        self.deriv_c = np.column_stack([pad(d) for d in deriv])
        self.tail_c = np.column_stack([pad(r) for r in tails])

    def at_tau(self, tau: float, x: np.ndarray):
        """(F_tau, dF_tau/dx, A_tau F_tau) sampled on the x grid."""
        e = tau ** (-1.0 / self.m)
        zoom = tau ** (1.0 / self.m)
        vals = basis_values(self.basis, zoom * x)
        prof_rows = self.profile_c.T @ vals
        der_rows = self.deriv_c.T @ vals
        tail_rows = self.tail_c.T @ vals
        epow = e ** np.arange(self.profile_c.shape[1])
        epow_t = e ** np.arange(self.tail_c.shape[1])
        f = epow @ prof_rows
        df = zoom * (epow @ der_rows)
        sym = -(tau ** (2.0 / self.m)) * (epow_t @ tail_rows)
        return f, df, sym


def build_profile(params: ModelParams, A: int, tau: float,
                  x_grid: np.ndarray,
                  series: PerturbSeries | None = None) -> np.ndarray:
    """Approximate null profile F_tau on the x grid.

    F_tau(x) = sum_{j<=A} tau^(-j/m) phi_j(tau^(1/m) x), synthesized from the
    basis coefficients of the correctors.  Emits a warning when the series
    orders through A are not already negligible.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    series = _series_for(params, A, series)
    synth = _ModeSynth(params, series, A)
    f, _, _ = synth.at_tau(tau, np.asarray(x_grid, dtype=float))
    return f


def tau_symbol_values(params: ModelParams, A: int, tau: float,
                      x_grid: np.ndarray,
                      series: PerturbSeries | None = None) -> np.ndarray:
    """The frequency-side operator symbol applied to F_tau, on the x grid."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    series = _series_for(params, A, series)
    synth = _ModeSynth(params, series, A)
    _, _, sym = synth.at_tau(tau, np.asarray(x_grid, dtype=float))
    return sym


# ---------------------------------------------------------------------------
# wave packet


class _WavePacket:
    """Dyadic-band superposition of null profiles and its exact-mode fields."""

    def __init__(self, lam: float, cfg: WitnessConfig, params: ModelParams,
                 series: PerturbSeries, eta=None):
        self.lam = lam
        self.cfg = cfg
        self.x = cfg.x_grid
        self.t = cfg.t_grid
        n_t = self.t.size
        dt = self.t[1] - self.t[0]
        d_tau = 2.0 * math.pi / (n_t * dt)
        q_lo = int(math.floor(0.25 * lam / d_tau)) + 1
        q_hi = int(math.ceil(4.0 * lam / d_tau)) - 1
        if q_hi - q_lo < 8:
            raise ResolutionError("fewer than 8 frequency nodes across the band")
        if q_hi >= n_t:
            raise ResolutionError("frequency band does not fit the time grid dual")
        self.q = np.arange(q_lo, q_hi + 1)
        self.taus = self.q * d_tau
        eta_fn = band_bump if eta is None else eta
        self.weights = d_tau * np.asarray(eta_fn(self.taus / lam), dtype=float)
        self.synth = _ModeSynth(params, series, cfg.A)

        n_x = self.x.size
        nq = self.taus.size
        self.F = np.zeros((nq, n_x))
        self.DF = np.zeros((nq, n_x))
        self.SYM = np.zeros((nq, n_x))
        for i, tau in enumerate(self.taus):
            f, df, sym = self.synth.at_tau(float(tau), self.x)
            self.F[i] = f
            self.DF[i] = df
            self.SYM[i] = sym

    def _field(self, rows: np.ndarray, tau_factor: np.ndarray | None = None) -> np.ndarray:
        n_t = self.t.size
        spec = np.zeros((self.x.size, n_t), dtype=complex)
        amps = self.weights * np.exp(-1j * self.t[0] * self.taus)
        if tau_factor is not None:
            amps = amps * tau_factor
        spec[:, self.q] = rows.T * amps
        return np.fft.ifft(spec, axis=1) * n_t

    def field_G(self) -> np.ndarray:
        return self._field(self.F)

    def field_Gx(self) -> np.ndarray:
        return self._field(self.DF)

    def field_Gt(self) -> np.ndarray:
        return self._field(self.F, tau_factor=1j * self.taus)

    def field_LG(self) -> np.ndarray:
        return self._field(self.SYM)


def build_G(lam: float, cfg: WitnessConfig, params: ModelParams,
            series: PerturbSeries | None = None, eta=None) -> GridFn2D:
    """Superpose the null profiles over the dyadic band into a grid packet.

    The frequency integral runs over the dual lattice of the time grid, so
    the time dependence is synthesized exactly by an FFT.
    """
    series = _series_for(params, cfg.A, series)
    packet = _WavePacket(lam, cfg, params, series, eta=eta)
    return GridFn2D(packet.x, packet.t, packet.field_G())


# ---------------------------------------------------------------------------
# grid operator


def apply_L(f: GridFn2D, m: int, a_values: np.ndarray) -> GridFn2D:
    """Apply the planar operator to a grid function.

    Fourth-order centered differences in x, so the support must stay away
    from the x boundary (checked).  Time derivatives are spectral over the
    periodic extension of the window, exact for data that is band-limited
    on the grid dual or vanishes near the time edges.
    """
    vals = f.values
    amax = float(np.abs(vals).max())
    if amax == 0.0:
        return GridFn2D(f.x, f.t, vals.copy(), f.compact_support)
    edge = max(float(np.abs(vals[:2]).max()), float(np.abs(vals[-2:]).max()))
    if edge > 1e-8 * amax:
        raise BoundaryError("support reaches the x-grid boundary")
    dx = f.x[1] - f.x[0]
    dt = f.t[1] - f.t[0]

    d2x = np.zeros_like(vals)
    d2x[2:-2] = (-vals[:-4] + 16 * vals[1:-3] - 30 * vals[2:-2]
                 + 16 * vals[3:-1] - vals[4:]) / (12.0 * dx * dx)

    omega = 2.0 * np.pi * np.fft.fftfreq(f.t.size, d=dt)
    ft = np.fft.fft(vals, axis=1)
    d1t = np.fft.ifft(ft * (1j * omega), axis=1)
    d2t = np.fft.ifft(ft * -(omega ** 2), axis=1)

    x = f.x[:, None]
    weight2 = x ** (2 * (m - 1))
    weight1 = (m - 1) * x ** (m - 2) if m > 2 else (m - 1) * np.ones_like(x)
    out = d2x + weight2 * d2t + 1j * weight1 * np.asarray(a_values)[:, None] * d1t
    return GridFn2D(f.x, f.t, out, f.compact_support)


# ---------------------------------------------------------------------------
# the inequality ratio


def write_grid_csv(fields: "PacketFields", path, which: str = "g") -> None:
    """Dump a packet field as a CSV matrix for external plotting.

    First row holds the t grid (first cell blank), first column the x grid;
    body cells are ``re+imj`` complex literals.
    """
    arr = {"g": fields.g, "G": fields.G, "Lg": fields.Lg}[which]
    with open(path, "w") as fh:
        fh.write("," + ",".join(f"{t:.9g}" for t in fields.t) + "\n")
        for xi, row in zip(fields.x, arr):
            cells = ",".join(f"{v.real:.9g}{v.imag:+.9g}j" for v in row)
            fh.write(f"{xi:.9g}," + cells + "\n")


@dataclass(frozen=True)
class WitnessPoint:
    """Measured pieces of the solvability inequality at one packet frequency."""

    lam: float
    ratio: float
    numerator: float
    h_norm: float
    lg_norm: float
    lg_sup: float
    g_sup: float
    g_at_z: float
    z: tuple[float, float]
    support_radius_x: float
    predicted_radius_x: float


def _zeta_fields(cfg: WitnessConfig, lam: float, m: int):
    sx = lam ** (1.0 / (2.0 * m))
    st = lam ** 0.5
    u = sx * cfg.x_grid[:, None]
    v = st * cfg.t_grid[None, :]
    r = np.hypot(u, v)
    w = (r - cfg.zeta_inner) / (cfg.zeta_outer - cfg.zeta_inner)
    s, s1, s2 = _transition_derivs(w)
    span = cfg.zeta_outer - cfg.zeta_inner
    z = 1.0 - s
    zr = -s1 / span
    zrr = -s2 / span ** 2
    safe_r = np.where(r > 0, r, 1.0)
    ux, vt = u / safe_r, v / safe_r
    z_x = sx * zr * ux
    z_t = st * zr * vt
    z_xx = sx ** 2 * (zrr * ux ** 2 + zr * vt ** 2 / safe_r)
    z_tt = st ** 2 * (zrr * vt ** 2 + zr * ux ** 2 / safe_r)
    return z, z_x, z_t, z_xx, z_tt


@dataclass(frozen=True)
class PacketFields:
    """Assembled packet, its localization, and the operator image, all
    evaluated by the mode-exact route."""

    x: np.ndarray
    t: np.ndarray
    G: np.ndarray
    g: np.ndarray
    Lg: np.ndarray
    zeta: np.ndarray


def packet_fields(lam: float, cfg: WitnessConfig, params: ModelParams,
                  series: PerturbSeries | None = None) -> PacketFields:
    """Assemble the localized packet and its operator image.

    The operator acts mode by mode (time derivatives are exact frequency
    factors, the x action comes from the basis ladder algebra); the cutoff
    cross terms use the closed-form cutoff derivatives.
    """
    series = _series_for(params, cfg.A, series)
    packet = _WavePacket(lam, cfg, params, series)
    G = packet.field_G()
    Gx = packet.field_Gx()
    Gt = packet.field_Gt()
    LG = packet.field_LG()

    z, z_x, z_t, z_xx, z_tt = _zeta_fields(cfg, lam, params.m)
    x = packet.x[:, None]
    m = params.m
    weight2 = x ** (2 * (m - 1))
    weight1 = (m - 1) * x ** (m - 2) if m > 2 else (m - 1) * np.ones_like(x)
    a_vals = taylor_coefficient_values(params, packet.x)[:, None]

    g = G * z
    Lg = (z * LG + 2.0 * Gx * z_x + G * z_xx
          + weight2 * (2.0 * Gt * z_t + G * z_tt)
          + 1j * weight1 * a_vals * G * z_t)
    return PacketFields(packet.x, packet.t, G, g, Lg, z)


def hormander_ratio(lam: float, cfg: WitnessConfig, params: ModelParams,
                    series: PerturbSeries | None = None) -> WitnessPoint:
    """Measure both sides of the solvability inequality at one frequency.

    The packet is localized by the scaled cutoff; the bump pairing side is
    evaluated in the bump's own zoom frame (its scale lam^-4 sits far below
    any grid), contributing the exact factors lam^-8 to the pairing and
    lam^(4 order) to the bump norms.  The returned ratio is

        |<g, h>| / (||h||_CB * ||L g||_CB).
    """
    series = _series_for(params, cfg.A, series)
    fields = packet_fields(lam, cfg, params, series)
    G, g, Lg = fields.G, fields.g, fields.Lg

    # maximizer of |G| over the inner region where the cutoff is exactly 1
    m = params.m
    sx = lam ** (1.0 / (2.0 * m))
    st = lam ** 0.5
    r = np.hypot(sx * fields.x[:, None], st * fields.t[None, :])
    inner = r <= cfg.zeta_inner
    absG = np.where(inner, np.abs(G), 0.0)
    ix, it = np.unravel_index(int(np.argmax(absG)), absG.shape)
    g_at_z = float(np.abs(g[ix, it]))
    if g_at_z < 1.0:
        raise ConstructionError(
            f"packet peak {g_at_z:.3g} below the guaranteed unit height")

    bump_maxima = _reference_bump()
    h_norm = max(lam ** (4.0 * b) * bump_maxima[b] for b in range(cfg.B + 1))
    numerator = lam ** (-8.0) * g_at_z  # bump integrates to one in its frame

    dx = fields.x[1] - fields.x[0]
    dt = fields.t[1] - fields.t[0]
    lg_norm = _cb_norm(Lg, dx, dt, cfg.B)
    lg_sup = float(np.abs(Lg).max())

    support = np.abs(g) > 1e-8 * float(np.abs(g).max())
    sup_x = float(np.abs(fields.x[np.any(support, axis=1)]).max()) if support.any() else 0.0
    predicted = cfg.zeta_outer * lam ** (-1.0 / (2.0 * m))

    return WitnessPoint(
        lam=lam,
        ratio=numerator / (h_norm * lg_norm),
        numerator=numerator,
        h_norm=h_norm,
        lg_norm=lg_norm,
        lg_sup=lg_sup,
        g_sup=float(np.abs(G).max()),
        g_at_z=g_at_z,
        z=(float(fields.x[ix]), float(fields.t[it])),
        support_radius_x=sup_x,
        predicted_radius_x=predicted,
    )
