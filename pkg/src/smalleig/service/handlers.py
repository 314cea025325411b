"""Command handlers shared by the HTTP endpoints and the CLI client."""

from __future__ import annotations

import math
import time
from fractions import Fraction

from .. import __version__
from ..cache import EnvelopeCache, canonical_key
from ..errors import PreconditionError
from ..multipoly import MultiPoly
from ..oracle_m2 import (exact_c, exact_lambda_polynomials,
                         exact_lambda_series, exact_moments)
from ..perturbation import (Tolerances, decide, forced_taylor,
                            kernel_and_moments, lambda_polynomials,
                            lambda_series, moment_recurrence_residual)
from ..spectrum import (DEFAULT_EPS_GRID, ModelParams, SmallEigenConfig,
                        sigma_set, sweep_fit)
from ..witness import WitnessConfig, hormander_ratio
from .models import Envelope

__all__ = ["dispatch", "handle"]


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else x


def _level_from_a0(a0: float) -> int:
    """Exact-mode level for the quadratic case; a0 must be -(2K+1)."""
    k = (-a0 - 1.0) / 2.0
    if abs(k - round(k)) > 1e-9 or k < -1e-9:
        raise PreconditionError(
            f"exact mode needs a0 in {{-1, -3, -5, ...}}, got {a0}")
    return int(round(k))


def _require_exact_m2(req) -> None:
    if req.m != 2:
        raise PreconditionError("exact mode is only available for m = 2")


def _poly_terms(poly: MultiPoly, as_str: bool) -> list[dict]:
    out = []
    for expo in sorted(poly.terms):
        coeff = poly.terms[expo]
        out.append({"exponents": list(expo),
                    "coeff": str(Fraction(coeff)) if as_str else float(coeff)})
    return out


def _handle_sigma(req) -> dict:
    ss = sigma_set(req.m, req.branch, req.window, tol=req.tol, step=req.step,
                   scale=req.scale)
    return {
        "elements": list(ss.elements),
        "crossing_indices": list(ss.crossing_indices),
        "window": list(ss.window),
        "tol": ss.tol,
        "basis_dim": ss.basis_used.dim,
        "basis_scale": ss.basis_used.scale,
    }


def _handle_moments(req) -> dict:
    if req.exact:
        _require_exact_m2(req)
        if req.branch != "+":
            raise PreconditionError("exact mode covers the + branch")
        level = _level_from_a0(req.a0)
        mu = exact_moments(level, req.j_max)
        return {"exact": True, "level": level,
                "mu": [str(v) for v in mu]}
    _, table, basis = kernel_and_moments(req.m, req.a0, req.branch, req.j_max,
                                         scale=req.scale)
    j_top = req.j_max - (2 * req.m - 1)
    residuals = {str(j): moment_recurrence_residual(table, j)
                 for j in range(-2, j_top + 1)} if j_top >= -2 else {}
    return {
        "exact": False,
        "mu": [table.mu[j] for j in range(req.j_max + 1)],
        "recurrence_residuals": residuals,
        "basis_dim": basis.dim,
        "basis_scale": basis.scale,
    }


def _handle_lambda(req) -> dict:
    if req.exact:
        _require_exact_m2(req)
        if req.branch != "+":
            raise PreconditionError("exact mode covers the + branch")
        level = _level_from_a0(req.a0)
        taylor = ([Fraction(t) for t in req.taylor_exact]
                  if req.taylor_exact is not None
                  else [Fraction(str(t)) for t in req.taylor])
        lambdas = exact_lambda_series(level, taylor, req.order)
        cs = exact_c(level, req.order)
        return {"exact": True, "level": level,
                "lambdas": [str(v) for v in lambdas],
                "c": [str(v) for v in cs]}
    params = ModelParams(req.m, req.branch, req.a0, tuple(req.taylor), req.scale)
    series = lambda_series(params, req.order)
    return {
        "exact": False,
        "lambdas": list(series.lambdas[1:]),
        "c": [series.c[n] for n in range(1, req.order + 1)],
        "forced": {str(n): v for n, v in sorted(series.forced.items())},
        "kernel_value": series.kernel_value,
        "basis_dim": series.basis.dim,
        "basis_scale": series.basis.scale,
    }


def _handle_polys(req) -> dict:
    if req.exact:
        _require_exact_m2(req)
        if req.branch != "+":
            raise PreconditionError("exact mode covers the + branch")
        level = _level_from_a0(req.a0)
        polys = exact_lambda_polynomials(level, req.order)
        cs = exact_c(level, req.order)
        return {"exact": True, "level": level,
                "polynomials": [{"order": n, "terms": _poly_terms(p, True)}
                                for n, p in enumerate(polys, start=1)],
                "c": [str(v) for v in cs]}
    polys, cs, table = lambda_polynomials(req.m, req.a0, req.branch, req.order,
                                          scale=req.scale)
    return {
        "exact": False,
        "polynomials": [{"order": n, "terms": _poly_terms(p, False)}
                        for n, p in enumerate(polys, start=1)],
        "c": list(cs),
        "basis_dim": table.basis.dim,
    }


def _handle_forced(req) -> dict:
    tol = Tolerances(req.tol_sigma, req.tol_lambda, req.c_floor_rel)
    res = forced_taylor(req.m, req.a0, req.taylor, req.order, tol, scale=req.scale)
    return {
        "entries": [{"order": n, "value": v} for n, v in res.entries],
        "taylor": list(res.taylor),
        "obstruction_order": res.obstruction_order,
        "obstruction_value": res.obstruction_value,
    }


def _handle_decide(req) -> dict:
    tol = Tolerances(req.tol_sigma, req.tol_lambda, req.c_floor_rel)
    d = decide(req.m, req.a0, tuple(req.taylor), req.order, tol, scale=req.scale)
    return {
        "verdict": d.verdict,
        "order": d.order,
        "branch": d.branch,
        "witness_order": d.witness_order,
        "lambda_value": d.lambda_value,
        "exceptions": list(d.exceptions),
        "sigma_distance": _finite_or_none(d.sigma_distance),
        "sigma_element": d.sigma_element,
        "tolerances": {"tol_sigma": tol.tol_sigma, "tol_lambda": tol.tol_lambda,
                       "c_floor_rel": tol.c_floor_rel},
    }


def _handle_sweep(req) -> dict:
    params = ModelParams(req.m, req.branch, req.a0, tuple(req.taylor), req.scale)
    grid = tuple(req.eps_grid) if req.eps_grid else DEFAULT_EPS_GRID
    cfg = SmallEigenConfig(theta=req.theta, eps_grid=grid, fit_order=req.fit_order)
    fit = sweep_fit(params, cfg)
    return {
        "eps_grid": list(fit.eps_grid),
        "lambda_values": list(fit.values),
        "fitted": list(fit.coefficients),
        "residual": fit.residual,
    }


def _handle_witness(req) -> dict:
    params = ModelParams(req.m, "+", req.a0, tuple(req.taylor), req.scale)
    series = lambda_series(params, req.A)
    rows = []
    for lam in req.lambdas:
        cfg = WitnessConfig.for_lambdas(req.m, [lam], A=req.A, B=req.B)
        point = hormander_ratio(lam, cfg, params, series)
        rows.append({
            "lam": point.lam,
            "ratio": point.ratio,
            "numerator": point.numerator,
            "h_norm": point.h_norm,
            "lg_norm": point.lg_norm,
            "lg_sup": point.lg_sup,
            "g_sup": point.g_sup,
            "g_at_z": point.g_at_z,
            "z": list(point.z),
            "support_radius_x": point.support_radius_x,
            "predicted_radius_x": point.predicted_radius_x,
        })
    ratios = [r["ratio"] for r in rows]
    return {
        "points": rows,
        "monotone_increasing": all(b > a for a, b in zip(ratios, ratios[1:])),
        "growth_factor": (ratios[-1] / ratios[0]) if len(ratios) > 1 else None,
    }


_HANDLERS = {
    "sigma": _handle_sigma,
    "moments": _handle_moments,
    "lambda": _handle_lambda,
    "polys": _handle_polys,
    "forced": _handle_forced,
    "decide": _handle_decide,
    "sweep": _handle_sweep,
    "witness": _handle_witness,
}


def handle(command: str, req) -> dict:
    return _HANDLERS[command](req)


def dispatch(command: str, req) -> Envelope:
    """Run a command behind the envelope and the optional disk cache."""
    if command not in _HANDLERS:
        raise PreconditionError(f"unknown command {command!r}")
    inputs = req.model_dump(exclude={"cache_dir"})
    cache = EnvelopeCache(req.cache_dir, __version__) if req.cache_dir else None
    key = canonical_key(command, inputs) if cache else None
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return Envelope(**hit)
    started = time.perf_counter()
    outputs = handle(command, req)
    basis_dim = outputs.get("basis_dim")
    doublings = (int(math.log2(basis_dim / 64)) if basis_dim else None)
    envelope = Envelope(
        command=command,
        inputs=inputs,
        outputs=outputs,
        provenance={"version": __version__,
                    "basis_dim": basis_dim,
                    "convergence_doublings": doublings,
                    "wall_time_s": round(time.perf_counter() - started, 6)},
    )
    if cache is not None:
        cache.put(key, envelope.model_dump())
    return envelope
