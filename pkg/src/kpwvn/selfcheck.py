"""Invariant suite behind ``kpwvn selfcheck``."""

from __future__ import annotations

import math

import numpy as np

from .bands import EnergyKind, band_structure, classify_k, lyapunov
from .decomposition import decompose, table_beta
from .lattice import ModelParams, PerturbationKind, realize_lattice
from .transfer import boundary_vector, determinant_telescoping, propagate, recurrence_residual, wronskian_drift
from .weyl import section_spectrum

STEPS = 10_000


def _check(name: str, value: float, tol: float) -> dict:
    return {"check": name, "value": float(value), "tolerance": tol, "passed": bool(value < tol)}


def interior_points(structure, params: ModelParams, per_band: int = 2) -> list:
    """Band-interior wavenumbers away from the critical points."""
    out = []
    for lo, hi in structure.bands:
        for t in np.linspace(0.2, 0.8, per_band):
            k = lo + t * (hi - lo)
            if classify_k(k, params.d, params.alpha0, params.omega, 1e-3).kind is EnergyKind.BAND_INTERIOR:
                out.append(float(k))
    return out


def interlacing_violation(outer: np.ndarray, inner: np.ndarray) -> float:
    outer, inner = np.sort(outer), np.sort(inner)
    return float(max(0.0, np.max(outer[:-1] - inner), np.max(inner - outer[1:])))


def run_suite(params: ModelParams, kind, k_max: float, steps: int = STEPS) -> list:
    kind = PerturbationKind.parse(kind)
    p = params
    bs = band_structure(p.d, p.alpha0, p.omega, k_max)
    checks = []

    edge_err = max((abs(abs(lyapunov(e.k, p.d, p.alpha0)) - 1) for e in bs.edges), default=0.0)
    checks.append(_check("band edges |L -+ 1|", edge_err, 1e-10))
    cw = math.cos(p.omega)
    crit_err = max((abs(abs(lyapunov(c.k, p.d, p.alpha0)) - cw) for c in bs.criticals), default=0.0)
    checks.append(_check("critical points |L -+ cos w|", crit_err, 1e-10))

    lat = realize_lattice(p, kind, steps + 1)
    drift = tele = resid = 0.0
    for k in interior_points(bs, p):
        a = propagate(k, lat, boundary_vector(0.0, k, lat), steps)
        b = propagate(k, lat, boundary_vector(math.pi / 2, k, lat), steps)
        drift = max(drift, wronskian_drift(a, b, lat))
        tele = max(tele, determinant_telescoping(k, lat, steps - 1))
        resid = max(resid, recurrence_residual(a, lat))
    checks.append(_check("Wronskian relative drift", drift, 1e-8))
    checks.append(_check("determinant telescoping", tele, 1e-10))
    checks.append(_check("recurrence residual", resid, 1e-10))

    if kind is not PerturbationKind.NONE:
        err = 0.0
        for c in bs.criticals:
            sign = 1 if c.tag.value == "PlusCos" else -1
            _, beta, _ = decompose(c.k, p, kind).relevant(sign)
            err = max(err, abs(beta - table_beta(c.k, p, kind)))
        checks.append(_check("beta from z against closed form", err, 1e-12))

    if bs.gaps:
        lo, hi = bs.gaps[-1] if bs.gaps[-1][1] < k_max else bs.gaps[0]
        k = 0.5 * (lo + hi)
        sec_lat = realize_lattice(p, kind, 62)
        viol = interlacing_violation(section_spectrum(k, p.kappa, sec_lat, 61),
                                     section_spectrum(k, p.kappa, sec_lat, 60))
        checks.append(_check("section eigenvalue interlacing", viol, 1e-9))
    return checks
