"""Lyapunov function, band edges and critical points of the periodic lattice.

Everything here depends only on the period ``d`` and the unperturbed
strength ``alpha0``: the perturbations do not move bands or critical points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import GridTooCoarse, ValidationError

EDGE_TOL = 1e-10
CLASS_TOL = 1e-9
# residual below which a sample of L - target is treated as an exact touch
_TOUCH = 1e-13


def lyapunov(k, d: float, alpha0: float):
    """cos(kd) + alpha0 sin(kd)/(2k), continuous at k = 0."""
    k = np.asarray(k, dtype=float)
    # np.sinc(x) = sin(pi x)/(pi x), so sin(kd)/(2k) = (d/2) sinc(kd/pi)
    out = np.cos(k * d) + alpha0 * 0.5 * d * np.sinc(k * d / np.pi)
    return out if out.ndim else float(out)


def lyapunov_derivative(k, d: float, alpha0: float):
    k = np.asarray(k, dtype=float)
    kd = k * d
    small = np.abs(kd) < 1e-4
    ks = np.where(small, 1.0, k)
    # (kd cos kd - sin kd)/(2k^2), series -k d^3/6 near zero
    ratio = np.where(small, -k * d ** 3 / 6.0,
                     (kd * np.cos(kd) - np.sin(kd)) / (2.0 * ks * ks))
    out = -d * np.sin(kd) + alpha0 * ratio
    return out if out.ndim else float(out)


def joukowsky_inv(w):
    """w + sqrt(w^2 - 1) on the branch with |result| >= 1.

    On the cut (-1, 1) the boundary value from the upper half-plane is
    returned, w + i sqrt(1 - w^2).
    """
    w = np.asarray(w, dtype=complex)
    root = np.sqrt(w * w - 1.0)
    out = w + root
    flip = np.abs(out) < np.abs(w - root)
    out = np.where(flip, w - root, out)
    on_cut = (np.abs(w.imag) == 0) & (np.abs(w.real) <= 1)
    if np.any(on_cut):
        re = w.real
        out = np.where(on_cut, re + 1j * np.sqrt(np.clip(1 - re * re, 0, None)), out)
    return out if out.ndim else complex(out)


def mu_pm(l: float) -> tuple[complex, complex]:
    """Eigenvalues l +- sqrt(l^2 - 1) of [[0, 1], [-1, 2l]]."""
    l = float(l)
    if abs(l) < 1:
        r = 1j * math.sqrt(1 - l * l)
    else:
        r = complex(math.sqrt(l * l - 1))
    return complex(l) + r, complex(l) - r


class Tag(str, enum.Enum):
    PLUS_ONE = "PlusOne"
    MINUS_ONE = "MinusOne"
    PLUS_COS = "PlusCos"
    MINUS_COS = "MinusCos"


@dataclass(frozen=True)
class RootPoint:
    k: float
    tag: Tag
    degenerate: bool = False

    @property
    def energy(self) -> float:
        return self.k * self.k

    def to_dict(self) -> dict:
        out = {"k": self.k, "tag": self.tag.value}
        if self.degenerate:
            out["degenerate"] = True
        return out


@dataclass
class BandStructure:
    edges: list
    criticals: list
    bands: list
    gaps: list
    k_max: float
    degenerate: list = field(default_factory=list)
    complete: list = field(default_factory=list)

    def complete_bands(self) -> list:
        return [b for b, ok in zip(self.bands, self.complete) if ok]

    def criticals_in(self, band) -> list:
        lo, hi = band
        return [c for c in self.criticals if lo < c.k < hi]

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "edges": [e.to_dict() for e in self.edges],
            "criticals": [c.to_dict() for c in self.criticals],
            "bands": [[lo, hi] for lo, hi in self.bands],
            "complete": list(self.complete),
            "gaps": [[lo, hi] for lo, hi in self.gaps],
            "degenerate_contacts": [e.to_dict() for e in self.degenerate],
        }


def _grid(k_max: float, h: float) -> np.ndarray:
    m = max(2, int(math.ceil(k_max / h)))
    return np.linspace(0.0, k_max, m + 1)


def _extrema(grid: np.ndarray, d: float, alpha0: float) -> np.ndarray:
    dl = lyapunov_derivative(grid, d, alpha0)
    out = []
    for j in range(len(grid) - 1):
        a, b = dl[j], dl[j + 1]
        if a == 0.0 and j > 0:
            out.append(grid[j])
        elif a * b < 0:
            out.append(brentq(lyapunov_derivative, grid[j], grid[j + 1],
                              args=(d, alpha0), xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return np.asarray(out)


def _level_roots(grid, d, alpha0, target):
    """Crossings and tangential touches of L(k) = target on a monotone-piece grid."""
    v = lyapunov(grid, d, alpha0) - target
    v = np.where(np.abs(v) < _TOUCH, 0.0, v)
    crossings, touches = [], []
    n = len(grid)
    for j in range(n - 1):
        if v[j] * v[j + 1] < 0:
            k = brentq(lambda t: lyapunov(t, d, alpha0) - target, grid[j], grid[j + 1],
                       xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            crossings.append(k)
    for j in range(1, n - 1):
        if v[j] != 0.0:
            continue
        left, right = v[j - 1], v[j + 1]
        if left * right < 0:
            crossings.append(float(grid[j]))
        elif grid[j] > 0:
            touches.append(float(grid[j]))
    return sorted(crossings), sorted(touches)


def _scan(d, alpha0, k_max, targets, max_refine=16):
    if k_max <= 0:
        raise ValidationError("k_max must be positive")
    h = math.pi / (16 * d)
    for _ in range(max_refine):
        base = _grid(k_max, h)
        grid = np.unique(np.concatenate((base, _extrema(base, d, alpha0))))
        found = []
        for tag, value in targets:
            cross, touch = _level_roots(grid, d, alpha0, value)
            found += [RootPoint(k, tag) for k in cross]
            found += [RootPoint(k, tag, degenerate=True) for k in touch]
        found.sort(key=lambda r: r.k)
        ks = np.array([r.k for r in found if not r.degenerate])
        if len(ks) < 2:
            return found
        gap = float(np.min(np.diff(ks)))
        if gap >= 4 * h:
            return found
        h = min(h / 2, gap / 2)
    raise GridTooCoarse(f"roots closer than 4 grid steps persist at step {h:.3g}")


def find_band_edges(d: float, alpha0: float, k_max: float) -> list:
    """Roots of L = +1 and L = -1 in (0, k_max], tangential contacts flagged degenerate."""
    return _scan(d, alpha0, k_max, [(Tag.PLUS_ONE, 1.0), (Tag.MINUS_ONE, -1.0)])


def find_critical_points(d: float, alpha0: float, omega: float, k_max: float) -> list:
    if not 0 < omega < math.pi / 2:
        raise ValidationError("omega must lie in (0, pi/2)")
    cw = math.cos(omega)
    roots = _scan(d, alpha0, k_max, [(Tag.PLUS_COS, cw), (Tag.MINUS_COS, -cw)])
    out = []
    for r in roots:
        if r.degenerate:
            # L touches +-cos(omega) without crossing; not a band-interior level crossing
            continue
        if not abs(lyapunov(r.k, d, alpha0)) < 1:
            raise AssertionError(f"critical point {r.k} is not inside a band")
        out.append(r)
    return out


def band_structure(d: float, alpha0: float, omega: float, k_max: float) -> BandStructure:
    roots = find_band_edges(d, alpha0, k_max)
    edges = [r for r in roots if not r.degenerate]
    degenerate = [r for r in roots if r.degenerate]
    criticals = find_critical_points(d, alpha0, omega, k_max)

    # walk through the crossings, toggling between band and gap
    k_probe = min(1e-9, 0.5 * edges[0].k) if edges else 1e-9
    inside = abs(lyapunov(k_probe, d, alpha0)) <= 1
    bands, gaps, complete = [], [], []
    start, start_is_edge = 0.0, False
    for e in edges:
        if inside:
            bands.append((start, e.k))
            complete.append(start_is_edge)
        else:
            gaps.append((start, e.k))
        inside = not inside
        start, start_is_edge = e.k, True
    if start < k_max:
        if inside:
            bands.append((start, k_max))
            complete.append(False)
        else:
            gaps.append((start, k_max))
    return BandStructure(edges=edges, criticals=criticals, bands=bands, gaps=gaps,
                         k_max=k_max, degenerate=degenerate, complete=complete)


class EnergyKind(str, enum.Enum):
    GAP = "Gap"
    BAND_INTERIOR = "BandInterior"
    CRITICAL_PLUS = "CriticalPlus"
    CRITICAL_MINUS = "CriticalMinus"
    BAND_EDGE = "BandEdge"


@dataclass(frozen=True)
class EnergyClass:
    kind: EnergyKind
    L: float
    k: float

    @property
    def is_critical(self) -> bool:
        return self.kind in (EnergyKind.CRITICAL_PLUS, EnergyKind.CRITICAL_MINUS)


def classify_k(k: float, d: float, alpha0: float, omega: float, tol: float = CLASS_TOL) -> EnergyClass:
    L = lyapunov(k, d, alpha0)
    cw = math.cos(omega)
    if abs(abs(L) - 1) < tol:
        kind = EnergyKind.BAND_EDGE
    elif abs(L - cw) < tol:
        kind = EnergyKind.CRITICAL_PLUS
    elif abs(L + cw) < tol:
        kind = EnergyKind.CRITICAL_MINUS
    elif abs(L) < 1:
        kind = EnergyKind.BAND_INTERIOR
    else:
        kind = EnergyKind.GAP
    return EnergyClass(kind, float(L), float(k))


def classify_energy(lam: float, d: float, alpha0: float, omega: float) -> EnergyClass:
    if not lam > 0:
        raise ValidationError(f"energy must be positive (got {lam})")
    return classify_k(math.sqrt(lam), d, alpha0, omega)
