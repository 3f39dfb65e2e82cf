"""Finite sections of the Weyl-function Jacobi matrix and gap scans.

M(k) is tridiagonal with diagonal b_n(k) and off-diagonal a_n(k) = -k/s_n(k);
B is diag(-alpha_n). A solution of the lattice equation with the kappa
boundary condition is a null vector of B - M(k^2). Whether 0 lies in the
essential spectrum of B - M can only be probed heuristically with finite
sections; nothing here certifies it.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import NumericalError, OutOfRange, SingularSetHit, ValidationError
from .lattice import LatticeRealization, ModelParams, PerturbationKind, realize_lattice

SINGULAR_TOL = 1e-12
CANDIDATE_TOL = 1e-6
LOCALIZED_TAIL = 1e-3


@dataclass(frozen=True)
class JacobiSection:
    N: int
    diag: np.ndarray
    offdiag: np.ndarray
    k: float
    kappa: float

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def _sc(k: float, lat: LatticeRealization, count: int):
    gaps = np.diff(lat.x_full[: count + 1])
    return np.sin(k * gaps), np.cos(k * gaps)


def boundary_denominator(k: float, kappa: float, lat: LatticeRealization) -> float:
    x1 = lat.x[0]
    return math.sin(k * x1) * math.cos(kappa) + k * math.cos(k * x1) * math.sin(kappa)


def weyl_section(k: float, kappa: float, lat: LatticeRealization, N: int) -> JacobiSection:
    """Entries b_1..b_N and a_1..a_{N-1}; needs x_1..x_{N+1}."""
    if N < 1:
        raise ValidationError("section size must be >= 1")
    if lat.n_max < N + 1:
        raise OutOfRange(f"section of size {N} needs {N + 1} lattice points, have {lat.n_max}")
    if not k > 0:
        raise ValidationError("k must be positive")
    s, c = _sc(k, lat, N + 1)  # s_0 .. s_N
    bad = np.flatnonzero(np.abs(s) <= SINGULAR_TOL)
    if bad.size:
        raise SingularSetHit(f"s_{int(bad[0])}", float(abs(s[bad[0]])))
    den = s[0] * math.cos(kappa) + k * c[0] * math.sin(kappa)
    if abs(den) <= SINGULAR_TOL:
        raise SingularSetHit("s_0 cos(kappa) + k c_0 sin(kappa)", abs(den))
    cot = c / s
    diag = k * (cot[1:] + cot[:-1])
    diag[0] = k * (c[0] * math.cos(kappa) - k * s[0] * math.sin(kappa)) / den + k * cot[1]
    off = -k / s[1:N]
    return JacobiSection(N, diag, off, float(k), float(kappa))


def b_operator_section(alpha, N: int) -> np.ndarray:
    """Diagonal of B: -alpha_1..-alpha_N."""
    alpha = np.asarray(alpha, dtype=float)
    if N < 1:
        raise ValidationError("section size must be >= 1")
    if N > len(alpha):
        raise OutOfRange(f"only {len(alpha)} strengths available")
    return -alpha[:N]


def bm_section(k: float, kappa: float, lat: LatticeRealization, N: int):
    """(diag, offdiag) of the section of B - M(k^2)."""
    sec = weyl_section(k, kappa, lat, N)
    return b_operator_section(lat.alpha, N) - sec.diag, -sec.offdiag


def section_spectrum(k: float, kappa: float, lat: LatticeRealization, N: int) -> np.ndarray:
    d, e = bm_section(k, kappa, lat, N)
    return eigh_tridiagonal(d, e, eigvals_only=True)


def min_abs_eigen(k: float, kappa: float, lat: LatticeRealization, N: int):
    """Smallest |eigenvalue| of the B - M section and the tail weight of its eigenvector.

    Tail weight is the share of |v|^2 on the last quarter of the section.
    """
    d, e = bm_section(k, kappa, lat, N)
    w = eigh_tridiagonal(d, e, eigvals_only=True)
    i = int(np.argmin(np.abs(w)))
    _, v = eigh_tridiagonal(d, e, select="i", select_range=(i, i))
    v = v[:, 0]
    tail = float(np.sum(v[-max(1, N // 4):] ** 2) / np.sum(v ** 2))
    return float(abs(w[i])), tail


def interlaces(outer: np.ndarray, inner: np.ndarray, tol: float = 1e-9) -> bool:
    """Cauchy interlacing of the eigenvalues of a section (inner) inside the next one."""
    outer, inner = np.sort(outer), np.sort(inner)
    if len(outer) != len(inner) + 1:
        raise ValidationError("need sections of sizes N+1 and N")
    scale = tol * max(1.0, float(np.max(np.abs(outer))))
    return bool(np.all(outer[:-1] <= inner + scale) and np.all(inner <= outer[1:] + scale))


def singular_set_scan(k_range, kappa: float, lat: LatticeRealization, grid_step: float,
                      sites: int | None = None) -> list:
    """Points of the singular set in k_range as (k, denominator label).

    s_n = sin(k l_n) vanishes exactly at k = m pi / l_n, so those roots are
    listed in closed form; the boundary denominator is bracketed on the grid
    and refined by bisection.
    """
    lo, hi = float(k_range[0]), float(k_range[1])
    if not grid_step > 0:
        raise ValidationError("grid step must be positive")
    if not 0 <= lo < hi:
        raise ValidationError("need 0 <= k_lo < k_hi")
    sites = lat.n_max if sites is None else min(sites, lat.n_max)
    gaps = np.diff(lat.x_full[: sites + 1])
    out = []
    for n, l in enumerate(gaps):
        m0 = max(1, math.ceil(lo * l / math.pi))
        m = m0
        while m * math.pi / l <= hi:
            out.append((float(m * math.pi / l), f"s_{n}"))
            m += 1
    if math.sin(kappa) != 0:
        f = lambda k: boundary_denominator(k, kappa, lat)
        grid = np.arange(lo, hi + grid_step, grid_step)
        grid = grid[grid <= hi]
        if grid[-1] < hi:
            grid = np.append(grid, hi)
        vals = np.array([f(k) for k in grid])
        for j in range(len(grid) - 1):
            if vals[j] == 0 and grid[j] > 0:
                out.append((float(grid[j]), "boundary"))
            elif vals[j] * vals[j + 1] < 0:
                out.append((brentq(f, grid[j], grid[j + 1], xtol=1e-12), "boundary"))
    out.sort()
    return out


@dataclass
class GapScanResult:
    lambdas: np.ndarray
    section_sizes: tuple
    distances: np.ndarray  # (len(lambdas), len(sizes)), nan where dropped
    tail_weights: np.ndarray
    flagged: np.ndarray
    dropped: list = field(default_factory=list)
    threshold: float = CANDIDATE_TOL

    def relative_change(self) -> np.ndarray:
        """|d_last - d_prev| / d_last for the two largest sections."""
        a, b = self.distances[:, -2], self.distances[:, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(b - a) / b

    def to_dict(self) -> dict:
        rows = []
        for i, lam in enumerate(self.lambdas):
            rows.append({
                "lambda": float(lam),
                "distances": {str(N): _num(self.distances[i, j]) for j, N in enumerate(self.section_sizes)},
                "flagged": bool(self.flagged[i]),
            })
        return {"heuristic": True, "threshold": self.threshold, "section_sizes": list(self.section_sizes),
                "points": rows, "dropped": [{"lambda": lam, "reason": r} for lam, r in self.dropped]}

    def write_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["lambda", "N", "min_abs_eigenvalue", "flagged"])
            for i, lam in enumerate(self.lambdas):
                for j, N in enumerate(self.section_sizes):
                    w.writerow([repr(float(lam)), N, repr(float(self.distances[i, j])),
                                int(self.flagged[i])])


def _num(x: float):
    return None if not np.isfinite(x) else float(x)


def gap_scan(params: ModelParams, kind, kappa: float, lambda_grid, section_sizes=(200, 400, 800),
             threshold: float = CANDIDATE_TOL, workers: int = 1) -> GapScanResult:
    """Smallest |eigenvalue| of B - M(lambda) sections over a lambda grid.

    A point is flagged as a candidate eigenvalue when the distance is below
    threshold at every size and the eigenvector carries almost no weight at
    the far end of the section.
    """
    kind = PerturbationKind.parse(kind)
    lams = np.asarray(lambda_grid, dtype=float)
    if np.any(lams <= 0):
        raise ValidationError("lambda grid must be positive")
    sizes = tuple(int(N) for N in section_sizes)
    if not sizes or min(sizes) < 1:
        raise ValidationError("section sizes must be >= 1")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError("section sizes must be strictly increasing")
    lat = realize_lattice(params, kind, max(sizes) + 1)

    def one(lam):
        k = math.sqrt(lam)
        row, tails = [], []
        for N in sizes:
            dist, tail = min_abs_eigen(k, kappa, lat, N)
            row.append(dist)
            tails.append(tail)
        return row, tails

    dist = np.full((len(lams), len(sizes)), np.nan)
    tails = np.full_like(dist, np.nan)
    dropped = []

    def guarded(i):
        try:
            return i, one(lams[i]), None
        except NumericalError as exc:
            return i, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(guarded, range(len(lams))))
    else:
        results = [guarded(i) for i in range(len(lams))]
    for i, res, err in results:
        if err is not None:
            dropped.append((float(lams[i]), err))
            continue
        dist[i], tails[i] = res
    with np.errstate(invalid="ignore"):
        flagged = np.all(dist < threshold, axis=1) & np.all(tails < LOCALIZED_TAIL, axis=1)
    return GapScanResult(lams, sizes, dist, tails, flagged, dropped, threshold)


def section_differences(k: float, kappa: float, params: ModelParams, kind, N: int) -> dict:
    """Entrywise gap between the perturbed and unperturbed B - M sections over n in [N/2, N]."""
    kind = PerturbationKind.parse(kind)
    pert = realize_lattice(params, kind, N + 1)
    base = realize_lattice(params, PerturbationKind.NONE, N + 1)
    d1, e1 = bm_section(k, kappa, pert, N)
    d0, e0 = bm_section(k, kappa, base, N)
    h = N // 2
    return {
        "N": N,
        "diag": float(np.max(np.abs(d1[h:] - d0[h:]))),
        "offdiag": float(np.max(np.abs(e1[h - 1:] - e0[h - 1:]))) if N > 1 else 0.0,
        "offdiag_limit": float(np.max(np.abs(-e1[h - 1:] - (-k / math.sin(k * params.d))))) if N > 1 else 0.0,
    }
