"""Embedded eigenvalues at critical points.

At L(k) = +-cos(omega) the subordinate solution decays like f_n^-(beta). It is
square summable when gamma < 1, or when gamma = 1 and beta > 1/2. In that
case exactly one boundary parameter kappa makes k^2 an eigenvalue: the one
whose boundary condition the subordinate solution satisfies.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import MIN_FIT_LENGTH, PredictedAsymptotics, fit_growth, fit_growth_on, predict_k
from .bands import classify_energy, classify_k, find_critical_points
from .decomposition import table_beta
from .errors import DegenerateBoundary, NoConvergence, NotCritical, NumericalError
from .lattice import LatticeRealization, ModelParams, PerturbationKind, realize_lattice
from .transfer import (
    SolutionTrace,
    boundary_vector,
    direction_distance,
    propagate,
    propagate_backward,
    psi_at_origin,
    recurrence_residual,
)

DIRECTION_TOL = 1e-6
BOUNDARY_BETA = 0.5


def worker_count() -> int:
    """Pool size, capped by KP_SPECTRAL_THREADS when set."""
    n = os.cpu_count() or 1
    cap = os.environ.get("KP_SPECTRAL_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def default_N(gamma: float) -> int:
    return 100_000 if gamma == 1 else 10_000


def _critical_class(k: float, params: ModelParams):
    cls = classify_k(k, params.d, params.alpha0, params.omega)
    if not cls.is_critical:
        raise NotCritical(f"k = {k:.12g} is not a critical point (L = {cls.L:.12g})")
    return cls


def l2_verdict(k: float, params: ModelParams, kind) -> tuple[bool, float, str]:
    """(admissible, beta, reason) at a critical wavenumber."""
    kind = PerturbationKind.parse(kind)
    _critical_class(k, params)
    beta = table_beta(k, params, kind)
    if beta == 0:
        return False, beta, "beta = 0: subordinate solution does not decay"
    if params.gamma < 1:
        return True, beta, "gamma < 1"
    if abs(beta - BOUNDARY_BETA) < 1e-12:
        return False, beta, "inconclusive: gamma = 1 and beta = 1/2"
    if beta > BOUNDARY_BETA:
        return True, beta, "gamma = 1 and beta > 1/2"
    return False, beta, "gamma = 1 and beta < 1/2"


def l2_criterion(params: ModelParams, kind, lam: float) -> tuple[bool, float]:
    cls = classify_energy(lam, params.d, params.alpha0, params.omega)
    if not cls.is_critical:
        raise NotCritical(f"lambda = {lam:.12g} is not a critical point (L = {cls.L:.12g})")
    ok, beta, _ = l2_verdict(cls.k, params, kind)
    return ok, beta


@dataclass(frozen=True)
class SubordinateResult:
    trace: SolutionTrace
    lattice: LatticeRealization
    seed_distance: float
    N: int


def subordinate_at_k(k: float, params: ModelParams, kind, N: int | None = None,
                     lat: LatticeRealization | None = None) -> SubordinateResult:
    """Two-seed backward propagation from n = N; the trace is rebased to logmag_1 = 0.

    The trace is the backward-propagated one: running the subordinate direction
    forward again would let rounding excite the dominant solution.
    """
    kind = PerturbationKind.parse(kind)
    _critical_class(k, params)
    N = N or default_N(params.gamma)
    if lat is None or lat.n_max < N + 1:
        lat = realize_lattice(params, kind, N + 1)
    ta = propagate_backward(k, lat, [1.0, 0.0], N)
    tb = propagate_backward(k, lat, [0.0, 1.0], N)
    dist = direction_distance(ta.uhat[0], tb.uhat[0])
    if dist >= DIRECTION_TOL:
        raise NoConvergence(dist, N)
    # the seed that grew more going backwards carries less dominant admixture
    best = ta if ta.logmag[0] - ta.logmag[-1] >= tb.logmag[0] - tb.logmag[-1] else tb
    return SubordinateResult(best.rebased(1), lat, dist, N)


def subordinate_solution(lam: float, params: ModelParams, kind, N: int | None = None) -> SolutionTrace:
    cls = classify_energy(lam, params.d, params.alpha0, params.omega)
    if not cls.is_critical:
        raise NotCritical(f"lambda = {lam:.12g} is not a critical point")
    return subordinate_at_k(cls.k, params, kind, N).trace


def subordinate_fit(trace: SolutionTrace, predicted: PredictedAsymptotics):
    """Growth fit on the leading tenth of a backward trace.

    Near n = N the backward run still carries the dominant direction with
    relative weight (n/N)^(2 beta); the leading part is free of it.
    """
    M = min(trace.N, max(MIN_FIT_LENGTH, trace.N // 10))
    return fit_growth(trace.truncated(M), predicted)


def kappa_star(trace: SolutionTrace, k, lat: LatticeRealization) -> float:
    """Boundary parameter in [0, pi) with psi(0) cos(kappa) = psi'(0) sin(kappa)."""
    psi0, dpsi0, _ = psi_at_origin(trace, k, lat)
    big = psi0 if abs(psi0) >= abs(dpsi0) else dpsi0
    if abs(big) < 1e-14:
        raise DegenerateBoundary("psi(0) and psi'(0) both vanish")
    ph = big / abs(big)
    a, b = (psi0 / ph).real, (dpsi0 / ph).real
    return math.atan2(a, b) % math.pi


def kappa_from_values(psi0: float, dpsi0: float) -> float:
    if psi0 == 0 and dpsi0 == 0:
        raise DegenerateBoundary("psi(0) and psi'(0) both vanish")
    return math.atan2(psi0, dpsi0) % math.pi


def tail_partial_sums(trace: SolutionTrace, samples: int = 12):
    """log of sum_{n<=M} |xi_n|^2 at geometrically spaced M."""
    mant, lg = trace.xi()
    with np.errstate(divide="ignore"):
        terms = np.log(np.abs(mant) ** 2) + 2 * lg
    cum = np.logaddexp.accumulate(terms)
    Ms = np.unique(np.geomspace(10, trace.N, samples).astype(int))
    return [(int(M), float(cum[M - 1])) for M in Ms]


def increment_exponent(trace: SolutionTrace) -> float:
    """Fitted power of ||u_n||^2 in n over the trailing window (a proxy for |xi_n|^2)."""
    M = min(trace.N, max(MIN_FIT_LENGTH, trace.N // 10))
    fit = fit_growth_on(trace.truncated(M), "log n")
    return 2 * fit.slope


@dataclass
class EmbeddedEigenvalueReport:
    k: float
    tag: str
    beta: float
    l2_admissible: bool
    reason: str
    N: int = 0
    kappa_star: float | None = None
    kappa_star_2N: float | None = None
    residuals: dict = field(default_factory=dict)
    subordinate_slope: float | None = None
    increment_exponent: float | None = None
    tail_partial_sums: list = field(default_factory=list)
    error: str | None = None

    @property
    def lam(self) -> float:
        return self.k * self.k

    @property
    def kappa_stability(self) -> float | None:
        if self.kappa_star is None or self.kappa_star_2N is None:
            return None
        d = abs(self.kappa_star - self.kappa_star_2N) % math.pi
        return min(d, math.pi - d)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam, "k": self.k, "class": self.tag, "beta": self.beta,
            "l2_admissible": self.l2_admissible, "reason": self.reason, "N": self.N,
            "kappa_star": self.kappa_star, "kappa_star_2N": self.kappa_star_2N,
            "kappa_stability": self.kappa_stability, "residuals": self.residuals,
            "subordinate_slope": self.subordinate_slope,
            "increment_exponent": self.increment_exponent,
            "tail_partial_sums": self.tail_partial_sums, "error": self.error,
        }


def _with_doubling(k, params, kind, N, retries):
    for _ in range(retries + 1):
        try:
            return subordinate_at_k(k, params, kind, N)
        except NoConvergence:
            N *= 2
    return subordinate_at_k(k, params, kind, N)


def analyze_critical_point(k: float, params: ModelParams, kind, N: int | None = None,
                           retries: int = 2) -> EmbeddedEigenvalueReport:
    kind = PerturbationKind.parse(kind)
    cls = _critical_class(k, params)
    ok, beta, reason = l2_verdict(k, params, kind)
    rep = EmbeddedEigenvalueReport(k=k, tag=cls.kind.value, beta=beta, l2_admissible=ok, reason=reason)
    if not ok:
        return rep
    N = N or default_N(params.gamma)
    try:
        first = _with_doubling(k, params, kind, N, retries)
        second = subordinate_at_k(k, params, kind, 2 * first.N)
    except NumericalError as exc:
        rep.error = str(exc)
        return rep
    tr, lat = first.trace, first.lattice
    rep.N = first.N
    rep.kappa_star = kappa_star(tr, k, lat)
    rep.kappa_star_2N = kappa_star(second.trace, k, second.lattice)
    pred = predict_k(k, params, kind)
    rep.subordinate_slope = subordinate_fit(tr, pred).slope
    rep.increment_exponent = increment_exponent(tr) if params.gamma == 1 else None
    rep.tail_partial_sums = tail_partial_sums(tr)
    rep.residuals = {
        "direction_convergence": first.seed_distance,
        "recurrence": recurrence_residual(tr, lat),
        "kappa_stability": rep.kappa_stability,
    }
    return rep


def scan_critical_points(params: ModelParams, kind, k_max: float, N: int | None = None,
                         workers: int | None = None) -> list:
    """One report per critical point below k_max; failures are recorded, not raised."""
    kind = PerturbationKind.parse(kind)
    points = find_critical_points(params.d, params.alpha0, params.omega, k_max)

    def run(cp):
        try:
            return analyze_critical_point(cp.k, params, kind, N)
        except NumericalError as exc:
            return EmbeddedEigenvalueReport(k=cp.k, tag=("CriticalPlus" if cp.tag.value == "PlusCos"
                                                         else "CriticalMinus"),
                                            beta=table_beta(cp.k, params, kind), l2_admissible=False,
                                            reason="error", error=str(exc))

    workers = workers or worker_count()
    if workers <= 1 or len(points) <= 1:
        return [run(cp) for cp in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, points))


def dominance_scan(k: float, params: ModelParams, kind, kappa_ref: float, N: int = 10_000,
                   count: int = 100, lat: LatticeRealization | None = None):
    """Fitted growth slopes for boundary parameters on a grid that avoids kappa_ref.

    The grid is kappa_ref + (j + 1/2) pi/count mod pi, j = 0..count-1.
    """
    kind = PerturbationKind.parse(kind)
    pred: PredictedAsymptotics = predict_k(k, params, kind)
    if lat is None or lat.n_max < N + 1:
        lat = realize_lattice(params, kind, N + 1)
    out = []
    for j in range(count):
        kap = (kappa_ref + (j + 0.5) * math.pi / count) % math.pi
        tr = propagate(k, lat, boundary_vector(kap, k, lat), N)
        out.append((kap, fit_growth(tr, pred).slope))
    return out
