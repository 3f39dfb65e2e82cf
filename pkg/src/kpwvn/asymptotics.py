"""Predicted and measured growth of generalized eigenvectors.

Three regimes are distinguished by L(k):

* gap, |L| > 1: solutions grow or decay like |Phi(L)|^{+-n};
* band interior away from +-cos(omega): all solutions stay bounded;
* critical point L = +-cos(omega): power-law (gamma = 1) or stretched
  exponential (gamma < 1) growth f_n^{+-}(beta), modulated by
  cos(omega n + theta), with an extra (-1)^n when L = -cos(omega).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bands import EnergyClass, EnergyKind, classify_energy, classify_k, joukowsky_inv
from .decomposition import growth_abscissa, table_beta, table_theta
from .errors import BandEdgeUnsupported, EnvelopeMismatch, InsufficientLength
from .lattice import ModelParams, PerturbationKind
from .transfer import SolutionTrace, real_signal

MIN_FIT_LENGTH = 1000
WINDOW_START = 0.2


class Growth(str, enum.Enum):
    EXPONENTIAL = "Exponential"
    BOUNDED = "Bounded"
    CRITICAL_POWER = "CriticalPower"
    CRITICAL_STRETCHED = "CriticalStretched"


@dataclass(frozen=True)
class PredictedAsymptotics:
    energy_class: EnergyClass
    growth: Growth
    rate: float = 0.0
    beta: float = 0.0
    gamma: float = 1.0
    phase: float | None = None
    parity: bool = False

    @property
    def abscissa(self) -> str:
        if self.growth is Growth.EXPONENTIAL:
            return "n"
        if self.growth is Growth.CRITICAL_STRETCHED:
            return "n^(1-gamma)/(1-gamma)"
        return "log n"

    def expected_slope(self, subordinate: bool = False) -> float:
        sign = -1.0 if subordinate else 1.0
        if self.growth is Growth.EXPONENTIAL:
            return sign * self.rate
        if self.growth is Growth.BOUNDED:
            return 0.0
        return sign * self.beta

    def to_dict(self) -> dict:
        return {
            "class": self.energy_class.kind.value, "L": self.energy_class.L, "k": self.energy_class.k,
            "growth": self.growth.value, "rate": self.rate, "beta": self.beta, "gamma": self.gamma,
            "phase": self.phase, "parity": self.parity, "abscissa": self.abscissa,
        }


def predict_k(k: float, params: ModelParams, kind, tol: float = 1e-9) -> PredictedAsymptotics:
    kind = PerturbationKind.parse(kind)
    cls = classify_k(k, params.d, params.alpha0, params.omega, tol)
    return _predict(cls, params, kind)


def predict(lam: float, params: ModelParams, kind) -> PredictedAsymptotics:
    kind = PerturbationKind.parse(kind)
    cls = classify_energy(lam, params.d, params.alpha0, params.omega)
    return _predict(cls, params, kind)


def _predict(cls: EnergyClass, params: ModelParams, kind: PerturbationKind) -> PredictedAsymptotics:
    if cls.kind is EnergyKind.BAND_EDGE:
        raise BandEdgeUnsupported(
            f"|L(k)| = 1 at k = {cls.k:.12g}: band-edge (double root) asymptotics are not covered")
    if cls.kind is EnergyKind.GAP:
        rate = math.log(abs(joukowsky_inv(cls.L)))
        return PredictedAsymptotics(cls, Growth.EXPONENTIAL, rate=rate, gamma=params.gamma)
    if cls.kind is EnergyKind.BAND_INTERIOR:
        return PredictedAsymptotics(cls, Growth.BOUNDED, gamma=params.gamma)
    sign = 1 if cls.kind is EnergyKind.CRITICAL_PLUS else -1
    beta = table_beta(cls.k, params, kind)
    theta = table_theta(cls.k, params, kind, sign)
    growth = Growth.CRITICAL_POWER if params.gamma == 1 else Growth.CRITICAL_STRETCHED
    return PredictedAsymptotics(cls, growth, beta=beta, gamma=params.gamma,
                                phase=None if math.isnan(theta) else theta, parity=sign < 0)


@dataclass(frozen=True)
class GrowthFit:
    abscissa: str
    slope: float
    intercept: float
    residual_rms: float
    window: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def _abscissa(name: str, gamma: float, n: np.ndarray) -> np.ndarray:
    if name == "n":
        return n.astype(float)
    if name == "log n":
        return np.log(n)
    return growth_abscissa(gamma, n)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    return slope, intercept, float(np.sqrt(np.mean(resid * resid)))


def fit_window(N: int) -> tuple[int, int]:
    return int(math.ceil(WINDOW_START * N)), N


def fit_growth(trace: SolutionTrace, predicted: PredictedAsymptotics) -> GrowthFit:
    """Least-squares slope of log||u_n|| against the predicted abscissa, trailing 80%."""
    return fit_growth_on(trace, predicted.abscissa, predicted.gamma)


def fit_growth_on(trace: SolutionTrace, abscissa: str, gamma: float = 1.0) -> GrowthFit:
    if trace.N < MIN_FIT_LENGTH:
        raise InsufficientLength(f"need at least {MIN_FIT_LENGTH} points, trace has {trace.N}")
    lo, hi = fit_window(trace.N)
    n = np.arange(lo, hi + 1)
    x = _abscissa(abscissa, gamma, n)
    slope, intercept, rms = _linfit(x, trace.logmag[lo - 1:hi])
    return GrowthFit(abscissa, slope, intercept, rms, (lo, hi))


def deenveloped_signal(trace: SolutionTrace, beta: float, gamma: float = 1.0, sign: int = 1):
    """(n, xi_n / f_n^{sign}(beta)) over the fit window, as a real sequence."""
    lo, hi = fit_window(trace.N)
    n = np.arange(lo, hi + 1)
    env = sign * beta * growth_abscissa(gamma, n)
    lg = trace.logmag[lo - 1:hi] - env
    lg = lg - lg.max()  # global scale is arbitrary
    values = trace.uhat[lo - 1:hi, 1] * np.exp(lg)
    return n, real_signal(values), env


def extract_phase(trace: SolutionTrace, omega: float, parity: bool, *, beta: float | None = None,
                  gamma: float = 1.0, sign: int = 1, max_envelope_slope: float = 0.1):
    """Fit A cos(omega n + theta) to the de-enveloped second component.

    Returns (theta mod pi, relative RMS misfit). When ``beta`` is None the
    envelope exponent is estimated from the trace itself.
    """
    if trace.N < MIN_FIT_LENGTH:
        raise InsufficientLength(f"need at least {MIN_FIT_LENGTH} points, trace has {trace.N}")
    abscissa = "log n" if gamma == 1 else "n^(1-gamma)/(1-gamma)"
    if beta is None:
        beta = abs(fit_growth_on(trace, abscissa, gamma).slope)
    lo, hi = fit_window(trace.N)
    n_all = np.arange(lo, hi + 1)
    residual_env = trace.logmag[lo - 1:hi] - sign * beta * growth_abscissa(gamma, n_all)
    env_slope, _, _ = _linfit(_abscissa(abscissa, gamma, n_all), residual_env)
    if abs(env_slope) > max_envelope_slope:
        raise EnvelopeMismatch(
            f"residual envelope slope {env_slope:.3g} exceeds {max_envelope_slope}")
    n, sig, _ = deenveloped_signal(trace, beta, gamma, sign)
    if parity:
        sig = sig * np.where(n % 2 == 0, 1.0, -1.0)
    return fit_cosine(n, sig, omega)


def fit_cosine(n: np.ndarray, signal: np.ndarray, omega: float) -> tuple[float, float]:
    """theta (mod pi) and relative misfit of the best A cos(omega n + theta)."""
    basis = np.column_stack((np.cos(omega * n), np.sin(omega * n)))
    coef, *_ = np.linalg.lstsq(basis, signal, rcond=None)
    P, Q = coef
    # A cos(wn + t) = A cos t cos wn - A sin t sin wn
    theta = math.atan2(-Q, P) % math.pi
    resid = signal - basis @ coef
    amp = math.hypot(P, Q)
    misfit = float(np.sqrt(np.mean(resid * resid)) / amp) if amp > 0 else float("inf")
    return theta, misfit


def zero_crossing_spacing(n: np.ndarray, signal: np.ndarray) -> float:
    """Mean distance between sign changes, located by linear interpolation."""
    s = np.asarray(signal, dtype=float)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    if len(idx) < 2:
        return float("nan")
    t = n[idx] + s[idx] / (s[idx] - s[idx + 1])
    return float((t[-1] - t[0]) / (len(t) - 1))


def lag1_autocorrelation(signal: np.ndarray) -> float:
    s = np.asarray(signal, dtype=float)
    s = s - s.mean()
    return float(np.dot(s[:-1], s[1:]) / np.dot(s, s))


def phase_distance(a: float, b: float) -> float:
    """Distance between two phases taken mod pi."""
    d = (a - b) % math.pi
    return min(d, math.pi - d)


@dataclass(frozen=True)
class Tolerances:
    gap_rel: float = 0.01
    bounded_abs: float = 1e-3
    critical_rel: float = 0.05
    phase_abs: float = 0.1
    spacing_rel: float = 0.02


@dataclass
class Aspect:
    status: str  # "pass", "fail" or "not_applicable"
    measured: float | None = None
    expected: float | None = None
    tolerance: float | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class VerificationReport:
    predicted: PredictedAsymptotics
    aspects: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.ok for a in self.aspects.values())

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted.to_dict(),
            "passed": self.passed,
            "aspects": {name: asdict(a) for name, a in self.aspects.items()},
        }


def verify(predicted: PredictedAsymptotics, fit: GrowthFit, tolerances: Tolerances = Tolerances(), *,
           phase: float | None = None, autocorrelation: float | None = None,
           spacing: float | None = None, omega: float | None = None,
           subordinate: bool = False) -> VerificationReport:
    """Compare measurements with the prediction, aspect by aspect."""
    report = VerificationReport(predicted)
    expected = predicted.expected_slope(subordinate)
    g = predicted.growth
    if fit.abscissa != predicted.abscissa:
        report.aspects["slope"] = Aspect(
            "fail", fit.slope, expected, None,
            f"fit used abscissa {fit.abscissa!r}, prediction needs {predicted.abscissa!r}")
    else:
        if g is Growth.BOUNDED:
            tol = tolerances.bounded_abs
            err = abs(fit.slope)
        else:
            rel = tolerances.gap_rel if g is Growth.EXPONENTIAL else tolerances.critical_rel
            tol = rel * abs(expected)
            err = abs(fit.slope - expected)
        ok = err <= tol
        detail = "" if ok else f"slope {fit.slope:.6g} vs expected {expected:.6g} ({g.value})"
        report.aspects["slope"] = Aspect("pass" if ok else "fail", fit.slope, expected, tol, detail)

    critical = g in (Growth.CRITICAL_POWER, Growth.CRITICAL_STRETCHED)
    if not critical:
        report.aspects["phase"] = Aspect("not_applicable", detail="no oscillation phase off critical points")
        report.aspects["parity"] = Aspect("not_applicable")
        report.aspects["spacing"] = Aspect("not_applicable")
        return report
    if phase is None or predicted.phase is None or subordinate:
        report.aspects["phase"] = Aspect("not_applicable", detail="phase not measured")
    else:
        dist = phase_distance(phase, predicted.phase)
        report.aspects["phase"] = Aspect("pass" if dist <= tolerances.phase_abs else "fail",
                                         phase, predicted.phase, tolerances.phase_abs)
    if autocorrelation is None:
        report.aspects["parity"] = Aspect("not_applicable", detail="autocorrelation not measured")
    else:
        ok = (autocorrelation < 0) == predicted.parity
        report.aspects["parity"] = Aspect("pass" if ok else "fail", autocorrelation,
                                          -1.0 if predicted.parity else 1.0, None,
                                          "sign of lag-1 autocorrelation")
    if spacing is None or omega is None:
        report.aspects["spacing"] = Aspect("not_applicable", detail="zero crossings not measured")
    else:
        target = math.pi / omega
        tol = tolerances.spacing_rel * target
        ok = abs(spacing - target) <= tol
        report.aspects["spacing"] = Aspect("pass" if ok else "fail", spacing, target, tol,
                                           "mean zero-crossing spacing, parity factor removed")
    return report


def measure(trace: SolutionTrace, predicted: PredictedAsymptotics, omega: float,
            tolerances: Tolerances = Tolerances(), subordinate: bool = False) -> VerificationReport:
    """Fit, and at critical points also phase and parity, then verify."""
    fit = fit_growth(trace, predicted)
    phase = autocorr = spacing = None
    if predicted.growth in (Growth.CRITICAL_POWER, Growth.CRITICAL_STRETCHED) and predicted.beta > 0:
        sign = -1 if subordinate else 1
        n, sig, _ = deenveloped_signal(trace, predicted.beta, predicted.gamma, sign)
        autocorr = lag1_autocorrelation(sig)
        spacing = zero_crossing_spacing(n, sig * np.where(n % 2 == 0, 1.0, -1.0) if predicted.parity else sig)
        if not subordinate and trace.N >= 10_000:
            try:
                phase, _ = extract_phase(trace, omega, predicted.parity, beta=predicted.beta,
                                         gamma=predicted.gamma, sign=sign)
            except EnvelopeMismatch:
                phase = None
    return verify(predicted, fit, tolerances, phase=phase, autocorrelation=autocorr,
                  spacing=spacing, omega=omega, subordinate=subordinate)
