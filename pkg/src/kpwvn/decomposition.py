"""Oscillatory decomposition of the transfer matrices.

For both perturbed lattices and k outside pi Z / d,

    T_n(k) = [[0, 1], [-1, 2l]] + [[0, 0], [a, b]] e^{2i omega n}/n^gamma
             + [[0, 0], [conj a, conj b]] e^{-2i omega n}/n^gamma + R_n

with l = L(k) and a summable remainder R_n. The remainder is not known in
closed form; ``remainder_series`` measures it.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np

from .bands import lyapunov
from .errors import ResonantK, ValidationError
from .lattice import ModelParams, PerturbationKind, realize_lattice
from .transfer import transfer_entries

RESONANCE_TOL = 1e-12


def model_coefficients(k: float, params: ModelParams, kind) -> tuple[float, complex, complex]:
    """(l, a, b) of the decomposition for the chosen lattice."""
    kind = PerturbationKind.parse(kind)
    if not k > 0:
        raise ValidationError("k must be positive")
    d, c, om, a0 = params.d, params.c, params.omega, params.alpha0
    S, C = math.sin(k * d), math.cos(k * d)
    if abs(S) < RESONANCE_TOL:
        raise ResonantK(f"sin(kd) = {S:.3g}: k is (numerically) in pi Z / d")
    l = lyapunov(k, d, a0)
    if kind is PerturbationKind.NONE:
        return l, 0j, 0j
    if kind is PerturbationKind.AMPLITUDE:
        return l, 0j, c * S / (2j * k)
    a = -2j * k * c * (C / S) * math.sin(om) ** 2
    # c cos(kd) sin(w) [4k cos(w) cot(2kd) - 2k cot(kd) e^{-iw} + alpha0 e^{iw}],
    # with cos(kd) cot(2kd) = cos(2kd)/(2 sin(kd)) folded in so kd = pi/2 is regular
    e = cmath.exp(1j * om)
    b = c * math.sin(om) * (k * math.cos(2 * k * d) * e / S - k / (S * e) + a0 * C * e)
    return l, a, b


def z_quantities(sign: int, a: complex, b: complex, omega: float) -> tuple[complex, float, float]:
    """z (sign +1) or z_1 (sign -1) with its modulus and argument.

    z   = (a e^{-iw} + b e^{-2iw}) / (2i sin w)
    z_1 = (a e^{-iw} - b e^{-2iw}) / (2i sin w)
    """
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    e1 = cmath.exp(-1j * omega)
    z = (a * e1 + sign * b * e1 * e1) / (2j * math.sin(omega))
    return z, abs(z), cmath.phase(z)


@dataclass(frozen=True)
class OscillatoryDecomposition:
    k: float
    model: PerturbationKind
    l: float
    a: complex
    b: complex
    z: complex
    beta: float
    phi: float
    z1: complex
    beta1: float
    phi1: float

    def relevant(self, sign: int) -> tuple[complex, float, float]:
        """(z, beta, phi) for l = +cos(omega), (z1, beta1, phi1) for l = -cos(omega)."""
        if sign > 0:
            return self.z, self.beta, self.phi
        return self.z1, self.beta1, self.phi1

    def to_dict(self) -> dict:
        cx = lambda w: [w.real, w.imag]
        return {
            "k": self.k, "model": self.model.value, "l": self.l, "a": cx(self.a), "b": cx(self.b),
            "z": cx(self.z), "beta": self.beta, "phi": self.phi,
            "z1": cx(self.z1), "beta1": self.beta1, "phi1": self.phi1,
        }


def decompose(k: float, params: ModelParams, kind) -> OscillatoryDecomposition:
    kind = PerturbationKind.parse(kind)
    l, a, b = model_coefficients(k, params, kind)
    z, beta, phi = z_quantities(1, a, b, params.omega)
    z1, beta1, phi1 = z_quantities(-1, a, b, params.omega)
    return OscillatoryDecomposition(k, kind, l, a, b, z, beta, phi, z1, beta1, phi1)


def table_beta(k: float, params: ModelParams, kind) -> float:
    """Closed-form exponent: |c sin(kd)/(4k sin w)| (amplitude) or |c alpha0/2| (positional)."""
    kind = PerturbationKind.parse(kind)
    if kind is PerturbationKind.AMPLITUDE:
        return abs(params.c * math.sin(k * params.d) / (4 * k * math.sin(params.omega)))
    if kind is PerturbationKind.POSITIONAL:
        return abs(params.c * params.alpha0 / 2)
    return 0.0


def table_theta(k: float, params: ModelParams, kind, sign: int) -> float:
    """Closed-form phase at the L = sign*cos(w) critical point.

    Amplitude: (1/2) arg(-sign c sin(kd)/k); positional: (1/2) arg(i c alpha0).
    Returned in [0, pi); undefined (nan) when the argument vanishes.
    """
    kind = PerturbationKind.parse(kind)
    if kind is PerturbationKind.AMPLITUDE:
        w = -sign * params.c * math.sin(k * params.d) / k
    elif kind is PerturbationKind.POSITIONAL:
        w = 1j * params.c * params.alpha0
    else:
        return float("nan")
    if w == 0:
        return float("nan")
    return (0.5 * cmath.phase(w)) % math.pi


def phase_from_z(phi: float, omega: float) -> float:
    """Oscillation phase of xi_n implied by arg z: omega + phi/2, reduced mod pi."""
    return (omega + 0.5 * phi) % math.pi


def log_f(beta: float, gamma: float, sign: int, n) -> np.ndarray:
    """log of the comparison envelope f_n^{+-}(beta).

    gamma < 1: +-beta n^{1-gamma}/(1-gamma);  gamma = 1: +-beta log n.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValidationError("n must be >= 1")
    if beta < 0 or not 0.5 < gamma <= 1:
        raise ValidationError("need beta >= 0 and gamma in (1/2, 1]")
    return sign * beta * growth_abscissa(gamma, n)


def growth_abscissa(gamma: float, n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if gamma == 1:
        return np.log(n)
    return n ** (1 - gamma) / (1 - gamma)


def f_n(beta: float, gamma: float, sign: int, n):
    """log f_n^{+-}(beta); the envelope itself is exp of this and may overflow."""
    out = log_f(beta, gamma, sign, n)
    return out if np.ndim(out) else float(out)


@dataclass
class RemainderReport:
    n: np.ndarray
    norms: np.ndarray
    partial_sums: np.ndarray
    tail_increment: float
    decay_exponent: float
    fit_residual: float

    @property
    def cauchy(self) -> bool:
        return self.tail_increment < 1e-8

    @property
    def summable(self) -> bool:
        return self.cauchy and self.decay_exponent > 1

    def to_dict(self) -> dict:
        return {
            "n_range": [int(self.n[0]), int(self.n[-1])],
            "total": float(self.partial_sums[-1]),
            "tail_increment": self.tail_increment,
            "decay_exponent": self.decay_exponent,
            "fit_residual": self.fit_residual,
            "cauchy": self.cauchy,
            "summable": self.summable,
        }

    def write_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["n", "norm_R", "partial_sum"])
            for n, r, s in zip(self.n, self.norms, self.partial_sums):
                w.writerow([int(n), repr(float(r)), repr(float(s))])


def remainder_matrices(k: float, params: ModelParams, kind, n_hi: int):
    """R_n for n = 1..n_hi as an (n_hi, 2, 2) array, plus T_n for the same n."""
    kind = PerturbationKind.parse(kind)
    l, a, b = model_coefficients(k, params, kind)
    lat = realize_lattice(params, kind, n_hi + 1)
    p, q = transfer_entries(k, lat, n_hi)
    n = np.arange(1, n_hi + 1, dtype=float)
    osc = np.exp(2j * params.omega * n) / n ** params.gamma
    T = np.zeros((n_hi, 2, 2), dtype=complex)
    T[:, 0, 1] = 1.0
    T[:, 1, 0] = p
    T[:, 1, 1] = q
    R = T.copy()
    R[:, 0, 1] -= 1.0
    R[:, 1, 0] -= -1.0 + a * osc + np.conj(a) * np.conj(osc)
    R[:, 1, 1] -= 2 * l + b * osc + np.conj(b) * np.conj(osc)
    return R, T, (l, a, b)


def _decay_fit(n: np.ndarray, norms: np.ndarray) -> tuple[float, float]:
    """Power-law exponent of the upper envelope of ||R_n||, from log-binned maxima."""
    lo = max(10.0, n[-1] / 1000.0)
    if n[-1] <= 2 * lo:
        lo = max(1.0, n[-1] / 20.0)
    edges = np.geomspace(lo, n[-1] + 1, 40)
    xs, ys = [], []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        m = (n >= e0) & (n < e1)
        if not np.any(m):
            continue
        top = norms[m].max()
        if top > 0:
            xs.append(math.log(math.sqrt(e0 * e1)))
            ys.append(math.log(top))
    if len(xs) < 3:
        return float("inf"), 0.0
    coef, res, *_ = np.polyfit(xs, ys, 1, full=True)
    rms = math.sqrt(res[0] / len(xs)) if len(res) else 0.0
    return float(-coef[0]), rms


def remainder_series(k: float, params: ModelParams, kind, n_range) -> RemainderReport:
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if not 1 <= n_lo < n_hi:
        raise ValidationError("n_range must satisfy 1 <= lo < hi")
    R, _, _ = remainder_matrices(k, params, kind, n_hi)
    norms_all = np.sqrt(np.sum(np.abs(R) ** 2, axis=(1, 2)))
    n = np.arange(n_lo, n_hi + 1)
    norms = norms_all[n_lo - 1:]
    sums = np.cumsum(norms)
    scale = max(1.0, float(np.max(norms_all)))
    tail = norms[-max(1, len(norms) // 10):]
    if np.all(norms_all <= 1e-14 * scale):
        expo, rms = float("inf"), 0.0
    else:
        expo, rms = _decay_fit(n.astype(float), norms)
    return RemainderReport(n=n, norms=norms, partial_sums=sums, tail_increment=float(tail.max()),
                           decay_exponent=expo, fit_residual=rms)
