"""Transfer matrices and renormalized propagation of generalized eigenvectors.

With xi_n = psi(x_n) and u_n = (xi_{n-1}, xi_n), a solution of the spectral
equation obeys u_{n+1} = T_n(k) u_n. Traces never store raw u_n: each step is
normalized and the logarithm of the norm is accumulated, so gap solutions
growing like |Phi|^n do not overflow.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import OutOfRange, SingularSpacing, ValidationError
from .lattice import LatticeRealization

SINGULAR_TOL = 1e-12


class Direction(str, enum.Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"


@dataclass(frozen=True)
class TransferMatrix:
    matrix: np.ndarray
    n: int
    k: complex

    @property
    def det(self) -> complex:
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


@dataclass(frozen=True)
class SolutionTrace:
    """Unit vectors uhat[i] and log-norms logmag[i] of u_{i+1}, i = 0..N-1."""

    k: complex
    uhat: np.ndarray
    logmag: np.ndarray
    direction: Direction = Direction.FORWARD

    @property
    def N(self) -> int:
        return len(self.logmag)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def u(self, n: int) -> tuple[np.ndarray, float]:
        """(unit vector, log-norm) of u_n."""
        if not 1 <= n <= self.N:
            raise OutOfRange(f"index {n} outside 1..{self.N}")
        return self.uhat[n - 1], float(self.logmag[n - 1])

    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        """xi_1..xi_N as (mantissa, log-scale) arrays."""
        return self.uhat[:, 1], self.logmag

    def truncated(self, M: int) -> "SolutionTrace":
        """The first M entries."""
        if not 1 <= M <= self.N:
            raise OutOfRange(f"length {M} outside 1..{self.N}")
        return SolutionTrace(self.k, self.uhat[:M], self.logmag[:M], self.direction)

    def rebased(self, n: int = 1) -> "SolutionTrace":
        """Same solution with log-norms shifted so that logmag at index n is zero."""
        return SolutionTrace(self.k, self.uhat, self.logmag - self.logmag[n - 1], self.direction)

    def write_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["n", "u0_re", "u0_im", "u1_re", "u1_im", "logmag"])
            for i in range(self.N):
                a, b = self.uhat[i]
                w.writerow([i + 1, repr(a.real), repr(a.imag), repr(b.real), repr(b.imag),
                            repr(float(self.logmag[i]))])


def _s(k, gaps):
    return np.sin(np.asarray(k, dtype=complex) * gaps)


def _check_singular(s: np.ndarray, offset: int = 0) -> None:
    bad = np.flatnonzero(np.abs(s) <= SINGULAR_TOL)
    if bad.size:
        i = int(bad[0])
        raise SingularSpacing(i + offset, float(abs(s[i])))


def transfer_entries(k, lat: LatticeRealization, n_last: int) -> tuple[np.ndarray, np.ndarray]:
    """Bottom-row entries (p_n, q_n) of T_n(k) for n = 1..n_last.

    T_n = [[0, 1], [p_n, q_n]],
    p_n = -s_n/s_{n-1},  q_n = sin(k(x_{n+1}-x_{n-1}))/s_{n-1} + alpha_n s_n/k.
    """
    if not 0 <= n_last <= lat.n_max - 1:
        raise OutOfRange(f"transfer matrices available for n = 1..{lat.n_max - 1}, asked {n_last}")
    k = complex(k)
    x = lat.x_full[: n_last + 2]
    gaps = np.diff(x)
    s = _s(k, gaps)  # s_0 .. s_{n_last}
    _check_singular(s)
    span = _s(k, x[2:] - x[:-2])  # sin(k(x_{n+1} - x_{n-1})), n = 1..n_last
    alpha = lat.alpha[:n_last]
    p = -s[1:] / s[:-1]
    q = span / s[:-1] + alpha * s[1:] / k
    return p.astype(complex), q.astype(complex)


def transfer_matrix(n: int, k, lat: LatticeRealization) -> TransferMatrix:
    if not 1 <= n <= lat.n_max - 1:
        raise OutOfRange(f"n must lie in 1..{lat.n_max - 1}")
    p, q = transfer_entries(k, lat, n)
    m = np.array([[0.0, 1.0], [p[-1], q[-1]]], dtype=complex)
    return TransferMatrix(m, n, complex(k))


@njit(cache=True, nogil=True)
def _forward_kernel(p, q, u0, u1, logmag0):
    m = p.shape[0] + 1
    uh = np.empty((m, 2), dtype=np.complex128)
    lm = np.empty(m, dtype=np.float64)
    uh[0, 0] = u0
    uh[0, 1] = u1
    lm[0] = logmag0
    a = u0
    b = u1
    acc = logmag0
    for i in range(m - 1):
        na = b
        nb = p[i] * a + q[i] * b
        r = math.sqrt(na.real * na.real + na.imag * na.imag + nb.real * nb.real + nb.imag * nb.imag)
        a = na / r
        b = nb / r
        acc += math.log(r)
        uh[i + 1, 0] = a
        uh[i + 1, 1] = b
        lm[i + 1] = acc
    return uh, lm


@njit(cache=True, nogil=True)
def _backward_kernel(p, q, a_end, b_end, logmag_end):
    m = p.shape[0] + 1
    uh = np.empty((m, 2), dtype=np.complex128)
    lm = np.empty(m, dtype=np.float64)
    uh[m - 1, 0] = a_end
    uh[m - 1, 1] = b_end
    lm[m - 1] = logmag_end
    a = a_end
    b = b_end
    acc = logmag_end
    for i in range(m - 2, -1, -1):
        # inverse of [[0, 1], [p, q]] is [[-q/p, 1/p], [1, 0]]
        na = (b - q[i] * a) / p[i]
        nb = a
        r = math.sqrt(na.real * na.real + na.imag * na.imag + nb.real * nb.real + nb.imag * nb.imag)
        a = na / r
        b = nb / r
        acc += math.log(r)
        uh[i, 0] = a
        uh[i, 1] = b
        lm[i] = acc
    return uh, lm


def _unit(v) -> tuple[np.ndarray, float]:
    v = np.asarray(v, dtype=complex).reshape(2)
    r = float(np.linalg.norm(v))
    if not r > 0 or not math.isfinite(r):
        raise ValidationError("initial vector must be finite and non-zero")
    return v / r, math.log(r)


def propagate(k, lat: LatticeRealization, u1, N: int) -> SolutionTrace:
    """Forward propagation u_1 -> u_N with per-step renormalization."""
    if N < 1 or N > lat.n_max - 1:
        raise OutOfRange(f"N must lie in 1..{lat.n_max - 1} (got {N})")
    v, lg = _unit(u1)
    p, q = transfer_entries(k, lat, N - 1)
    uh, lm = _forward_kernel(p, q, v[0], v[1], lg)
    return SolutionTrace(complex(k), uh, lm, Direction.FORWARD)


def propagate_backward(k, lat: LatticeRealization, uN, N: int) -> SolutionTrace:
    """Backward propagation u_N -> u_1 applying closed-form inverses of T_n."""
    if N < 1 or N > lat.n_max - 1:
        raise OutOfRange(f"N must lie in 1..{lat.n_max - 1} (got {N})")
    v, lg = _unit(uN)
    p, q = transfer_entries(k, lat, N - 1)
    uh, lm = _backward_kernel(p, q, v[0], v[1], lg)
    return SolutionTrace(complex(k), uh, lm, Direction.BACKWARD)


def recurrence_residual(trace: SolutionTrace, lat: LatticeRealization, indices=None) -> float:
    """Max relative mismatch of u_{n+1} = T_n u_n, compared in log-balanced form."""
    if trace.N < 2:
        return 0.0
    p, q = transfer_entries(trace.k, lat, trace.N - 1)
    if indices is None:
        idx = np.arange(trace.N - 1)
    else:
        idx = np.asarray(indices, dtype=int) - 1
        idx = idx[(idx >= 0) & (idx < trace.N - 1)]
    a, b = trace.uhat[idx, 0], trace.uhat[idx, 1]
    pred = np.stack((b, p[idx] * a + q[idx] * b), axis=1)
    nxt = trace.uhat[idx + 1] * np.exp(trace.logmag[idx + 1] - trace.logmag[idx])[:, None]
    scale = np.maximum(np.linalg.norm(pred, axis=1), np.linalg.norm(nxt, axis=1))
    return float(np.max(np.linalg.norm(pred - nxt, axis=1) / scale))


def reconstruct_psi(trace: SolutionTrace, k, lat: LatticeRealization, grid) -> list:
    """psi(x) between centers as (x, mantissa, log-scale) triples.

    On [x_n, x_{n+1}], psi = (xi_n sin(k(x_{n+1}-x)) + xi_{n+1} sin(k(x-x_n)))/s_n,
    and (xi_n, xi_{n+1}) = u_{n+1} is read from the trace.
    """
    k = complex(k)
    xf = lat.x_full
    out = []
    for xv in np.atleast_1d(np.asarray(grid, dtype=float)):
        n = int(np.searchsorted(xf, xv, side="right")) - 1
        if n == trace.N and n < len(xf) and xv == xf[n]:
            n -= 1  # right end of the last covered interval
        if n < 0 or n + 1 > trace.N or n + 1 >= len(xf):
            raise OutOfRange(f"x = {xv} is not covered by the trace")
        lo, hi = xf[n], xf[n + 1]
        s = np.sin(k * (hi - lo))
        if abs(s) <= SINGULAR_TOL:
            raise SingularSpacing(n, float(abs(s)))
        a, b = trace.uhat[n]
        if xv == lo:
            val = a
        elif xv == hi:
            val = b
        else:
            val = (a * np.sin(k * (hi - xv)) + b * np.sin(k * (xv - lo))) / s
        out.append((float(xv), complex(val), float(trace.logmag[n])))
    return out


def psi_at_origin(trace: SolutionTrace, k, lat: LatticeRealization) -> tuple[complex, complex, float]:
    """(psi(0), psi'(0), log-scale); psi'(0) = k (xi_1 - xi_0 c_0)/s_0."""
    k = complex(k)
    x1 = lat.x[0]
    s0, c0 = np.sin(k * x1), np.cos(k * x1)
    if abs(s0) <= SINGULAR_TOL:
        raise SingularSpacing(0, float(abs(s0)))
    xi0, xi1 = trace.uhat[0]
    return complex(xi0), complex(k * (xi1 - xi0 * c0) / s0), float(trace.logmag[0])


def boundary_vector(kappa: float, k, lat: LatticeRealization) -> np.ndarray:
    """u_1 of the solution with psi(0) = sin(kappa), psi'(0) = cos(kappa)."""
    k = complex(k)
    x1 = lat.x[0]
    xi0 = math.sin(kappa)
    xi1 = xi0 * np.cos(k * x1) + math.cos(kappa) * np.sin(k * x1) / k
    return np.array([xi0, xi1], dtype=complex)


def wronskian_series(trace_a: SolutionTrace, trace_b: SolutionTrace, lat: LatticeRealization):
    """(xi_n eta_{n+1} - xi_{n+1} eta_n)/s_n for n = 0..N-1 as (mantissa, log-scale)."""
    if trace_a.k != trace_b.k:
        raise ValidationError("traces must share the wavenumber")
    m = min(trace_a.N, trace_b.N)
    k = trace_a.k
    s = _s(k, lat.spacings()[:m])
    _check_singular(s)
    ua, ub = trace_a.uhat[:m], trace_b.uhat[:m]
    det = ua[:, 0] * ub[:, 1] - ua[:, 1] * ub[:, 0]
    return det / s, trace_a.logmag[:m] + trace_b.logmag[:m]


def discrete_wronskian(trace_a: SolutionTrace, trace_b: SolutionTrace, k, lat: LatticeRealization,
                       n: int) -> tuple[complex, float]:
    m = min(trace_a.N, trace_b.N)
    if not 0 <= n <= m - 1:
        raise OutOfRange(f"Wronskian index must lie in 0..{m - 1}")
    if complex(k) != trace_a.k:
        raise ValidationError("k does not match the traces")
    s = complex(np.sin(complex(k) * lat.spacings()[n]))
    if abs(s) <= SINGULAR_TOL:
        raise SingularSpacing(n, abs(s))
    ua, ub = trace_a.uhat[n], trace_b.uhat[n]
    det = ua[0] * ub[1] - ua[1] * ub[0]
    return complex(det / s), float(trace_a.logmag[n] + trace_b.logmag[n])


def wronskian_drift(trace_a: SolutionTrace, trace_b: SolutionTrace, lat: LatticeRealization) -> float:
    """max_n |W_n - W_0| / |W_0|."""
    mant, lg = wronskian_series(trace_a, trace_b, lat)
    w = mant * np.exp(lg - lg[0])
    return float(np.max(np.abs(w - w[0])) / abs(w[0]))


def determinant_telescoping(k, lat: LatticeRealization, N: int) -> float:
    """Relative error of prod_{n=1}^{N} det T_n against s_N/s_0, in the log domain."""
    p, _ = transfer_entries(k, lat, N)
    det = -p
    log_prod = np.sum(np.log(np.abs(det)))
    phase = np.prod(det / np.abs(det))
    s = _s(k, lat.spacings()[: N + 1])
    target = s[N] / s[0]
    log_err = log_prod - math.log(abs(target))
    ratio = math.exp(log_err) * phase / (target / abs(target))
    return float(abs(ratio - 1))


def direction_distance(u, v) -> float:
    """Phase-invariant distance sqrt(1 - |<u, v>|^2) between two directions."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    c = abs(np.vdot(u, v))
    return float(math.sqrt(max(0.0, 1.0 - c * c)))


def real_signal(values: np.ndarray) -> np.ndarray:
    """Rotate a complex sequence by one global phase so it is (nearly) real and return it."""
    values = np.asarray(values, dtype=complex)
    i = int(np.argmax(np.abs(values)))
    ph = values[i] / abs(values[i]) if abs(values[i]) > 0 else 1.0
    return (values / ph).real
