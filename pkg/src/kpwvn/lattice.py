"""Model parameters and finite lattice prefixes.

Three lattices are supported: the periodic Kronig-Penney lattice, the
amplitude-perturbed lattice (Model I, strengths oscillate) and the
positionally perturbed lattice (Model II, centers oscillate). The
perturbation in both cases is ``c sin(2 omega n) / n**gamma + q_n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import zeta

from .errors import NonMonotoneLattice, OutputError, ValidationError


class PerturbationKind(str, enum.Enum):
    NONE = "none"
    AMPLITUDE = "amplitude"
    POSITIONAL = "positional"

    @classmethod
    def parse(cls, text: "str | PerturbationKind") -> "PerturbationKind":
        if isinstance(text, cls):
            return text
        aliases = {
            "none": cls.NONE, "unperturbed": cls.NONE,
            "amplitude": cls.AMPLITUDE, "i": cls.AMPLITUDE, "model1": cls.AMPLITUDE,
            "positional": cls.POSITIONAL, "ii": cls.POSITIONAL, "model2": cls.POSITIONAL,
        }
        try:
            return aliases[str(text).strip().lower()]
        except KeyError:
            raise ValidationError(f"unknown perturbation kind {text!r}") from None


@dataclass(frozen=True)
class TailSequence:
    """Concrete summable sequence ``q_n``, n >= 1.

    ``kind`` is one of ``zero``, ``geometric`` (q_n = s r**n),
    ``powerlaw`` (q_n = s n**-p) or ``file`` (explicit values, zero past
    the end).
    """

    kind: str = "zero"
    r: float = 0.0
    p: float = 2.0
    s: float = 0.0
    values: tuple = ()
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "geometric", "powerlaw", "file"):
            raise ValidationError(f"unknown tail sequence kind {self.kind!r}")
        if self.kind == "geometric" and not abs(self.r) < 1:
            raise ValidationError(f"geometric tail needs |r| < 1, got r={self.r}")
        if self.kind == "powerlaw" and not self.p > 1:
            raise ValidationError(f"power-law tail needs p > 1, got p={self.p}")
        if self.kind == "file" and not all(math.isfinite(v) for v in self.values):
            raise ValidationError("tail file contains non-finite values")

    @classmethod
    def zero(cls) -> "TailSequence":
        return cls()

    @classmethod
    def geometric(cls, r: float, s: float) -> "TailSequence":
        return cls(kind="geometric", r=float(r), s=float(s))

    @classmethod
    def power_law(cls, p: float, s: float) -> "TailSequence":
        return cls(kind="powerlaw", p=float(p), s=float(s))

    @classmethod
    def from_file(cls, path) -> "TailSequence":
        """Read one decimal per line; line 1 is q_1. Blank and ``#`` lines are skipped."""
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise OutputError(f"cannot read tail sequence file {path}: {exc}") from exc
        vals = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: not a number: {line!r}") from None
        return cls(kind="file", values=tuple(vals), source=str(path))

    @classmethod
    def parse(cls, spec: str) -> "TailSequence":
        """Parse ``zero``, ``geometric:r,s``, ``powerlaw:p,s`` or ``file:PATH``."""
        spec = spec.strip()
        name, _, rest = spec.partition(":")
        name = name.lower()
        if name == "zero":
            return cls.zero()
        if name == "file":
            return cls.from_file(rest)
        try:
            a, b = (float(t) for t in rest.split(","))
        except ValueError:
            raise ValidationError(f"cannot parse tail sequence {spec!r}") from None
        if name == "geometric":
            return cls.geometric(a, b)
        if name in ("powerlaw", "power"):
            return cls.power_law(a, b)
        raise ValidationError(f"cannot parse tail sequence {spec!r}")

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(n)
        if self.kind == "geometric":
            return self.s * np.power(self.r, n)
        if self.kind == "powerlaw":
            return self.s * np.power(n, -self.p)
        vals = np.asarray(self.values, dtype=float)
        idx = n.astype(np.int64) - 1
        out = np.zeros_like(n)
        ok = (idx >= 0) & (idx < len(vals))
        out[ok] = vals[idx[ok]]
        return out

    def l1_norm(self) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "geometric":
            r = abs(self.r)
            return abs(self.s) * r / (1.0 - r)
        if self.kind == "powerlaw":
            return abs(self.s) * float(zeta(self.p))
        return float(np.sum(np.abs(self.values)))

    def abs_bound(self, n: int) -> float:
        """Upper bound on sup_{m >= n} |q_m|."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "geometric":
            return abs(self.s) * abs(self.r) ** n
        if self.kind == "powerlaw":
            return abs(self.s) * n ** (-self.p)
        tail = np.abs(self.values[n - 1:]) if n - 1 < len(self.values) else np.zeros(1)
        return float(np.max(tail)) if len(tail) else 0.0

    def describe(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "geometric":
            return {"kind": "geometric", "r": self.r, "s": self.s}
        if self.kind == "powerlaw":
            return {"kind": "powerlaw", "p": self.p, "s": self.s}
        return {"kind": "file", "path": self.source, "length": len(self.values)}


@dataclass(frozen=True)
class ModelParams:
    d: float = 1.5
    alpha0: float = 4.0
    c: float = 0.0
    omega: float = 1.0
    gamma: float = 1.0
    kappa: float = 0.0
    q: TailSequence = field(default_factory=TailSequence)

    def __post_init__(self):
        self.validate()

    def validate(self):
        problems = []
        if not self.d > 0:
            problems.append(f"d must be positive (got {self.d})")
        if not 0 < self.omega < math.pi / 2:
            problems.append(f"omega must lie in (0, pi/2) (got {self.omega})")
        if not 0.5 < self.gamma <= 1:
            problems.append(f"gamma must lie in (1/2, 1] (got {self.gamma})")
        if not 0 <= self.kappa < math.pi:
            problems.append(f"kappa must lie in [0, pi) (got {self.kappa})")
        for name in ("alpha0", "c"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            raise ValidationError("; ".join(problems))

    def describe(self) -> dict:
        return {
            "d": self.d, "alpha0": self.alpha0, "c": self.c, "omega": self.omega,
            "gamma": self.gamma, "kappa": self.kappa, "q": self.q.describe(),
        }


@dataclass(frozen=True)
class LatticeRealization:
    """Centers x_1..x_nmax and strengths alpha_1..alpha_nmax; x_0 = 0 is implicit."""

    x: np.ndarray
    alpha: np.ndarray
    kind: PerturbationKind = PerturbationKind.NONE

    @property
    def n_max(self) -> int:
        return len(self.x)

    @property
    def x_full(self) -> np.ndarray:
        """Centers with x_0 = 0 prepended, so ``x_full[n] == x_n``."""
        return np.concatenate(([0.0], self.x))

    def spacings(self) -> np.ndarray:
        """``x_{n+1} - x_n`` for n = 0 .. n_max-1 (index 0 is x_1 - 0)."""
        return np.diff(self.x_full)


def wvn_sequence(params: ModelParams, n) -> np.ndarray:
    """The Wigner-von Neumann term ``c sin(2 omega n)/n**gamma + q_n``."""
    n = np.asarray(n, dtype=float)
    return params.c * np.sin(2 * params.omega * n) / n ** params.gamma + params.q(n)


def realize_lattice(params: ModelParams, kind, n_max: int) -> LatticeRealization:
    kind = PerturbationKind.parse(kind)
    if n_max < 2:
        raise ValidationError(f"n_max must be at least 2 (got {n_max})")
    n = np.arange(1, n_max + 1, dtype=float)
    x = n * params.d
    alpha = np.full(n_max, float(params.alpha0))
    if kind is PerturbationKind.AMPLITUDE:
        alpha = alpha + wvn_sequence(params, n)
    elif kind is PerturbationKind.POSITIONAL:
        x = x + wvn_sequence(params, n)
    gaps = np.diff(np.concatenate(([0.0], x)))
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        i = int(bad[0])
        raise NonMonotoneLattice(i, float(gaps[i]))
    return LatticeRealization(x=x, alpha=alpha, kind=kind)


def spacing_report(lat: LatticeRealization) -> tuple[float, float]:
    """Exact min and max of x_{n+1} - x_n over n >= 1 in the realized prefix."""
    if lat.n_max < 2:
        raise ValidationError("need at least two centers")
    gaps = np.diff(lat.x)
    return float(gaps.min()), float(gaps.max())


def convergence_index(params: ModelParams, eps: float) -> int:
    """Smallest N with |c|/n**gamma + sup_{m>=n}|q_m| < eps for every n >= N.

    Both terms are non-increasing bounds, so checking n = N suffices.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    c = abs(params.c)
    lo = 1
    if c > 0:
        lo = max(1, int(math.floor((c / eps) ** (1.0 / params.gamma))))
    n = lo
    while c / n ** params.gamma + params.q.abs_bound(n) >= eps:
        n = n + max(1, n // 8)
    # walk back to the smallest index that still works
    while n > 1 and c / (n - 1) ** params.gamma + params.q.abs_bound(n - 1) < eps:
        n -= 1
    return n
