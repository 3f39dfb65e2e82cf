"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without a
lookup table: 2 for invalid input, 3 for numerical trouble, 4 for I/O.
"""

from __future__ import annotations


class KPError(Exception):
    exit_code = 1


class ValidationError(KPError, ValueError):
    exit_code = 2


class NonMonotoneLattice(ValidationError):
    """Centers are not strictly increasing."""

    def __init__(self, index: int, gap: float):
        self.index = index
        self.gap = gap
        super().__init__(
            f"lattice is not strictly increasing: x[{index + 1}] - x[{index}] = {gap:.6g}"
        )


class BandEdgeUnsupported(ValidationError):
    pass


class NotCritical(ValidationError):
    pass


class NumericalError(KPError, ArithmeticError):
    exit_code = 3


class SingularSpacing(NumericalError):
    """|sin(k (x_{n+1} - x_n))| fell below the singularity threshold."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"s_{index}(k) = {value:.3g} is numerically zero")


class SingularSetHit(NumericalError):
    def __init__(self, which: str, value: float):
        self.which = which
        self.value = value
        super().__init__(f"k lies on the singular set: {which} = {value:.3g}")


class ResonantK(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, distance: float, N: int):
        self.distance = distance
        self.N = N
        super().__init__(
            f"backward seeds did not converge: directions differ by {distance:.3g} at N={N}"
        )


class EnvelopeMismatch(NumericalError):
    pass


class InsufficientLength(NumericalError):
    pass


class DegenerateBoundary(NumericalError):
    pass


class OutOfRange(KPError, IndexError):
    exit_code = 2


class OutputError(KPError, OSError):
    exit_code = 4
